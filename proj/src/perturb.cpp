#include "spectool/perturb.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "spectool/error.hpp"
#include "spectool/rng.hpp"

namespace spectool {

PerturbationFamily parse_family(const std::string& name) {
  if (name == "scalar") return PerturbationFamily::kScalar;
  if (name == "eigenbasis_diagonal") return PerturbationFamily::kEigenbasisDiagonal;
  if (name == "symmetrized_dense") return PerturbationFamily::kSymmetrizedDense;
  throw ValidationError("unknown perturbation family '" + name +
                        "' (expected scalar, eigenbasis_diagonal, symmetrized_dense)");
}

std::string to_string(PerturbationFamily f) {
  switch (f) {
    case PerturbationFamily::kScalar: return "scalar";
    case PerturbationFamily::kEigenbasisDiagonal: return "eigenbasis_diagonal";
    case PerturbationFamily::kSymmetrizedDense: return "symmetrized_dense";
  }
  return "scalar";
}

bool commutes_with_base(PerturbationFamily f) { return f != PerturbationFamily::kSymmetrizedDense; }

double symmetric_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("symmetric_norm: eigensolver failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::VectorXd perturbation_signs(Eigen::Index n, std::uint64_t seed) {
  Rng rng = make_rng(fork_seed(seed, 1));
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = coin(rng) ? 1.0 : -1.0;
  return s;
}

namespace {

void check_epsilon(const PerturbationSpec& spec) {
  if (!(spec.epsilon >= 0.0) || !std::isfinite(spec.epsilon)) {
    throw ValidationError("perturbation epsilon must be a finite value >= 0");
  }
}

Eigen::MatrixXd rescale(Eigen::MatrixXd e, double epsilon) {
  e = 0.5 * (e + e.transpose());
  if (epsilon == 0.0) return Eigen::MatrixXd::Zero(e.rows(), e.cols());
  const double norm = symmetric_norm(e);
  if (!(norm > 0.0)) throw NumericError("generated perturbation has zero norm");
  e *= epsilon / norm;
  return 0.5 * (e + e.transpose());
}

Eigen::MatrixXd dense_perturbation(Eigen::Index n, const PerturbationSpec& spec) {
  Rng rng = make_rng(fork_seed(spec.seed, 2));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = gauss(rng);
  }
  return rescale(0.5 * (g + g.transpose()), spec.epsilon);
}

}  // namespace

Eigen::MatrixXd generate_perturbation(const PerturbationSpec& spec, const Spectrum& base) {
  check_epsilon(spec);
  switch (spec.family) {
    case PerturbationFamily::kScalar: {
      const Eigen::Index n = base.has_eigenvectors() ? base.dimension() : base.size();
      return spec.epsilon * Eigen::MatrixXd::Identity(n, n);
    }
    case PerturbationFamily::kEigenbasisDiagonal: {
      const Eigen::MatrixXd& q = base.eigenvectors();
      if (q.cols() != q.rows()) {
        throw StateError("eigenbasis_diagonal perturbation needs the full eigenbasis (" +
                         std::to_string(q.cols()) + " of " + std::to_string(q.rows()) +
                         " eigenvectors present)");
      }
      const Eigen::VectorXd s = perturbation_signs(q.cols(), spec.seed);
      return rescale(q * (spec.epsilon * s).asDiagonal() * q.transpose(), spec.epsilon);
    }
    case PerturbationFamily::kSymmetrizedDense: {
      const Eigen::Index n = base.has_eigenvectors() ? base.dimension() : base.size();
      return dense_perturbation(n, spec);
    }
  }
  throw ValidationError("unknown perturbation family");
}

Eigen::MatrixXd generate_perturbation(const PerturbationSpec& spec, const SymmetricOperator& base) {
  check_epsilon(spec);
  if (spec.family == PerturbationFamily::kEigenbasisDiagonal) {
    return generate_perturbation(spec, eigendecompose(base));
  }
  if (spec.family == PerturbationFamily::kScalar) {
    return spec.epsilon * Eigen::MatrixXd::Identity(base.size(), base.size());
  }
  return dense_perturbation(base.size(), spec);
}

RelativePerturbation apply_relative(const SymmetricOperator& base, const Eigen::MatrixXd& e,
                                    RelativeMode mode) {
  const Eigen::MatrixXd& l = base.matrix();
  if (e.rows() != l.rows() || e.cols() != l.cols()) {
    std::ostringstream os;
    os << "apply_relative: E is " << e.rows() << "x" << e.cols() << ", operator is " << l.rows()
       << "x" << l.cols();
    throw ValidationError(os.str());
  }
  if (!e.allFinite()) throw ValidationError("apply_relative: E has non-finite entries");
  const Eigen::MatrixXd el = e * l;
  const Eigen::MatrixXd le = el.transpose();  // (E L)^T = L E for symmetric E, L
  RelativePerturbation out{SymmetricOperator(l), 0.0, false};
  out.asymmetry = (el - le).norm();
  out.large_norm = e.size() > 0 && symmetric_norm(0.5 * (e + e.transpose())) >= 1.0;
  Eigen::MatrixXd lp;
  if (mode == RelativeMode::kLiteral) {
    lp = SymmetricOperator::symmetrize(l + el);
  } else {
    lp = l + 0.5 * (el + le);
    lp = SymmetricOperator::symmetrize(lp);
  }
  out.op = SymmetricOperator(std::move(lp), 0.0);
  return out;
}

double measured_epsilon(const SymmetricOperator& base, const SymmetricOperator& perturbed) {
  if (base.size() != perturbed.size()) throw ValidationError("measured_epsilon: size mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(base.matrix());
  if (solver.info() != Eigen::Success) throw NumericError("measured_epsilon: eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (!(top > 0.0)) throw ValidationError("measured_epsilon: base operator has rank zero");
  const double tol = 1e-10 * top;
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv(i) = std::abs(ev(i)) > tol ? 1.0 / ev(i) : 0.0;
  const Eigen::MatrixXd& q = solver.eigenvectors();
  const Eigen::MatrixXd pinv = q * inv.asDiagonal() * q.transpose();
  const Eigen::MatrixXd a = (perturbed.matrix() - base.matrix()) * pinv;
  // ||A||_2 = sqrt(lambda_max(A^T A)).
  return std::sqrt(std::max(0.0, symmetric_norm(a.transpose() * a)));
}

}  // namespace spectool
