#include "spectool/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "spectool/error.hpp"
#include "spectool/io.hpp"
#include "spectool/kernels.hpp"
#include "spectool/rng.hpp"

namespace spectool {

PointCloud::PointCloud(Eigen::MatrixXd points, int manifold_dim)
    : points_(std::move(points)), manifold_dim_(manifold_dim) {
  if (points_.rows() < 2) throw ValidationError("point cloud needs at least 2 points");
  if (points_.cols() < 1) throw ValidationError("point cloud needs ambient dimension >= 1");
  if (!points_.allFinite()) throw ValidationError("point cloud has non-finite coordinates");
  if (manifold_dim_ < 1 || manifold_dim_ > points_.cols()) {
    std::ostringstream os;
    os << "manifold dimension " << manifold_dim_ << " must lie in [1, " << points_.cols() << "]";
    throw ValidationError(os.str());
  }
}

SymmetricOperator::SymmetricOperator(Eigen::MatrixXd matrix, double symmetry_tol)
    : matrix_(std::move(matrix)), symmetry_tol_(symmetry_tol) {
  if (matrix_.rows() != matrix_.cols()) throw ValidationError("operator matrix must be square");
  if (matrix_.rows() == 0) throw ValidationError("operator matrix is empty");
  if (!(symmetry_tol_ >= 0.0)) throw ValidationError("symmetry_tol must be nonnegative");
  if (!matrix_.allFinite()) throw ValidationError("operator matrix has non-finite entries");
  const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
  if (asym > symmetry_tol_) {
    std::ostringstream os;
    os << "operator matrix asymmetry " << asym << " exceeds symmetry_tol " << symmetry_tol_;
    throw ValidationError(os.str());
  }
}

Eigen::MatrixXd SymmetricOperator::symmetrize(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

int manifold_dimension(const AnalyticManifold& m) {
  return std::visit(
      [](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Circle>) return 1;
        else return 2;
      },
      m);
}

void validate(const AnalyticManifold& m) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FlatTorus>) {
          if (!(v.r1 > 0.0 && v.r2 > 0.0)) throw ValidationError("torus radii must be positive");
        } else {
          if (!(v.radius > 0.0)) throw ValidationError("manifold radius must be positive");
        }
      },
      m);
}

namespace {

// Squared distance to the k-th nearest neighbour of each point.
Eigen::VectorXd kth_neighbour_sq(const Eigen::MatrixXd& d2, Eigen::Index k) {
  const Eigen::Index n = d2.rows();
  Eigen::VectorXd out(n);
  std::vector<double> row(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) row[c++] = d2(i, j);
    }
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    out(i) = row[static_cast<std::size_t>(k - 1)];
  }
  return out;
}

double heuristic_from_sq(const Eigen::MatrixXd& d2) {
  const Eigen::Index n = d2.rows();
  const auto k = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::ceil(2.0 * std::log(static_cast<double>(n)))), 1, n - 1);
  const double mean_dist = kth_neighbour_sq(d2, k).cwiseSqrt().mean();
  const double bw = mean_dist * mean_dist;
  if (!(bw > 0.0)) {
    throw DegeneracyError(
        "kernel bandwidth heuristic is zero: the point cloud is degenerate (coincident points)");
  }
  return bw;
}

Eigen::MatrixXd checked_sq_distances(const PointCloud& cloud) {
  Eigen::MatrixXd d2 = kernels::squared_distances(cloud.points());
  if (!d2.allFinite()) throw ValidationError("point cloud produces non-finite distances");
  return d2;
}

}  // namespace

double heuristic_bandwidth(const PointCloud& cloud) {
  return heuristic_from_sq(checked_sq_distances(cloud));
}

KernelLaplacian kernel_laplacian_detailed(const PointCloud& cloud,
                                          std::optional<double> bandwidth, KernelMode mode) {
  const Eigen::Index n = cloud.size();
  if (bandwidth && !(*bandwidth > 0.0 && std::isfinite(*bandwidth))) {
    throw ValidationError("kernel bandwidth must be a positive finite number");
  }
  if (mode.knn && (*mode.knn < 1 || *mode.knn >= n)) {
    std::ostringstream os;
    os << "knn mode requires 1 <= k < n (k = " << *mode.knn << ", n = " << n << ")";
    throw ValidationError(os.str());
  }
  const Eigen::MatrixXd d2 = checked_sq_distances(cloud);
  const double t = bandwidth ? *bandwidth : heuristic_from_sq(d2);
  Eigen::MatrixXd w = kernels::gaussian_affinity(d2, t);

  const double d = cloud.manifold_dim();
  const double four_pi = 4.0 * std::numbers::pi;
  // Mean kernel density estimate (1/n) sum_j W_ij / (4 pi t)^{d/2}.
  const double density = (w.sum() + static_cast<double>(n)) /
                         (static_cast<double>(n) * static_cast<double>(n) *
                          std::pow(four_pi * t, 0.5 * d));
  if (!(density > 0.0)) {
    throw DegeneracyError("kernel density estimate vanished; bandwidth too small for the cloud");
  }
  // Divide out the relative sampling density (W_ij / (q_i q_j), mean q = 1).
  // Uniform clouds are unchanged in the limit; finite random clouds lose the
  // local clumping that otherwise biases the low eigenvalues downwards.
  {
    Eigen::VectorXd q = (w.rowwise().sum().array() + 1.0).matrix();
    q /= q.mean();
    const Eigen::VectorXd iq = q.cwiseInverse();
    w = iq.asDiagonal() * w * iq.asDiagonal();
  }

  if (mode.knn) {
    const Eigen::Index k = *mode.knn;
    Eigen::MatrixXd kept = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t c = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) order[c++] = j;
      }
      std::partial_sort(order.begin(), order.begin() + k, order.begin() + (n - 1),
                        [&](Eigen::Index a, Eigen::Index b) {
                          return d2(i, a) < d2(i, b) || (d2(i, a) == d2(i, b) && a < b);
                        });
      for (Eigen::Index c2 = 0; c2 < k; ++c2) {
        const Eigen::Index j = order[static_cast<std::size_t>(c2)];
        kept(i, j) = w(i, j);
      }
    }
    w = kept.cwiseMax(kept.transpose());
  }

  const double scale = 1.0 / (static_cast<double>(n) * std::pow(t, 0.5 * (d + 2.0)) *
                              std::pow(four_pi, 0.5 * d) * density);
  Eigen::MatrixXd lap = -w;
  lap.diagonal() = w.rowwise().sum();
  lap *= scale;
  return KernelLaplacian{SymmetricOperator(SymmetricOperator::symmetrize(lap), 0.0), t, scale};
}

SymmetricOperator kernel_laplacian(const PointCloud& cloud, std::optional<double> bandwidth,
                                   KernelMode mode) {
  return kernel_laplacian_detailed(cloud, bandwidth, mode).op;
}

SymmetricOperator graph_laplacian(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ValidationError("adjacency must be square");
  Eigen::MatrixXd a = SymmetricOperator::symmetrize(adjacency);
  a.diagonal().setZero();
  Eigen::MatrixXd lap = -a;
  lap.diagonal() = a.rowwise().sum();
  return SymmetricOperator(SymmetricOperator::symmetrize(lap), 0.0);
}

SymmetricOperator normalized_laplacian(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ValidationError("adjacency must be square");
  Eigen::MatrixXd a = SymmetricOperator::symmetrize(adjacency);
  a.diagonal().setZero();
  if ((a.array() < 0.0).any()) throw ValidationError("adjacency must be nonnegative");
  const Eigen::VectorXd deg = a.rowwise().sum();
  Eigen::VectorXd inv_sqrt(deg.size());
  for (Eigen::Index i = 0; i < deg.size(); ++i) {
    inv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  }
  Eigen::MatrixXd lap = -(inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal());
  for (Eigen::Index i = 0; i < deg.size(); ++i) lap(i, i) = deg(i) > 0.0 ? 1.0 : 0.0;
  return SymmetricOperator(SymmetricOperator::symmetrize(lap), 0.0);
}

Spectrum eigendecompose(const SymmetricOperator& op, std::optional<Eigen::Index> count,
                        bool indefinite) {
  const Eigen::Index n = op.size();
  const Eigen::Index m = count ? *count : n;
  if (m < 1 || m > n) {
    std::ostringstream os;
    os << "eigendecompose: count " << m << " outside [1, " << n << "]";
    throw ValidationError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      SymmetricOperator::symmetrize(op.matrix()), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigendecompose: symmetric QR iteration did not converge (n = " << n
       << ", Eigen info code " << static_cast<int>(solver.info()) << ", max sweeps "
       << Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>::m_maxIterations << " per eigenvalue)";
    throw NumericError(os.str());
  }
  // roundoff scale comes from the full spectrum, not the retained head
  const double scale = solver.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::VectorXd values = solver.eigenvalues().head(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(values(i)) <= 1e-10 * scale) values(i) = 0.0;
  }
  return Spectrum(std::move(values), Eigen::MatrixXd(solver.eigenvectors().leftCols(m)),
                  indefinite ? SpectrumSource::kIndefinite : SpectrumSource::kDiscrete);
}

namespace {

Eigen::VectorXd torus_eigenvalues(const FlatTorus& t, Eigen::Index count) {
  // Grow the integer box until the count-th value is provably below every
  // eigenvalue left out of the box.
  long k1 = 2, k2 = 2;
  for (;;) {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>((2 * k1 + 1) * (2 * k2 + 1)));
    for (long a = -k1; a <= k1; ++a) {
      for (long b = -k2; b <= k2; ++b) {
        vals.push_back((a / t.r1) * (a / t.r1) + (b / t.r2) * (b / t.r2));
      }
    }
    std::sort(vals.begin(), vals.end());
    const double outside = std::min(std::pow((k1 + 1) / t.r1, 2), std::pow((k2 + 1) / t.r2, 2));
    if (static_cast<Eigen::Index>(vals.size()) >= count &&
        vals[static_cast<std::size_t>(count - 1)] < outside) {
      Eigen::VectorXd out(count);
      for (Eigen::Index i = 0; i < count; ++i) out(i) = vals[static_cast<std::size_t>(i)];
      return out;
    }
    k1 *= 2;
    k2 *= 2;
  }
}

}  // namespace

Spectrum analytic_spectrum(const AnalyticManifold& m, Eigen::Index count) {
  validate(m);
  if (count < 1) throw ValidationError("analytic_spectrum: count must be >= 1");
  Eigen::VectorXd ev(count);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Circle>) {
          const double r2 = v.radius * v.radius;
          for (Eigen::Index i = 0; i < count; ++i) {
            const double k = static_cast<double>((i + 1) / 2);
            ev(i) = k * k / r2;
          }
        } else if constexpr (std::is_same_v<T, Sphere>) {
          const double r2 = v.radius * v.radius;
          Eigen::Index i = 0;
          for (long l = 0; i < count; ++l) {
            const double lam = static_cast<double>(l * (l + 1)) / r2;
            for (long c = 0; c < 2 * l + 1 && i < count; ++c) ev(i++) = lam;
          }
        } else {
          ev = torus_eigenvalues(v, count);
        }
      },
      m);
  return Spectrum(std::move(ev), std::nullopt, SpectrumSource::kAnalytic);
}

PointCloud sample_manifold(const AnalyticManifold& m, Eigen::Index n, std::uint64_t seed) {
  validate(m);
  if (n < 2) throw ValidationError("sample_manifold: need n >= 2");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  return std::visit(
      [&](const auto& v) -> PointCloud {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Circle>) {
          Eigen::MatrixXd p(n, 2);
          for (Eigen::Index i = 0; i < n; ++i) {
            const double th = angle(rng);
            p(i, 0) = v.radius * std::cos(th);
            p(i, 1) = v.radius * std::sin(th);
          }
          return PointCloud(std::move(p), 1);
        } else if constexpr (std::is_same_v<T, Sphere>) {
          Eigen::MatrixXd p(n, 3);
          for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Vector3d x;
            do {
              x = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
            } while (x.norm() < 1e-12);
            p.row(i) = v.radius * x.normalized().transpose();
          }
          return PointCloud(std::move(p), 2);
        } else {
          Eigen::MatrixXd p(n, 4);
          for (Eigen::Index i = 0; i < n; ++i) {
            const double a = angle(rng);
            const double b = angle(rng);
            p(i, 0) = v.r1 * std::cos(a);
            p(i, 1) = v.r1 * std::sin(a);
            p(i, 2) = v.r2 * std::cos(b);
            p(i, 3) = v.r2 * std::sin(b);
          }
          return PointCloud(std::move(p), 2);
        }
      },
      m);
}

PointCloud read_point_cloud_csv(const std::filesystem::path& path, int manifold_dim) {
  const auto rows = io::read_numeric_csv(path);
  if (rows.empty()) throw ValidationError(path.string() + ": no points");
  const std::size_t dim = rows.front().size();
  Eigen::MatrixXd p(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) {
      throw ValidationError(path.string() + ": row " + std::to_string(i + 1) +
                            " has a different number of coordinates");
    }
    for (std::size_t c = 0; c < dim; ++c) {
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  return PointCloud(std::move(p), manifold_dim);
}

void write_point_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::vector<std::string> header;
  for (Eigen::Index c = 0; c < cloud.ambient_dim(); ++c) header.push_back("x" + std::to_string(c));
  io::CsvWriter csv(path, header);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (Eigen::Index c = 0; c < cloud.ambient_dim(); ++c) csv.cell(cloud.points()(i, c));
    csv.end_row();
  }
}

}  // namespace spectool
