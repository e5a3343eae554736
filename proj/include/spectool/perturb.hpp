#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "spectool/operators.hpp"
#include "spectool/spectrum.hpp"

namespace spectool {

enum class PerturbationFamily {
  kScalar,               ///< E = eps I
  kEigenbasisDiagonal,   ///< E = Q diag(eps s_i) Q^T, s_i = +-1
  kSymmetrizedDense,     ///< E = eps (G + G^T) / ||G + G^T||, G Gaussian
};

PerturbationFamily parse_family(const std::string& name);
std::string to_string(PerturbationFamily f);
/// True for the families that are diagonal in the eigenbasis of the base
/// operator, where E L is symmetric and both application modes agree.
bool commutes_with_base(PerturbationFamily f);

struct PerturbationSpec {
  PerturbationFamily family = PerturbationFamily::kEigenbasisDiagonal;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

/// Symmetric E with spectral norm epsilon. EigenbasisDiagonal needs the full
/// set of base eigenvectors.
Eigen::MatrixXd generate_perturbation(const PerturbationSpec& spec, const Spectrum& base);
Eigen::MatrixXd generate_perturbation(const PerturbationSpec& spec, const SymmetricOperator& base);

/// Signs s_i used by EigenbasisDiagonal for a given seed.
Eigen::VectorXd perturbation_signs(Eigen::Index n, std::uint64_t seed);

enum class RelativeMode {
  kLiteral,      ///< L + E L, then (A + A^T)/2
  kSymmetrized,  ///< L + (E L + L E)/2
};

struct RelativePerturbation {
  SymmetricOperator op;
  /// ||E L - L E||_F, the asymmetry removed by the literal mode.
  double asymmetry = 0.0;
  /// Set when ||E|| >= 1, where L' may stop being positive semidefinite.
  bool large_norm = false;
};

RelativePerturbation apply_relative(const SymmetricOperator& base, const Eigen::MatrixXd& e,
                                    RelativeMode mode = RelativeMode::kLiteral);

/// ||(L' - L) L^+||_2 with L^+ the pseudoinverse on the nonzero eigenvalues.
double measured_epsilon(const SymmetricOperator& base, const SymmetricOperator& perturbed);

/// Largest |eigenvalue| of a symmetric matrix.
double symmetric_norm(const Eigen::MatrixXd& a);

}  // namespace spectool
