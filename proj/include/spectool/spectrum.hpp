#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace spectool {

// kIndefinite: eigenpairs of a perturbed operator, which may dip below zero.
enum class SpectrumSource { kDiscrete, kAnalytic, kIndefinite };

/// Ordered eigenpairs of a symmetric positive semidefinite operator.
///
/// Eigenvalues are stored nondecreasing. Values in [-tol, 0) with
/// tol = 1e-8 * max(1, |lambda_max|) are clamped to exactly zero; anything more
/// negative is rejected, except for kIndefinite spectra. Eigenvectors, when present, are the columns of an
/// n x count matrix and must be orthonormal within 1e-8. Analytic spectra
/// carry no eigenvectors.
class Spectrum {
 public:
  Spectrum(Eigen::VectorXd eigenvalues, std::optional<Eigen::MatrixXd> eigenvectors,
           SpectrumSource source);

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(Eigen::Index i) const { return eigenvalues_(i); }
  Eigen::Index size() const { return eigenvalues_.size(); }
  double max_eigenvalue() const { return eigenvalues_.size() ? eigenvalues_(size() - 1) : 0.0; }

  bool has_eigenvectors() const { return eigenvectors_.has_value(); }
  /// Throws StateError for spectra without eigenvectors.
  const Eigen::MatrixXd& eigenvectors() const;
  /// Length of the eigenvectors (the sample count n); throws StateError if absent.
  Eigen::Index dimension() const { return eigenvectors().rows(); }

  SpectrumSource source() const { return source_; }

 private:
  Eigen::VectorXd eigenvalues_;
  std::optional<Eigen::MatrixXd> eigenvectors_;
  SpectrumSource source_;
};

/// A contiguous run [start, end) of sorted eigenvalue indices, with the
/// smallest (lo) and largest (hi) eigenvalue in the run.
struct SpectrumGroup {
  Eigen::Index start = 0;
  Eigen::Index end = 0;
  double lo = 0.0;
  double hi = 0.0;

  Eigen::Index count() const { return end - start; }
  bool operator==(const SpectrumGroup&) const = default;
};

/// A gamma-separated partition of a spectrum. Zero eigenvalues live in a
/// dedicated zero group, since the ratio test is undefined at zero; `groups`
/// holds the positive eigenvalues. M counts only the positive groups.
struct SpectrumPartition {
  double gamma = 0.0;
  std::optional<SpectrumGroup> zero_group;
  std::vector<SpectrumGroup> groups;
  /// Eigenvalues at or below this value were treated as zero.
  double zero_threshold = 0.0;

  std::size_t M() const { return groups.size(); }
  /// Zero group (if any) followed by the positive groups.
  std::vector<SpectrumGroup> all_groups() const;
  std::size_t total_groups() const { return groups.size() + (zero_group ? 1 : 0); }
  /// Index into all_groups() for each eigenvalue index.
  std::vector<std::size_t> group_of_index() const;
  Eigen::Index covered() const;
};

/// Greedy left-to-right gamma partition: a new group starts whenever
/// lambda_{k+1} > lambda_k / (1 - gamma). Requires 0 < gamma < 1 and at least
/// one positive eigenvalue.
SpectrumPartition gamma_partition(const Spectrum& spec, double gamma);
SpectrumPartition gamma_partition(const Eigen::VectorXd& eigenvalues, double gamma);

/// Exhaustive check that every pair of positive eigenvalues in different
/// groups satisfies |lambda_i / lambda_j - 1| > gamma, and that the groups are
/// disjoint, contiguous and cover every index.
bool verify_partition(const Eigen::VectorXd& eigenvalues, const SpectrumPartition& partition);

/// N1 = ceil((c1 (gamma + 1)^{d/2} - 1)^{-1}); the spacing index beyond which
/// consecutive eigenvalues are within a factor (1 + gamma).
long weyl_index(double gamma, int dim, double c1);

/// (lambda_{k+1} - lambda_k) / lambda_k for consecutive positive eigenvalues.
std::vector<double> gap_ratio_profile(const Spectrum& spec);
std::vector<double> gap_ratio_profile(const Eigen::VectorXd& eigenvalues);

/// First index k (into the profile) such that profile[j] <= threshold for all
/// j >= k, or nullopt if the last entry exceeds the threshold.
std::optional<std::size_t> gap_cutoff(const std::vector<double>& profile, double threshold);

}  // namespace spectool
