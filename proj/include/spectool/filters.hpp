#pragma once

#include <functional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "spectool/spectrum.hpp"

namespace spectool {

/// h(lambda) = sum_k coeffs[k] lambda^k.
struct PolynomialFilter {
  std::vector<double> coeffs;
};

/// How a piecewise filter answers for a lambda that lies in no group.
enum class OffGroupRule {
  kStrict,       ///< DomainError naming the stray eigenvalue.
  kInterpolate,  ///< Linear between neighbouring groups, constant past the ends.
};

/// One response value per group of a partition: values[0] belongs to the
/// zero group when the partition has one, then one value per positive group.
struct PiecewiseFilter {
  SpectrumPartition partition;
  std::vector<double> values;
  OffGroupRule off_group = OffGroupRule::kStrict;
};

struct FilterSpec {
  std::variant<PolynomialFilter, PiecewiseFilter> form;
  /// When set, apply_filter checks |h(lambda_i)| < 1 on the spectrum it is
  /// applied with and rejects the filter otherwise.
  bool non_amplifying = false;

  static FilterSpec polynomial(std::vector<double> coeffs);
  static FilterSpec constant(double value) { return polynomial({value}); }
  bool is_piecewise() const { return std::holds_alternative<PiecewiseFilter>(form); }
};

void validate(const FilterSpec& filter);

double response_at(const FilterSpec& filter, double lambda);
Eigen::VectorXd frequency_response(const FilterSpec& filter, std::span<const double> lambdas);
Eigen::VectorXd frequency_response(const FilterSpec& filter, const Eigen::VectorXd& lambdas);

/// max_i |h(lambda_i)| over the given eigenvalues.
double max_gain(const FilterSpec& filter, const Eigen::VectorXd& lambdas);

/// Q diag(h(lambda)) Q^T signal. Needs eigenvectors.
Eigen::VectorXd apply_filter(const FilterSpec& filter, const Spectrum& spec,
                             const Eigen::VectorXd& signal);

struct FrtReport {
  /// Max within-group spread of h, in all_groups() order.
  std::vector<double> per_group_spread;
  double delta_max = 0.0;
  bool passes = false;
};

/// Exhaustive within-group spread of the response; passes iff
/// delta_max <= delta_target.
FrtReport verify_frt(const FilterSpec& filter, const Spectrum& spec,
                     const SpectrumPartition& partition, double delta_target);

/// Piecewise filter whose value on each group is target(mean eigenvalue of
/// the group), optionally clipped to |h| <= 1 - 1e-6.
FilterSpec design_frt_piecewise(const Spectrum& spec, const SpectrumPartition& partition,
                                const std::function<double(double)>& target, bool non_amplify,
                                OffGroupRule off_group = OffGroupRule::kStrict);

/// Projection of any response vector onto group-constant responses: each
/// entry replaced by the mean of its group.
Eigen::VectorXd project_group_mean(const Eigen::VectorXd& response,
                                   const SpectrumPartition& partition);

inline constexpr double kNonAmplifyMargin = 1e-6;

/// Sampled integral-Lipschitz constant
///   max_{a != b} |h(a) - h(b)| (a + b) / (2 |a - b|)
/// over the distinct lambdas with `refinement - 1` equally spaced points
/// inserted between neighbours. Piecewise filters are evaluated with the
/// interpolating rule between groups. A lower bound on the true B.
double estimate_integral_lipschitz(const FilterSpec& filter, std::span<const double> lambdas,
                                   int refinement = 10);
double estimate_integral_lipschitz(const FilterSpec& filter, const Eigen::VectorXd& lambdas,
                                   int refinement = 10);

}  // namespace spectool
