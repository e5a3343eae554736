#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spectool/mnn.hpp"
#include "spectool/operators.hpp"
#include "spectool/perturb.hpp"
#include "spectool/spectrum.hpp"

namespace spectool {

/// L F^{L-1} (2 M pi / (gamma - eps + gamma eps) + 2 B / (2 - eps)) eps ||f||.
/// Throws DomainError naming the violated precondition (eps <= gamma, eps < 2,
/// gamma - eps + gamma eps > 0, L, F, M >= 1, B and ||f|| >= 0).
double theorem1_bound(int layers, int width, std::size_t groups, double gamma, double epsilon,
                      double lipschitz_b, double f_norm);

/// Within-group spread allowed for a perturbation of size eps:
/// pi eps / (gamma - eps + gamma eps).
double frt_delta(double gamma, double epsilon);

/// How the filters of a stability network are chosen. Every recipe produces
/// non-amplifying piecewise filters on the gamma partition (zero spread per
/// group) that interpolate linearly between groups, so they can be evaluated
/// on a perturbed spectrum.
struct FilterRecipe {
  enum class Kind {
    kRandomPiecewise,  ///< group values uniform in [-amplitude, amplitude]
    kLowpass,          ///< exp(-lambda / cutoff)
    kIdentity,         ///< lambda, clipped below 1
  };
  Kind kind = Kind::kRandomPiecewise;
  std::uint64_t seed = 0;
  double amplitude = 0.9;
  double cutoff = 10.0;
};

FilterRecipe::Kind parse_recipe_kind(const std::string& name);
std::string to_string(FilterRecipe::Kind k);

struct StabilityConfig {
  double gamma = 0.2;
  std::vector<double> epsilons;
  int layers = 1;
  int width = 1;
  /// Integral Lipschitz budget. When unset the measured B-hat is used.
  std::optional<double> lipschitz_b;
  int trials = 1;
  PerturbationFamily family = PerturbationFamily::kEigenbasisDiagonal;
  RelativeMode mode = RelativeMode::kLiteral;
  Activation activation = Activation::kRelu;
  FilterRecipe recipe;
  std::uint64_t seed = 0;
};

/// Throws DomainError for eps >= 2 and UsageError for the remaining
/// precondition failures (eps > gamma, gamma outside (0,1), counts < 1).
void validate(const StabilityConfig& config);

/// Widths {1, F, ..., F, 1} for an L-layer network.
std::vector<int> theorem_widths(int layers, int width);

/// gamma-FRT network built by `recipe` on the partition of `spec`.
MnnModel build_frt_network(const StabilityConfig& config, const Spectrum& spec,
                           const SpectrumPartition& partition);

struct StabilityRow {
  int layers = 1;
  int width = 1;
  double epsilon = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double empirical = 0.0;
  double bound = 0.0;
  std::size_t groups = 0;
  double f_norm = 0.0;
  bool flag = false;  ///< empirical > bound
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  double gamma = 0.0;
  /// Delta used for the FRT check (from the largest epsilon).
  double delta = 0.0;
  double lipschitz_b = 0.0;
  /// Largest measured integral Lipschitz constant over all filters.
  double lipschitz_b_hat = 0.0;
  std::size_t groups = 0;

  std::size_t violations() const;
  /// max over rows with bound > 0 of empirical / bound.
  double max_bound_ratio() const;
};

/// Perturbation sweep: for each epsilon and trial, perturb the operator,
/// re-decompose it and compare network outputs against theorem1_bound.
/// `base` must be the operator `spec` was computed from (full eigenbasis).
/// Trials run in parallel; rows are ordered by (epsilon, trial).
StabilityReport run_stability_sweep(const StabilityConfig& config, const SymmetricOperator& base,
                                    const Spectrum& spec, const Signal& input);

/// Same sweep for several (L, F) architectures sharing each perturbed
/// decomposition. config.layers / config.width are ignored.
StabilityReport run_stability_grid(const StabilityConfig& config,
                                   const std::vector<std::pair<int, int>>& architectures,
                                   const SymmetricOperator& base, const Spectrum& spec,
                                   const Signal& input);

struct ProbeRow {
  double gamma = 0.0;
  double lipschitz_b = 0.0;
  std::size_t groups = 0;
  double separation = 0.0;
  double bound = 0.0;
  /// Share of the energy of sigma(h(L) probe_a) outside the eigen-groups
  /// where probe_a itself has energy (relu activation).
  double spread_after_activation = 0.0;
};

/// For each (gamma, B): the separation |g(a) - g(b)| * (||a|| + ||b||) / 2 of
/// the two probes, where g(x) = x^T h(L) x / ||x||^2 and h is the
/// sign-matched group-constant non-amplifying filter, scaled down until its
/// sampled integral Lipschitz constant is at most B.
std::vector<ProbeRow> discriminability_probe(const std::vector<double>& gammas,
                                             const std::vector<double>& lipschitz_bs,
                                             const Spectrum& spec, const Eigen::VectorXd& probe_a,
                                             const Eigen::VectorXd& probe_b, double epsilon);

}  // namespace spectool
