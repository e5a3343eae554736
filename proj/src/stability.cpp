#include "spectool/stability.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "spectool/error.hpp"
#include "spectool/filters.hpp"
#include "spectool/parallel.hpp"
#include "spectool/rng.hpp"

namespace spectool {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double theorem1_bound(int layers, int width, std::size_t groups, double gamma, double epsilon,
                      double lipschitz_b, double f_norm) {
  if (layers < 1) throw DomainError("theorem1_bound: requires L >= 1");
  if (width < 1) throw DomainError("theorem1_bound: requires F >= 1");
  if (groups < 1) throw DomainError("theorem1_bound: requires M >= 1");
  if (!(epsilon >= 0.0)) throw DomainError("theorem1_bound: requires eps >= 0 (eps = " + num(epsilon) + ")");
  if (!(lipschitz_b >= 0.0)) throw DomainError("theorem1_bound: requires B >= 0");
  if (!(f_norm >= 0.0)) throw DomainError("theorem1_bound: requires ||f|| >= 0");
  if (!(epsilon < 2.0)) {
    throw DomainError("theorem1_bound: requires eps < 2 so that 2 - eps > 0 (eps = " + num(epsilon) + ")");
  }
  if (!(epsilon <= gamma)) {
    throw DomainError("theorem1_bound: requires eps <= gamma (eps = " + num(epsilon) +
                      ", gamma = " + num(gamma) + ")");
  }
  const double denom = gamma - epsilon + gamma * epsilon;
  if (!(denom > 0.0)) {
    throw DomainError("theorem1_bound: requires gamma - eps + gamma eps > 0 (got " + num(denom) + ")");
  }
  const double prefactor = layers * std::pow(static_cast<double>(width), layers - 1);
  const double m = static_cast<double>(groups);
  return prefactor *
         (2.0 * m * std::numbers::pi / denom + 2.0 * lipschitz_b / (2.0 - epsilon)) * epsilon *
         f_norm;
}

double frt_delta(double gamma, double epsilon) {
  const double denom = gamma - epsilon + gamma * epsilon;
  if (!(denom > 0.0)) throw DomainError("frt_delta: gamma - eps + gamma eps must be positive");
  return std::numbers::pi * epsilon / denom;
}

FilterRecipe::Kind parse_recipe_kind(const std::string& name) {
  if (name == "random_piecewise") return FilterRecipe::Kind::kRandomPiecewise;
  if (name == "lowpass") return FilterRecipe::Kind::kLowpass;
  if (name == "identity") return FilterRecipe::Kind::kIdentity;
  throw ValidationError("unknown filter recipe '" + name +
                        "' (expected random_piecewise, lowpass, identity)");
}

std::string to_string(FilterRecipe::Kind k) {
  switch (k) {
    case FilterRecipe::Kind::kRandomPiecewise: return "random_piecewise";
    case FilterRecipe::Kind::kLowpass: return "lowpass";
    case FilterRecipe::Kind::kIdentity: return "identity";
  }
  return "random_piecewise";
}

void validate(const StabilityConfig& c) {
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) {
    throw UsageError("stability config: gamma must lie in (0, 1), got " + num(c.gamma));
  }
  if (c.epsilons.empty()) throw UsageError("stability config: epsilon list is empty");
  for (double e : c.epsilons) {
    if (!(e >= 0.0) || !std::isfinite(e)) {
      throw UsageError("stability config: epsilon values must be finite and >= 0");
    }
    if (!(e < 2.0)) {
      throw DomainError("stability config: eps = " + num(e) +
                        " makes 2 - eps <= 0 in the stability bound");
    }
    if (e > c.gamma) {
      throw UsageError("stability config: eps = " + num(e) + " exceeds gamma = " + num(c.gamma) +
                       "; the stability theorem requires ||E|| = eps <= gamma");
    }
  }
  if (c.layers < 1 || c.width < 1) throw UsageError("stability config: L and F must be >= 1");
  if (c.trials < 1) throw UsageError("stability config: trials must be >= 1");
  if (c.lipschitz_b && !(*c.lipschitz_b >= 0.0)) throw UsageError("stability config: B must be >= 0");
  if (c.recipe.amplitude <= 0.0 || c.recipe.amplitude >= 1.0) {
    throw UsageError("stability config: recipe amplitude must lie in (0, 1)");
  }
  if (!(c.recipe.cutoff > 0.0)) throw UsageError("stability config: recipe cutoff must be positive");
}

std::vector<int> theorem_widths(int layers, int width) {
  std::vector<int> w(static_cast<std::size_t>(layers + 1), width);
  w.front() = 1;
  w.back() = 1;
  return w;
}

MnnModel build_frt_network(const StabilityConfig& config, const Spectrum& spec,
                           const SpectrumPartition& partition) {
  MnnModel model;
  model.feature_widths = theorem_widths(config.layers, config.width);
  model.activation = config.activation;
  const FilterRecipe& r = config.recipe;
  std::uint64_t filter_index = 0;
  for (std::size_t l = 0; l + 1 < model.feature_widths.size(); ++l) {
    MnnLayer layer{model.feature_widths[l], model.feature_widths[l + 1], {}};
    for (int k = 0; k < layer.in_features * layer.out_features; ++k, ++filter_index) {
      std::function<double(double)> target;
      switch (r.kind) {
        case FilterRecipe::Kind::kRandomPiecewise: {
          auto rng = std::make_shared<Rng>(make_rng(fork_seed(r.seed, filter_index)));
          const double a = r.amplitude;
          target = [rng, a](double) {
            return std::uniform_real_distribution<double>(-a, a)(*rng);
          };
          break;
        }
        case FilterRecipe::Kind::kLowpass: {
          const double cutoff = r.cutoff;
          target = [cutoff](double lam) { return std::exp(-lam / cutoff); };
          break;
        }
        case FilterRecipe::Kind::kIdentity:
          target = [](double lam) { return lam; };
          break;
      }
      layer.bank.push_back(
          design_frt_piecewise(spec, partition, target, true, OffGroupRule::kInterpolate));
    }
    model.layers.push_back(std::move(layer));
  }
  validate(model);
  return model;
}

std::size_t StabilityReport::violations() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const StabilityRow& r) { return r.flag; }));
}

double StabilityReport::max_bound_ratio() const {
  double best = 0.0;
  for (const auto& r : rows) {
    if (r.bound > 0.0) best = std::max(best, r.empirical / r.bound);
  }
  return best;
}

StabilityReport run_stability_sweep(const StabilityConfig& config, const SymmetricOperator& base,
                                    const Spectrum& spec, const Signal& input) {
  return run_stability_grid(config, {{config.layers, config.width}}, base, spec, input);
}

StabilityReport run_stability_grid(const StabilityConfig& config,
                                   const std::vector<std::pair<int, int>>& architectures,
                                   const SymmetricOperator& base, const Spectrum& spec,
                                   const Signal& input) {
  validate(config);
  if (architectures.empty()) throw UsageError("stability sweep: no architectures");
  const Eigen::MatrixXd& q = spec.eigenvectors();
  if (q.cols() != base.size() || q.rows() != base.size()) {
    throw ValidationError("stability sweep: spectrum must be the full decomposition of the operator");
  }
  if (input.features() != 1 || input.samples() != base.size()) {
    throw ValidationError("stability sweep: input must be a single-feature signal on the samples");
  }

  const SpectrumPartition partition = gamma_partition(spec, config.gamma);
  const double eps_max = *std::max_element(config.epsilons.begin(), config.epsilons.end());

  StabilityReport report;
  report.gamma = config.gamma;
  report.delta = frt_delta(config.gamma, eps_max);
  report.groups = partition.M();

  std::vector<double> positive;
  for (Eigen::Index i = 0; i < spec.size(); ++i) {
    if (spec.eigenvalue(i) > partition.zero_threshold) positive.push_back(spec.eigenvalue(i));
  }

  std::vector<MnnModel> models;
  std::vector<Signal> nominal;
  for (const auto& [layers, width] : architectures) {
    if (layers < 1 || width < 1) throw UsageError("stability sweep: L and F must be >= 1");
    StabilityConfig arch = config;
    arch.layers = layers;
    arch.width = width;
    MnnModel model = build_frt_network(arch, spec, partition);
    for (const FilterSpec* f : model.all_filters()) {
      const FrtReport frt = verify_frt(*f, spec, partition, report.delta);
      if (!frt.passes) {
        throw UsageError("stability sweep: filter recipe is not gamma-FRT for Delta = " +
                         num(report.delta) + " (spread " + num(frt.delta_max) + ")");
      }
      if (positive.size() >= 2) {
        report.lipschitz_b_hat =
            std::max(report.lipschitz_b_hat, estimate_integral_lipschitz(*f, positive));
      }
    }
    nominal.push_back(forward(model, spec, input));
    models.push_back(std::move(model));
  }
  if (config.lipschitz_b && report.lipschitz_b_hat > *config.lipschitz_b) {
    throw UsageError("stability sweep: measured integral Lipschitz constant " +
                     num(report.lipschitz_b_hat) + " exceeds the configured B = " +
                     num(*config.lipschitz_b));
  }
  report.lipschitz_b = config.lipschitz_b.value_or(report.lipschitz_b_hat);

  const std::size_t n_eps = config.epsilons.size();
  const std::size_t n_arch = architectures.size();
  const auto n_jobs = static_cast<std::ptrdiff_t>(n_eps * static_cast<std::size_t>(config.trials));
  std::vector<StabilityRow> rows(static_cast<std::size_t>(n_jobs) * n_arch);
  const double f_norm = input.norm();

  // One perturbed decomposition per (epsilon, trial); rows land in fixed
  // slots so the report does not depend on scheduling.
  parallel_for(n_jobs, [&](std::ptrdiff_t job) {
    const std::size_t e_idx = static_cast<std::size_t>(job) / static_cast<std::size_t>(config.trials);
    const int trial = static_cast<int>(static_cast<std::size_t>(job) % static_cast<std::size_t>(config.trials));
    const double eps = config.epsilons[e_idx];
    const std::uint64_t seed = fork_seed(config.seed, static_cast<std::uint64_t>(trial));
    const Eigen::MatrixXd e = generate_perturbation({config.family, eps, seed}, spec);
    const RelativePerturbation pert = apply_relative(base, e, config.mode);
    const Spectrum perturbed = eigendecompose(pert.op, std::nullopt, true);
    for (std::size_t a = 0; a < n_arch; ++a) {
      const auto [layers, width] = architectures[a];
      StabilityRow row;
      row.layers = layers;
      row.width = width;
      row.epsilon = eps;
      row.trial = trial;
      row.seed = seed;
      row.groups = partition.M();
      row.f_norm = f_norm;
      row.empirical = output_distance(nominal[a], forward(models[a], perturbed, input));
      row.bound = theorem1_bound(layers, width, partition.M(), config.gamma, eps,
                                 report.lipschitz_b, f_norm);
      row.flag = row.empirical > row.bound;
      rows[a * static_cast<std::size_t>(n_jobs) + static_cast<std::size_t>(job)] = row;
    }
  });
  report.rows = std::move(rows);
  return report;
}

std::vector<ProbeRow> discriminability_probe(const std::vector<double>& gammas,
                                             const std::vector<double>& lipschitz_bs,
                                             const Spectrum& spec, const Eigen::VectorXd& probe_a,
                                             const Eigen::VectorXd& probe_b, double epsilon) {
  const Eigen::MatrixXd& q = spec.eigenvectors();
  if (probe_a.size() != q.rows() || probe_b.size() != q.rows()) {
    throw ValidationError("discriminability_probe: probe length does not match the spectrum");
  }
  const double na = probe_a.norm();
  const double nb = probe_b.norm();
  if (!(na > 0.0 && nb > 0.0)) throw ValidationError("discriminability_probe: probes must be nonzero");
  if (gammas.empty() || lipschitz_bs.empty()) {
    throw ValidationError("discriminability_probe: empty gamma or B list");
  }
  const Eigen::VectorXd ca = q.transpose() * probe_a;
  const Eigen::VectorXd cb = q.transpose() * probe_b;
  const Eigen::VectorXd& ev = spec.eigenvalues();

  std::vector<double> positive;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > 0.0) positive.push_back(ev(i));
  }

  std::vector<ProbeRow> out;
  for (double gamma : gammas) {
    const SpectrumPartition part = gamma_partition(spec, gamma);
    const auto groups = part.all_groups();
    // Energy share of each probe per group; g(x) = sum_k v_k share_k(x).
    std::vector<double> diff(groups.size());
    for (std::size_t k = 0; k < groups.size(); ++k) {
      const auto& g = groups[k];
      diff[k] = ca.segment(g.start, g.count()).squaredNorm() / (na * na) -
                cb.segment(g.start, g.count()).squaredNorm() / (nb * nb);
    }
    PiecewiseFilter pw{part, {}, OffGroupRule::kInterpolate};
    for (double d : diff) {
      pw.values.push_back(d > 0.0 ? 1.0 - kNonAmplifyMargin : (d < 0.0 ? -1.0 + kNonAmplifyMargin : 0.0));
    }
    const FilterSpec best{pw, true};
    const double b_hat = positive.size() >= 2 ? estimate_integral_lipschitz(best, positive) : 0.0;

    for (double b : lipschitz_bs) {
      if (!(b >= 0.0)) throw ValidationError("discriminability_probe: B must be >= 0");
      const double scale = b_hat > b ? b / b_hat : 1.0;
      double gap = 0.0;
      for (std::size_t k = 0; k < groups.size(); ++k) gap += scale * pw.values[k] * diff[k];

      ProbeRow row;
      row.gamma = gamma;
      row.lipschitz_b = b;
      row.groups = part.M();
      row.separation = std::abs(gap) * 0.5 * (na + nb);
      row.bound = theorem1_bound(1, 1, std::max<std::size_t>(part.M(), 1), gamma,
                                 std::min(epsilon, gamma), b, 1.0);

      // Energy of relu(h(L) a) outside the groups where a has energy.
      FilterSpec scaled = best;
      auto& vals = std::get<PiecewiseFilter>(scaled.form).values;
      for (double& v : vals) v *= scale;
      const Eigen::VectorXd filtered = apply_filter(scaled, spec, probe_a);
      const Eigen::VectorXd activated = activation_eval(Activation::kRelu, filtered);
      const Eigen::VectorXd spectrum_out = q.transpose() * activated;
      double total = spectrum_out.squaredNorm();
      double outside = 0.0;
      for (const auto& g : groups) {
        if (ca.segment(g.start, g.count()).squaredNorm() <= 1e-12 * na * na) {
          outside += spectrum_out.segment(g.start, g.count()).squaredNorm();
        }
      }
      row.spread_after_activation = total > 0.0 ? outside / total : 0.0;
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace spectool
