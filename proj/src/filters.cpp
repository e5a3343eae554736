#include "spectool/filters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spectool/error.hpp"
#include "spectool/kernels.hpp"

namespace spectool {

namespace {

constexpr double kGroupRelTol = 1e-9;

double horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double top_of(const SpectrumPartition& p) {
  if (!p.groups.empty()) return p.groups.back().hi;
  return p.zero_group ? p.zero_group->hi : 0.0;
}

double piecewise_at(const PiecewiseFilter& f, double lambda, OffGroupRule rule) {
  const auto& part = f.partition;
  const std::size_t offset = part.zero_group ? 1 : 0;
  const double zero_tol = std::max(part.zero_threshold, kGroupRelTol * top_of(part));

  if (part.zero_group && lambda <= std::max(zero_tol, part.zero_group->hi)) return f.values[0];

  const auto& g = part.groups;
  // First group whose upper tolerance reaches lambda.
  auto it = std::lower_bound(g.begin(), g.end(), lambda, [](const SpectrumGroup& grp, double x) {
    return grp.hi * (1.0 + kGroupRelTol) < x;
  });
  if (it != g.end() && lambda >= it->lo * (1.0 - kGroupRelTol)) {
    return f.values[offset + static_cast<std::size_t>(it - g.begin())];
  }
  if (rule == OffGroupRule::kStrict || g.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "piecewise filter: eigenvalue " << lambda << " lies outside every partition group";
    throw DomainError(os.str());
  }
  if (it == g.end()) return f.values.back();
  const std::size_t k = static_cast<std::size_t>(it - g.begin());
  if (k == 0) {
    if (!part.zero_group) return f.values[offset];
    const double t = std::clamp(lambda / it->lo, 0.0, 1.0);
    return (1.0 - t) * f.values[0] + t * f.values[offset];
  }
  const SpectrumGroup& prev = g[k - 1];
  const double t = (lambda - prev.hi) / (it->lo - prev.hi);
  return (1.0 - t) * f.values[offset + k - 1] + t * f.values[offset + k];
}

std::vector<double> refined_grid(std::span<const double> lambdas, int refinement) {
  std::vector<double> pts(lambdas.begin(), lambdas.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> grid;
  grid.reserve(pts.size() * static_cast<std::size_t>(refinement));
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i];
    const double step = (pts[i + 1] - a) / refinement;
    for (int s = 0; s < refinement; ++s) grid.push_back(a + s * step);
  }
  grid.push_back(pts.back());
  return grid;
}

}  // namespace

FilterSpec FilterSpec::polynomial(std::vector<double> coeffs) {
  FilterSpec f{PolynomialFilter{std::move(coeffs)}, false};
  validate(f);
  return f;
}

void validate(const FilterSpec& filter) {
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PolynomialFilter>) {
          if (f.coeffs.empty()) throw ValidationError("polynomial filter needs K >= 1 coefficients");
          for (double c : f.coeffs) {
            if (!std::isfinite(c)) throw ValidationError("polynomial filter coefficient not finite");
          }
        } else {
          if (f.values.size() != f.partition.total_groups()) {
            std::ostringstream os;
            os << "piecewise filter has " << f.values.size() << " values for "
               << f.partition.total_groups() << " partition groups";
            throw ValidationError(os.str());
          }
          if (f.partition.total_groups() == 0) throw ValidationError("piecewise filter: empty partition");
          for (double v : f.values) {
            if (!std::isfinite(v)) throw ValidationError("piecewise filter value not finite");
          }
        }
      },
      filter.form);
}

double response_at(const FilterSpec& filter, double lambda) {
  return std::visit(
      [lambda](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PolynomialFilter>) return horner(f.coeffs, lambda);
        else return piecewise_at(f, lambda, f.off_group);
      },
      filter.form);
}

Eigen::VectorXd frequency_response(const FilterSpec& filter, std::span<const double> lambdas) {
  validate(filter);
  Eigen::VectorXd out(static_cast<Eigen::Index>(lambdas.size()));
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = response_at(filter, lambdas[i]);
  }
  return out;
}

Eigen::VectorXd frequency_response(const FilterSpec& filter, const Eigen::VectorXd& lambdas) {
  return frequency_response(filter, std::span<const double>(lambdas.data(), lambdas.size()));
}

double max_gain(const FilterSpec& filter, const Eigen::VectorXd& lambdas) {
  if (lambdas.size() == 0) return 0.0;
  return frequency_response(filter, lambdas).cwiseAbs().maxCoeff();
}

Eigen::VectorXd apply_filter(const FilterSpec& filter, const Spectrum& spec,
                             const Eigen::VectorXd& signal) {
  const Eigen::MatrixXd& q = spec.eigenvectors();
  if (signal.size() != q.rows()) {
    std::ostringstream os;
    os << "apply_filter: signal length " << signal.size() << " does not match eigenvector length "
       << q.rows();
    throw ValidationError(os.str());
  }
  const Eigen::VectorXd response = frequency_response(filter, spec.eigenvalues());
  if (filter.non_amplifying && response.size() && !(response.cwiseAbs().maxCoeff() < 1.0)) {
    throw ValidationError("apply_filter: filter flagged non-amplifying has |h(lambda)| >= 1");
  }
  return kernels::spectral_apply(q, response, signal);
}

FrtReport verify_frt(const FilterSpec& filter, const Spectrum& spec,
                     const SpectrumPartition& partition, double delta_target) {
  if (!(delta_target >= 0.0)) throw ValidationError("verify_frt: delta target must be >= 0");
  const Eigen::VectorXd& ev = spec.eigenvalues();
  if (partition.covered() != ev.size()) {
    throw ValidationError("verify_frt: partition does not cover this spectrum");
  }
  const auto groups = partition.all_groups();
  for (const auto& g : groups) {
    if (g.end > ev.size() || ev(g.start) != g.lo || ev(g.end - 1) != g.hi) {
      throw ValidationError("verify_frt: partition was built from a different spectrum");
    }
  }
  const Eigen::VectorXd response = frequency_response(filter, ev);
  FrtReport report;
  report.per_group_spread.reserve(groups.size());
  for (const auto& g : groups) {
    // max pairwise |h_i - h_j| within a group is max - min.
    const auto seg = response.segment(g.start, g.count());
    const double spread = seg.maxCoeff() - seg.minCoeff();
    report.per_group_spread.push_back(spread);
    report.delta_max = std::max(report.delta_max, spread);
  }
  report.passes = report.delta_max <= delta_target;
  return report;
}

FilterSpec design_frt_piecewise(const Spectrum& spec, const SpectrumPartition& partition,
                                const std::function<double(double)>& target, bool non_amplify,
                                OffGroupRule off_group) {
  const Eigen::VectorXd& ev = spec.eigenvalues();
  if (partition.total_groups() == 0) throw ValidationError("design_frt_piecewise: empty partition");
  if (partition.covered() != ev.size()) {
    throw ValidationError("design_frt_piecewise: partition does not cover this spectrum");
  }
  PiecewiseFilter pw{partition, {}, off_group};
  for (const auto& g : partition.all_groups()) {
    double v = target(ev.segment(g.start, g.count()).mean());
    if (!std::isfinite(v)) throw ValidationError("design_frt_piecewise: target response not finite");
    if (non_amplify) v = std::clamp(v, -1.0 + kNonAmplifyMargin, 1.0 - kNonAmplifyMargin);
    pw.values.push_back(v);
  }
  FilterSpec f{std::move(pw), non_amplify};
  validate(f);
  return f;
}

Eigen::VectorXd project_group_mean(const Eigen::VectorXd& response,
                                   const SpectrumPartition& partition) {
  if (partition.covered() != response.size()) {
    throw ValidationError("project_group_mean: partition does not cover the response");
  }
  Eigen::VectorXd out(response.size());
  for (const auto& g : partition.all_groups()) {
    out.segment(g.start, g.count()).setConstant(response.segment(g.start, g.count()).mean());
  }
  return out;
}

double estimate_integral_lipschitz(const FilterSpec& filter, std::span<const double> lambdas,
                                   int refinement) {
  if (refinement < 1) throw ValidationError("estimate_integral_lipschitz: refinement must be >= 1");
  for (double l : lambdas) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw ValidationError("estimate_integral_lipschitz: lambdas must be positive and finite");
    }
  }
  const std::vector<double> grid = refined_grid(lambdas, refinement);
  if (grid.size() < 2) {
    throw ValidationError("estimate_integral_lipschitz: need at least two distinct lambdas");
  }
  FilterSpec eval = filter;
  if (auto* pw = std::get_if<PiecewiseFilter>(&eval.form)) pw->off_group = OffGroupRule::kInterpolate;
  const Eigen::VectorXd values = frequency_response(eval, grid);
  return kernels::integral_lipschitz_scan(grid, std::span<const double>(values.data(), values.size()));
}

double estimate_integral_lipschitz(const FilterSpec& filter, const Eigen::VectorXd& lambdas,
                                   int refinement) {
  return estimate_integral_lipschitz(
      filter, std::span<const double>(lambdas.data(), lambdas.size()), refinement);
}

}  // namespace spectool
