#include "spectool/spectrum.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "spectool/error.hpp"

namespace spectool {

namespace {

constexpr double kZeroRelTol = 1e-10;
constexpr double kNegativeTol = 1e-8;
constexpr double kOrthoTol = 1e-8;

double zero_threshold_for(const Eigen::VectorXd& ev) {
  return ev.size() ? kZeroRelTol * ev(ev.size() - 1) : 0.0;
}

}  // namespace

Spectrum::Spectrum(Eigen::VectorXd eigenvalues, std::optional<Eigen::MatrixXd> eigenvectors,
                   SpectrumSource source)
    : eigenvalues_(std::move(eigenvalues)),
      eigenvectors_(std::move(eigenvectors)),
      source_(source) {
  const Eigen::Index n = eigenvalues_.size();
  if (!eigenvalues_.allFinite()) throw ValidationError("spectrum: non-finite eigenvalue");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (eigenvalues_(i) < eigenvalues_(i - 1)) {
      std::ostringstream os;
      os << "spectrum: eigenvalues not sorted at index " << i << " (" << eigenvalues_(i - 1)
         << " > " << eigenvalues_(i) << ")";
      throw ValidationError(os.str());
    }
  }
  if (n > 0 && source_ != SpectrumSource::kIndefinite) {
    const double tol = kNegativeTol * std::max(1.0, std::abs(eigenvalues_(n - 1)));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (eigenvalues_(i) >= 0.0) break;
      if (eigenvalues_(i) < -tol) {
        std::ostringstream os;
        os << "spectrum: negative eigenvalue " << eigenvalues_(i) << " (operator is not PSD)";
        throw ValidationError(os.str());
      }
      eigenvalues_(i) = 0.0;
    }
  }
  if (eigenvectors_) {
    const Eigen::MatrixXd& q = *eigenvectors_;
    if (q.cols() != n) {
      throw ValidationError("spectrum: eigenvector count does not match eigenvalue count");
    }
    const Eigen::MatrixXd gram = q.transpose() * q;
    const double err = (gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (n > 0 && err > kOrthoTol) {
      std::ostringstream os;
      os << "spectrum: eigenvectors not orthonormal (max |Q^T Q - I| = " << err << ")";
      throw ValidationError(os.str());
    }
  }
}

const Eigen::MatrixXd& Spectrum::eigenvectors() const {
  if (!eigenvectors_) {
    throw StateError("spectrum has no eigenvectors (analytic spectra carry eigenvalues only)");
  }
  return *eigenvectors_;
}

std::vector<SpectrumGroup> SpectrumPartition::all_groups() const {
  std::vector<SpectrumGroup> out;
  out.reserve(total_groups());
  if (zero_group) out.push_back(*zero_group);
  out.insert(out.end(), groups.begin(), groups.end());
  return out;
}

std::vector<std::size_t> SpectrumPartition::group_of_index() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(covered()));
  const auto all = all_groups();
  for (std::size_t g = 0; g < all.size(); ++g) {
    for (Eigen::Index i = all[g].start; i < all[g].end; ++i) out[static_cast<std::size_t>(i)] = g;
  }
  return out;
}

Eigen::Index SpectrumPartition::covered() const {
  Eigen::Index total = zero_group ? zero_group->count() : 0;
  for (const auto& g : groups) total += g.count();
  return total;
}

SpectrumPartition gamma_partition(const Spectrum& spec, double gamma) {
  return gamma_partition(spec.eigenvalues(), gamma);
}

SpectrumPartition gamma_partition(const Eigen::VectorXd& ev, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    std::ostringstream os;
    os << "gamma_partition: gamma must lie in (0, 1), got " << gamma
       << " (for gamma >= 1 the ratio condition cannot hold for the smaller eigenvalue)";
    throw ValidationError(os.str());
  }
  const Eigen::Index n = ev.size();
  if (n == 0) throw ValidationError("gamma_partition: empty spectrum");

  SpectrumPartition part;
  part.gamma = gamma;
  part.zero_threshold = zero_threshold_for(ev);

  Eigen::Index first_pos = 0;
  while (first_pos < n && ev(first_pos) <= part.zero_threshold) ++first_pos;
  if (first_pos == n) throw ValidationError("gamma_partition: spectrum has no positive eigenvalue");
  if (first_pos > 0) part.zero_group = SpectrumGroup{0, first_pos, ev(0), ev(first_pos - 1)};

  const double factor = 1.0 / (1.0 - gamma);
  SpectrumGroup current{first_pos, first_pos + 1, ev(first_pos), ev(first_pos)};
  for (Eigen::Index k = first_pos + 1; k < n; ++k) {
    if (ev(k) > ev(k - 1) * factor) {
      part.groups.push_back(current);
      current = SpectrumGroup{k, k + 1, ev(k), ev(k)};
    } else {
      current.end = k + 1;
      current.hi = ev(k);
    }
  }
  part.groups.push_back(current);
  return part;
}

bool verify_partition(const Eigen::VectorXd& ev, const SpectrumPartition& part) {
  const auto all = part.all_groups();
  Eigen::Index next = 0;
  for (const auto& g : all) {
    if (g.start != next || g.end <= g.start) return false;
    next = g.end;
  }
  if (next != ev.size()) return false;

  for (std::size_t a = 0; a < part.groups.size(); ++a) {
    for (std::size_t b = a + 1; b < part.groups.size(); ++b) {
      const auto& ga = part.groups[a];
      const auto& gb = part.groups[b];
      for (Eigen::Index i = ga.start; i < ga.end; ++i) {
        for (Eigen::Index j = gb.start; j < gb.end; ++j) {
          const double li = ev(i);
          const double lj = ev(j);
          if (!(std::abs(li / lj - 1.0) > part.gamma)) return false;
          if (!(std::abs(lj / li - 1.0) > part.gamma)) return false;
        }
      }
    }
  }
  return true;
}

long weyl_index(double gamma, int dim, double c1) {
  if (!(gamma > 0.0) || dim < 1 || !(c1 > 0.0)) {
    throw ValidationError("weyl_index: requires gamma > 0, d >= 1 and C1 > 0");
  }
  const double denom = c1 * std::pow(gamma + 1.0, 0.5 * dim) - 1.0;
  if (!(denom > 0.0)) {
    std::ostringstream os;
    os << "weyl_index: C1 (gamma + 1)^(d/2) - 1 = " << denom
       << " is not positive; choose a larger C1 or gamma";
    throw DomainError(os.str());
  }
  const double value = std::ceil(1.0 / denom);
  if (value > static_cast<double>(std::numeric_limits<long>::max())) {
    throw DomainError("weyl_index: index overflows; denominator too close to zero");
  }
  return static_cast<long>(value);
}

std::vector<double> gap_ratio_profile(const Spectrum& spec) {
  return gap_ratio_profile(spec.eigenvalues());
}

std::vector<double> gap_ratio_profile(const Eigen::VectorXd& ev) {
  const double thr = zero_threshold_for(ev);
  std::vector<double> pos;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > thr) pos.push_back(ev(i));
  }
  if (pos.size() < 2) {
    throw ValidationError("gap_ratio_profile: need at least two positive eigenvalues");
  }
  std::vector<double> out(pos.size() - 1);
  for (std::size_t k = 0; k + 1 < pos.size(); ++k) out[k] = (pos[k + 1] - pos[k]) / pos[k];
  return out;
}

std::optional<std::size_t> gap_cutoff(const std::vector<double>& profile, double threshold) {
  std::size_t k = profile.size();
  while (k > 0 && profile[k - 1] <= threshold) --k;
  if (k == profile.size()) return std::nullopt;
  return k;
}

}  // namespace spectool
