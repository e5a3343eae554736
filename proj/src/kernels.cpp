#include "spectool/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spectool::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_num_threads(int threads) {
#ifdef _OPENMP
  if (threads >= 1) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

namespace {

inline double pair_sq_dist(const Eigen::MatrixXd& points, Eigen::Index i, Eigen::Index j) {
  double acc = 0.0;
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const double d = points(i, c) - points(j, c);
    acc += d * d;
  }
  return acc;
}

inline double lipschitz_quotient(double a, double b, double ha, double hb) {
  return std::abs(ha - hb) * (a + b) / (2.0 * std::abs(a - b));
}

}  // namespace

Eigen::MatrixXd squared_distances_serial(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double d = pair_sq_dist(points, i, j);
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  // Column-major: each thread owns whole columns; the mirror entry is
  // recomputed rather than shared so no two threads write the same cell.
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j) out(i, j) = pair_sq_dist(points, std::min(i, j), std::max(i, j));
    }
  }
  return out;
}

Eigen::MatrixXd gaussian_affinity_serial(const Eigen::MatrixXd& sq_dist, double bandwidth) {
  const Eigen::Index n = sq_dist.rows();
  Eigen::MatrixXd w(n, n);
  const double inv = 1.0 / (4.0 * bandwidth);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i, j) = (i == j) ? 0.0 : std::exp(-sq_dist(i, j) * inv);
    }
  }
  return w;
}

Eigen::MatrixXd gaussian_affinity(const Eigen::MatrixXd& sq_dist, double bandwidth) {
  const Eigen::Index n = sq_dist.rows();
  Eigen::MatrixXd w(n, n);
  const double inv = 1.0 / (4.0 * bandwidth);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i, j) = (i == j) ? 0.0 : std::exp(-sq_dist(i, j) * inv);
    }
  }
  return w;
}

double integral_lipschitz_scan_serial(std::span<const double> grid,
                                      std::span<const double> values) {
  double best = 0.0;
  const std::size_t m = grid.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (grid[i] == grid[j]) continue;
      best = std::max(best, lipschitz_quotient(grid[i], grid[j], values[i], values[j]));
    }
  }
  return best;
}

double integral_lipschitz_scan(std::span<const double> grid, std::span<const double> values) {
  const auto m = static_cast<std::ptrdiff_t>(grid.size());
  double best = 0.0;
  // max is order independent, so the reduction is exact.
#pragma omp parallel for schedule(dynamic, 64) reduction(max : best)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    double local = 0.0;
    for (std::ptrdiff_t j = i + 1; j < m; ++j) {
      if (grid[i] == grid[j]) continue;
      local = std::max(local, lipschitz_quotient(grid[i], grid[j], values[i], values[j]));
    }
    best = std::max(best, local);
  }
  return best;
}

Eigen::VectorXd spectral_apply_serial(const Eigen::MatrixXd& basis,
                                      const Eigen::VectorXd& response,
                                      const Eigen::VectorXd& x) {
  const Eigen::Index n = basis.rows();
  const Eigen::Index k = basis.cols();
  Eigen::VectorXd coeff(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) acc += basis(r, c) * x(r);
    coeff(c) = acc * response(c);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) out(r) += basis(r, c) * coeff(c);
  }
  return out;
}

Eigen::VectorXd spectral_apply(const Eigen::MatrixXd& basis, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& x) {
  const Eigen::Index n = basis.rows();
  const Eigen::Index k = basis.cols();
  Eigen::VectorXd coeff(k);
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < k; ++c) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) acc += basis(r, c) * x(r);
    coeff(c) = acc * response(c);
  }
  Eigen::VectorXd out(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < n; ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) acc += basis(r, c) * coeff(c);
    out(r) = acc;
  }
  return out;
}

Eigen::VectorXd node_rates(const Eigen::MatrixXd& gain, const Eigen::VectorXd& power) {
  const Eigen::Index n = gain.rows();
  Eigen::VectorXd rates(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double interference = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) interference += gain(i, j) * power(j);
    }
    rates(i) = std::log1p(gain(i, i) * power(i) / interference);
  }
  return rates;
}

std::vector<double> sum_rates_serial(const std::vector<Eigen::MatrixXd>& gains,
                                     const Eigen::VectorXd& power) {
  std::vector<double> out(gains.size());
  for (std::size_t d = 0; d < gains.size(); ++d) out[d] = node_rates(gains[d], power).sum();
  return out;
}

std::vector<double> sum_rates(const std::vector<Eigen::MatrixXd>& gains,
                              const Eigen::VectorXd& power) {
  const auto m = static_cast<std::ptrdiff_t>(gains.size());
  std::vector<double> out(gains.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t d = 0; d < m; ++d) out[d] = node_rates(gains[d], power).sum();
  return out;
}

}  // namespace spectool::kernels
