#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP version and a plain
// serial reference with the same signature; tests hold the two together and
// bench/ compares their throughput. All reductions are order-fixed so the
// parallel results do not depend on the thread count.

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spectool::kernels {

/// Number of OpenMP threads used by the parallel kernels (1 without OpenMP).
int max_threads();
/// Sets the OpenMP thread count; values < 1 are ignored.
void set_num_threads(int threads);

/// Pairwise squared Euclidean distances between the rows of `points`.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& points);
Eigen::MatrixXd squared_distances_serial(const Eigen::MatrixXd& points);

/// W(i,j) = exp(-d2(i,j) / (4 t)) with a zero diagonal.
Eigen::MatrixXd gaussian_affinity(const Eigen::MatrixXd& sq_dist, double bandwidth);
Eigen::MatrixXd gaussian_affinity_serial(const Eigen::MatrixXd& sq_dist, double bandwidth);

/// max over pairs with grid[i] != grid[j] of
///   |values[i] - values[j]| * (grid[i] + grid[j]) / (2 |grid[i] - grid[j]|).
double integral_lipschitz_scan(std::span<const double> grid, std::span<const double> values);
double integral_lipschitz_scan_serial(std::span<const double> grid,
                                      std::span<const double> values);

/// Q diag(response) Q^T x for an orthonormal column block Q.
Eigen::VectorXd spectral_apply(const Eigen::MatrixXd& basis, const Eigen::VectorXd& response,
                               const Eigen::VectorXd& x);
Eigen::VectorXd spectral_apply_serial(const Eigen::MatrixXd& basis,
                                      const Eigen::VectorXd& response, const Eigen::VectorXd& x);

/// Sum over nodes of log(1 + G(i,i) p_i / (1 + sum_{j != i} G(i,j) p_j)) for
/// each gain matrix in `gains`; one entry per matrix, in input order.
std::vector<double> sum_rates(const std::vector<Eigen::MatrixXd>& gains, const Eigen::VectorXd& power);
std::vector<double> sum_rates_serial(const std::vector<Eigen::MatrixXd>& gains,
                                     const Eigen::VectorXd& power);

/// Single-matrix rate vector, shared by both paths above.
Eigen::VectorXd node_rates(const Eigen::MatrixXd& gain, const Eigen::VectorXd& power);

}  // namespace spectool::kernels
