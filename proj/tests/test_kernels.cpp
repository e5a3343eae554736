#include <doctest.h>

#include <vector>

#include "spectool/kernels.hpp"
#include "spectool/operators.hpp"
#include "spectool/wireless.hpp"
#include "support.hpp"

using namespace spectool;

TEST_CASE("parallel kernels equal their serial references") {
  const PointCloud cloud = sample_manifold(Sphere{1.0}, 150, 3);
  const Eigen::MatrixXd d2 = kernels::squared_distances(cloud.points());
  CHECK((d2 - kernels::squared_distances_serial(cloud.points())).norm() == 0.0);
  CHECK(d2.diagonal().norm() == 0.0);
  CHECK((kernels::gaussian_affinity(d2, 0.05) - kernels::gaussian_affinity_serial(d2, 0.05)).norm() == 0.0);

  std::vector<double> grid;
  std::vector<double> values;
  for (int i = 1; i <= 300; ++i) {
    grid.push_back(0.01 * i);
    values.push_back(std::sin(0.01 * i * i));
  }
  CHECK(kernels::integral_lipschitz_scan(grid, values) == kernels::integral_lipschitz_scan_serial(grid, values));

  const Spectrum s = eigendecompose(testsupport::random_graph_laplacian(60, 1));
  const Eigen::VectorXd response = s.eigenvalues().array().sin();
  const Eigen::VectorXd x = testsupport::random_vector(60, 2);
  const Eigen::VectorXd a = kernels::spectral_apply(s.eigenvectors(), response, x);
  const Eigen::VectorXd b = kernels::spectral_apply_serial(s.eigenvectors(), response, x);
  CHECK((a - b).norm() == 0.0);

  const WirelessNetwork net = generate_network(20, 50.0, 2.2, 4);
  std::vector<Eigen::MatrixXd> gains;
  for (std::uint64_t k = 0; k < 9; ++k) gains.push_back(channel_gains(draw_channel(net, k), net.interference));
  const Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(20, 0.0, 1.0);
  CHECK(kernels::sum_rates(gains, p) == kernels::sum_rates_serial(gains, p));
}

TEST_CASE("kernel results do not depend on the thread count") {
  const int saved = kernels::max_threads();
  const PointCloud cloud = sample_manifold(Circle{1.0}, 120, 8);
  kernels::set_num_threads(1);
  const Eigen::MatrixXd one = kernels::squared_distances(cloud.points());
  kernels::set_num_threads(4);
  const Eigen::MatrixXd four = kernels::squared_distances(cloud.points());
  kernels::set_num_threads(saved);
  CHECK((one - four).norm() == 0.0);
}

TEST_CASE("integral Lipschitz scan on a line") {
  const std::vector<double> grid = {1.0, 2.0};
  const std::vector<double> values = {1.0, 2.0};
  CHECK(kernels::integral_lipschitz_scan(grid, values) == doctest::Approx(1.5));
}
