#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "spectool/kernels.hpp"
#include "spectool/operators.hpp"
#include "spectool/wireless.hpp"

using namespace spectool;

namespace {

Eigen::MatrixXd cloud(int n) { return sample_manifold(Sphere{1.0}, n, 1).points(); }

void BM_SquaredDistances(benchmark::State& st) {
  const Eigen::MatrixXd pts = cloud(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::squared_distances(pts));
}
void BM_SquaredDistancesSerial(benchmark::State& st) {
  const Eigen::MatrixXd pts = cloud(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::squared_distances_serial(pts));
}

void BM_GaussianAffinity(benchmark::State& st) {
  const Eigen::MatrixXd d2 = kernels::squared_distances(cloud(static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::gaussian_affinity(d2, 0.01));
}
void BM_GaussianAffinitySerial(benchmark::State& st) {
  const Eigen::MatrixXd d2 = kernels::squared_distances(cloud(static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::gaussian_affinity_serial(d2, 0.01));
}

std::pair<std::vector<double>, std::vector<double>> lipschitz_grid(int n) {
  std::vector<double> grid;
  std::vector<double> values;
  for (int i = 1; i <= n; ++i) {
    grid.push_back(0.01 * i);
    values.push_back(std::tanh(std::sin(0.003 * i * i)));
  }
  return {grid, values};
}

void BM_LipschitzScan(benchmark::State& st) {
  const auto [g, v] = lipschitz_grid(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::integral_lipschitz_scan(g, v));
}
void BM_LipschitzScanSerial(benchmark::State& st) {
  const auto [g, v] = lipschitz_grid(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::integral_lipschitz_scan_serial(g, v));
}

struct SpectralCase {
  Eigen::MatrixXd basis;
  Eigen::VectorXd response;
  Eigen::VectorXd x;
};

SpectralCase spectral_case(int n) {
  const Spectrum s = eigendecompose(kernel_laplacian(PointCloud(cloud(n), 2), std::nullopt));
  return {s.eigenvectors(), s.eigenvalues().array().exp().inverse(), Eigen::VectorXd::LinSpaced(n, -1, 1)};
}

void BM_SpectralApply(benchmark::State& st) {
  const SpectralCase c = spectral_case(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::spectral_apply(c.basis, c.response, c.x));
}
void BM_SpectralApplySerial(benchmark::State& st) {
  const SpectralCase c = spectral_case(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::spectral_apply_serial(c.basis, c.response, c.x));
}

std::vector<Eigen::MatrixXd> gain_batch(int draws) {
  const WirelessNetwork net = generate_network(50, 50.0, 2.2, 1);
  std::vector<Eigen::MatrixXd> gains;
  for (int d = 0; d < draws; ++d) gains.push_back(channel_gains(draw_channel(net, d), net.interference));
  return gains;
}

void BM_SumRates(benchmark::State& st) {
  const auto gains = gain_batch(static_cast<int>(st.range(0)));
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(50, 0.5);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::sum_rates(gains, p));
}
void BM_SumRatesSerial(benchmark::State& st) {
  const auto gains = gain_batch(static_cast<int>(st.range(0)));
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(50, 0.5);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::sum_rates_serial(gains, p));
}

}  // namespace

BENCHMARK(BM_SquaredDistances)->Arg(500)->Arg(1000);
BENCHMARK(BM_SquaredDistancesSerial)->Arg(500)->Arg(1000);
BENCHMARK(BM_GaussianAffinity)->Arg(500)->Arg(1000);
BENCHMARK(BM_GaussianAffinitySerial)->Arg(500)->Arg(1000);
BENCHMARK(BM_LipschitzScan)->Arg(500)->Arg(2000);
BENCHMARK(BM_LipschitzScanSerial)->Arg(500)->Arg(2000);
BENCHMARK(BM_SpectralApply)->Arg(300);
BENCHMARK(BM_SpectralApplySerial)->Arg(300);
BENCHMARK(BM_SumRates)->Arg(200);
BENCHMARK(BM_SumRatesSerial)->Arg(200);

BENCHMARK_MAIN();
