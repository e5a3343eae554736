#include <doctest.h>

#include <cmath>
#include <vector>

#include "spectool/error.hpp"
#include "spectool/filters.hpp"
#include "spectool/operators.hpp"
#include "support.hpp"

using namespace spectool;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Spectrum two_node_path() {
  Eigen::MatrixXd a(2, 2);
  a << 1, -1, -1, 1;
  return eigendecompose(SymmetricOperator(a));
}

Spectrum values_only(const Eigen::VectorXd& l) {
  return Spectrum(l, std::nullopt, SpectrumSource::kAnalytic);
}

}  // namespace

TEST_CASE("polynomial responses") {
  const std::vector<double> lambdas = {0.0, 1.0, 2.0, 5.0};
  const Eigen::VectorXd ones = frequency_response(FilterSpec::polynomial({1}), lambdas);
  CHECK(ones.isApprox(Eigen::VectorXd::Ones(4)));
  const Eigen::VectorXd id = frequency_response(FilterSpec::polynomial({0, 1}), vec({1, 2, 5}));
  CHECK(id(0) == 1.0);
  CHECK(id(1) == 2.0);
  CHECK(id(2) == 5.0);
  CHECK(response_at(FilterSpec::polynomial({1, -0.5, 0.25}), 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(FilterSpec::polynomial({}), ValidationError);
}

TEST_CASE("apply_filter trivial filters") {
  const Spectrum s = eigendecompose(testsupport::random_graph_laplacian(20, 1));
  const Eigen::VectorXd x = testsupport::random_vector(20, 2);
  CHECK((apply_filter(FilterSpec::constant(1.0), s, x) - x).norm() <= 1e-10);
  CHECK(apply_filter(FilterSpec::constant(0.0), s, x).norm() == 0.0);
}

TEST_CASE("piecewise low-pass on the two-node path") {
  const Spectrum s = two_node_path();
  const SpectrumPartition p = gamma_partition(s, 0.5);
  FilterSpec f{PiecewiseFilter{p, {1.0, 0.0}}, false};
  const Eigen::VectorXd y = apply_filter(f, s, vec({1.0, 0.0}));
  CHECK(y(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("strict piecewise filter rejects stray eigenvalues") {
  const SpectrumPartition p = gamma_partition(vec({1, 1.05, 2}), 0.1);
  FilterSpec f{PiecewiseFilter{p, {0.1, 0.2}}, false};
  CHECK(response_at(f, 1.02) == 0.1);
  CHECK_THROWS_AS(response_at(f, 1.5), DomainError);
  std::get<PiecewiseFilter>(f.form).off_group = OffGroupRule::kInterpolate;
  const double mid = response_at(f, 1.525);
  CHECK(mid == doctest::Approx(0.15));
  CHECK(response_at(f, 10.0) == 0.2);
}

TEST_CASE("non-amplifying flag is enforced") {
  const Spectrum s = eigendecompose(testsupport::random_graph_laplacian(10, 4));
  FilterSpec f = FilterSpec::polynomial({0, 1});
  f.non_amplifying = true;
  CHECK_THROWS_AS(apply_filter(f, s, Eigen::VectorXd::Ones(10)), ValidationError);
}

TEST_CASE("verify_frt") {
  const Eigen::VectorXd l = vec({1, 1.05, 2, 2.1});
  const Spectrum s = values_only(l);
  const SpectrumPartition p = gamma_partition(l, 0.1);
  REQUIRE(p.M() == 2);
  const FrtReport r = verify_frt(FilterSpec::polynomial({0, 1}), s, p, 0.06);
  REQUIRE(r.per_group_spread.size() == 2);
  CHECK(r.per_group_spread[0] == doctest::Approx(0.05));
  CHECK(r.per_group_spread[1] == doctest::Approx(0.1));
  CHECK(r.delta_max == doctest::Approx(0.1));
  CHECK_FALSE(r.passes);

  FilterSpec pw{PiecewiseFilter{p, {0.3, -0.7}}, false};
  const FrtReport own = verify_frt(pw, s, p, 0.0);
  CHECK(own.passes);
  CHECK(own.delta_max == 0.0);

  const Eigen::VectorXd spread = vec({1, 2, 4, 8});
  const SpectrumPartition singles = gamma_partition(spread, 0.1);
  const FrtReport rs = verify_frt(FilterSpec::polynomial({0, 0, 1}), values_only(spread), singles, 0.0);
  for (double d : rs.per_group_spread) CHECK(d == 0.0);
}

TEST_CASE("design_frt_piecewise") {
  const Eigen::VectorXd l = vec({1, 1.05, 5});
  const Spectrum s = values_only(l);
  const SpectrumPartition p = gamma_partition(l, 0.1);
  const auto identity = [](double x) { return x; };
  const FilterSpec raw = design_frt_piecewise(s, p, identity, false);
  const auto& rv = std::get<PiecewiseFilter>(raw.form).values;
  REQUIRE(rv.size() == 2);
  CHECK(rv[0] == doctest::Approx(1.025));
  CHECK(rv[1] == doctest::Approx(5.0));
  const FilterSpec clipped = design_frt_piecewise(s, p, identity, true);
  for (double v : std::get<PiecewiseFilter>(clipped.form).values) CHECK(v == 1.0 - kNonAmplifyMargin);
  CHECK(clipped.non_amplifying);

  const FilterSpec half = design_frt_piecewise(s, p, [](double) { return 0.5; }, true);
  for (double v : std::get<PiecewiseFilter>(half.form).values) CHECK(v == 0.5);
  CHECK(verify_frt(half, s, p, 0.0).passes);

  const Eigen::VectorXd z = vec({0, 1, 3});
  const SpectrumPartition pz = gamma_partition(z, 0.1);
  CHECK(std::get<PiecewiseFilter>(design_frt_piecewise(values_only(z), pz, identity, false).form)
            .values.size() == 3);
}

TEST_CASE("designed filters always pass verify_frt") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Spectrum s = eigendecompose(testsupport::random_graph_laplacian(30, seed));
    for (double g : {0.05, 0.2, 0.6}) {
      const SpectrumPartition p = gamma_partition(s, g);
      const FilterSpec f = design_frt_piecewise(s, p, [](double x) { return std::sin(x); }, true);
      const FrtReport r = verify_frt(f, s, p, 0.0);
      CHECK(r.passes);
      CHECK(r.delta_max == 0.0);
    }
  }
}

TEST_CASE("integral Lipschitz estimates") {
  CHECK(estimate_integral_lipschitz(FilterSpec::constant(0.7), vec({0.5, 1, 3})) == 0.0);
  CHECK(estimate_integral_lipschitz(FilterSpec::polynomial({0, 1}), vec({1, 2}), 1) ==
        doctest::Approx(1.5));
  const double fine = estimate_integral_lipschitz(FilterSpec::polynomial({0, 1}), vec({1, 2}), 200);
  CHECK(fine > 1.99);
  CHECK(fine < 2.0);
  CHECK_THROWS_AS(estimate_integral_lipschitz(FilterSpec::polynomial({0, 1}), vec({1, 1})),
                  ValidationError);
  const FilterSpec smooth = FilterSpec::polynomial({0.2, -0.3, 0.05});
  const Eigen::VectorXd l = vec({0.3, 0.9, 1.7, 2.5});
  double prev = 0.0;
  for (int r : {1, 2, 4, 8, 16}) {
    const double b = estimate_integral_lipschitz(smooth, l, r);
    CHECK(b >= prev - 1e-12);
    prev = b;
  }
}

TEST_CASE("apply_filter is linear") {
  const Spectrum s = eigendecompose(testsupport::random_graph_laplacian(25, 8));
  const FilterSpec f = FilterSpec::polynomial({0.3, -0.2, 0.05});
  const Eigen::VectorXd x = testsupport::random_vector(25, 1);
  const Eigen::VectorXd y = testsupport::random_vector(25, 2);
  const double a = 1.7;
  const double b = -0.4;
  const Eigen::VectorXd lhs = apply_filter(f, s, a * x + b * y);
  const Eigen::VectorXd rhs = a * apply_filter(f, s, x) + b * apply_filter(f, s, y);
  CHECK((lhs - rhs).norm() <= 1e-9 * rhs.norm());
}

TEST_CASE("apply_filter is permutation equivariant") {
  const SymmetricOperator op = testsupport::random_graph_laplacian(30, 12);
  const Spectrum s = eigendecompose(op);
  const FilterSpec f = FilterSpec::polynomial({0.5, 0.1, -0.02});
  const Eigen::VectorXd x = testsupport::random_vector(30, 3);
  for (std::uint64_t k = 0; k < 5; ++k) {
    const Eigen::MatrixXd p = testsupport::permutation_matrix(testsupport::random_permutation(30, k));
    const Spectrum sp = eigendecompose(SymmetricOperator(p * op.matrix() * p.transpose()));
    CHECK((apply_filter(f, sp, p * x) - p * apply_filter(f, s, x)).norm() <= 1e-8);
  }
}

TEST_CASE("single-group indicator is idempotent") {
  const Spectrum s = eigendecompose(testsupport::random_graph_laplacian(20, 6));
  const SpectrumPartition p = gamma_partition(s, 0.1);
  std::vector<double> values(p.total_groups(), 0.0);
  values[values.size() / 2] = 1.0;
  const FilterSpec f{PiecewiseFilter{p, values}, false};
  const Eigen::VectorXd x = testsupport::random_vector(20, 5);
  const Eigen::VectorXd once = apply_filter(f, s, x);
  const Eigen::VectorXd twice = apply_filter(f, s, once);
  CHECK((once - twice).norm() <= 1e-9);
}

TEST_CASE("spectral path matches the matrix polynomial") {
  const SymmetricOperator op = testsupport::random_graph_laplacian(18, 21);
  const Spectrum s = eigendecompose(op);
  const std::vector<double> c = {0.4, -0.3, 0.08, -0.005};
  const Eigen::VectorXd x = testsupport::random_vector(18, 4);
  const Eigen::VectorXd direct = testsupport::matrix_polynomial(op.matrix(), c) * x;
  const Eigen::VectorXd spectral = apply_filter(FilterSpec::polynomial(c), s, x);
  CHECK((direct - spectral).norm() <= 1e-9 * std::max(1.0, direct.norm()));
}

TEST_CASE("group-mean projection") {
  const Eigen::VectorXd l = vec({0, 1, 1.05, 3});
  const SpectrumPartition p = gamma_partition(l, 0.1);
  const Eigen::VectorXd r = vec({5, 1, 3, 7});
  const Eigen::VectorXd once = project_group_mean(r, p);
  CHECK(once(0) == 5.0);
  CHECK(once(1) == 2.0);
  CHECK(once(2) == 2.0);
  CHECK(once(3) == 7.0);
  CHECK((project_group_mean(once, p) - once).norm() == 0.0);
}
