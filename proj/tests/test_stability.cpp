#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spectool/error.hpp"
#include "spectool/operators.hpp"
#include "spectool/stability.hpp"
#include "support.hpp"

using namespace spectool;

namespace {

// Graph Laplacian rescaled so that every eigenvalue lies below `top`.
SymmetricOperator scaled_laplacian(int n, std::uint64_t seed, double top) {
  const SymmetricOperator op = testsupport::random_graph_laplacian(n, seed);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix(), Eigen::EigenvaluesOnly);
  return SymmetricOperator(SymmetricOperator::symmetrize(op.matrix() * (top / es.eigenvalues().maxCoeff())));
}

StabilityConfig base_config() {
  StabilityConfig c;
  c.gamma = 0.2;
  c.epsilons = {0.0, 0.01, 0.1};
  c.trials = 3;
  c.family = PerturbationFamily::kEigenbasisDiagonal;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("bound arithmetic") {
  CHECK(theorem1_bound(3, 4, 7, 0.5, 0.0, 2.0, 3.0) == 0.0);
  const double expected = (4 * std::numbers::pi / 0.495 + 2.0 / 1.99) * 0.01;
  CHECK(theorem1_bound(1, 1, 2, 0.5, 0.01, 1.0, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::abs(theorem1_bound(1, 1, 2, 0.5, 0.01, 1.0, 1.0) - 0.26391) <= 1e-4);
  // L F^{L-1} = 3 * 2^2 = 12
  const double one = theorem1_bound(1, 1, 2, 0.5, 0.01, 1.0, 1.0);
  CHECK(theorem1_bound(3, 2, 2, 0.5, 0.01, 1.0, 1.0) == doctest::Approx(12 * one));
  CHECK(frt_delta(0.5, 0.01) == doctest::Approx(std::numbers::pi * 0.01 / 0.495));
}

TEST_CASE("bound domain errors") {
  CHECK_THROWS_AS(theorem1_bound(1, 1, 2, 0.1, 0.2, 1, 1), DomainError);
  CHECK_THROWS_AS(theorem1_bound(1, 1, 2, 0.5, -0.1, 1, 1), DomainError);
  CHECK_THROWS_AS(theorem1_bound(0, 1, 2, 0.5, 0.1, 1, 1), DomainError);
  CHECK_THROWS_AS(theorem1_bound(1, 1, 0, 0.5, 0.1, 1, 1), DomainError);
  CHECK_THROWS_AS(theorem1_bound(1, 1, 2, 0.5, 0.1, -1, 1), DomainError);
  CHECK_NOTHROW(theorem1_bound(1, 1, 2, 0.3, 0.3, 1, 1));
}

TEST_CASE("bound monotonicity") {
  const double b = theorem1_bound(2, 2, 3, 0.4, 0.05, 1.0, 1.0);
  CHECK(theorem1_bound(2, 2, 3, 0.4, 0.06, 1.0, 1.0) > b);
  CHECK(theorem1_bound(3, 2, 3, 0.4, 0.05, 1.0, 1.0) > b);
  CHECK(theorem1_bound(2, 3, 3, 0.4, 0.05, 1.0, 1.0) > b);
  CHECK(theorem1_bound(2, 2, 4, 0.4, 0.05, 1.0, 1.0) > b);
  CHECK(theorem1_bound(2, 2, 3, 0.4, 0.05, 1.5, 1.0) > b);
  CHECK(theorem1_bound(2, 2, 3, 0.5, 0.05, 1.0, 1.0) < b);
}

TEST_CASE("config validation") {
  StabilityConfig c = base_config();
  CHECK_NOTHROW(validate(c));
  c.epsilons = {0.2};
  CHECK_NOTHROW(validate(c));
  c.epsilons = {0.25};
  CHECK_THROWS_AS(validate(c), UsageError);
  c.epsilons = {2.5};
  CHECK_THROWS_AS(validate(c), DomainError);
  c = base_config();
  c.epsilons.clear();
  CHECK_THROWS_AS(validate(c), UsageError);
  c = base_config();
  c.gamma = 1.0;
  CHECK_THROWS_AS(validate(c), UsageError);
  c = base_config();
  c.trials = 0;
  CHECK_THROWS_AS(validate(c), UsageError);
  CHECK(theorem_widths(3, 4) == std::vector<int>{1, 4, 4, 1});
  CHECK(theorem_widths(1, 4) == std::vector<int>{1, 1});
}

TEST_CASE("built networks are FRT and non-amplifying") {
  const SymmetricOperator op = testsupport::random_graph_laplacian(30, 2);
  const Spectrum s = eigendecompose(op);
  const SpectrumPartition p = gamma_partition(s, 0.2);
  StabilityConfig c = base_config();
  c.layers = 2;
  c.width = 3;
  for (auto kind : {FilterRecipe::Kind::kRandomPiecewise, FilterRecipe::Kind::kLowpass,
                    FilterRecipe::Kind::kIdentity}) {
    c.recipe.kind = kind;
    const MnnModel m = build_frt_network(c, s, p);
    CHECK(m.feature_widths == std::vector<int>{1, 3, 1});
    for (const FilterSpec* f : m.all_filters()) {
      CHECK(verify_frt(*f, s, p, 0.0).passes);
      CHECK(max_gain(*f, s.eigenvalues()) < 1.0);
    }
  }
}

TEST_CASE("zero perturbation rows vanish") {
  const SymmetricOperator op = testsupport::random_graph_laplacian(25, 3);
  const Spectrum s = eigendecompose(op);
  StabilityConfig c = base_config();
  c.epsilons = {0.0};
  c.layers = 2;
  c.width = 2;
  for (auto fam : {PerturbationFamily::kScalar, PerturbationFamily::kEigenbasisDiagonal}) {
    c.family = fam;
    const StabilityReport r =
        run_stability_sweep(c, op, s, Signal::from_vector(testsupport::random_vector(25, 1)));
    for (const auto& row : r.rows) {
      CHECK(row.empirical <= 1e-10);
      CHECK(row.bound <= 1e-10);
    }
  }
}

TEST_CASE("scalar family matches the closed-form spectral distance") {
  const SymmetricOperator op = scaled_laplacian(24, 7, 0.8);
  const Spectrum s = eigendecompose(op);
  const Eigen::VectorXd f = testsupport::random_vector(24, 9);
  StabilityConfig c = base_config();
  c.family = PerturbationFamily::kScalar;
  c.activation = Activation::kIdentity;
  c.recipe.kind = FilterRecipe::Kind::kIdentity;
  c.epsilons = {0.0, 0.02, 0.1, 0.2};
  c.trials = 1;
  const StabilityReport r = run_stability_sweep(c, op, s, Signal::from_vector(f));
  const SpectrumPartition p = gamma_partition(s, c.gamma);
  const MnnModel m = build_frt_network(c, s, p);
  const FilterSpec& h = m.layers[0].bank[0];
  const Eigen::VectorXd fhat = s.eigenvectors().transpose() * f;
  REQUIRE(r.rows.size() == 4);
  for (const auto& row : r.rows) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double lambda = s.eigenvalue(i);
      const double d = response_at(h, (1 + row.epsilon) * lambda) - response_at(h, lambda);
      acc += d * d * fhat(i) * fhat(i);
    }
    CHECK(std::abs(row.empirical - std::sqrt(acc)) <= 1e-9);
  }
  CHECK(r.rows.back().empirical > 0.0);
}

TEST_CASE("empirical distance is linear in the input norm") {
  const SymmetricOperator op = testsupport::random_graph_laplacian(20, 11);
  const Spectrum s = eigendecompose(op);
  const Eigen::VectorXd f = testsupport::random_vector(20, 4);
  StabilityConfig c = base_config();
  c.activation = Activation::kIdentity;
  const StabilityReport a = run_stability_sweep(c, op, s, Signal::from_vector(f));
  const StabilityReport b = run_stability_sweep(c, op, s, Signal::from_vector(3.0 * f));
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(std::abs(b.rows[i].empirical - 3.0 * a.rows[i].empirical) <= 1e-9);
    CHECK(b.rows[i].bound == doctest::Approx(3.0 * a.rows[i].bound));
  }
}

TEST_CASE("sweeps are dominated by the bound and reproducible") {
  const SymmetricOperator op = testsupport::random_graph_laplacian(30, 13);
  const Spectrum s = eigendecompose(op);
  const Signal f = Signal::from_vector(testsupport::random_vector(30, 2));
  StabilityConfig c = base_config();
  c.epsilons = {0.001, 0.05, 0.2};
  c.trials = 4;
  const std::vector<std::pair<int, int>> archs = {{1, 1}, {2, 2}, {3, 2}};
  for (auto fam : {PerturbationFamily::kScalar, PerturbationFamily::kEigenbasisDiagonal}) {
    c.family = fam;
    const StabilityReport a = run_stability_grid(c, archs, op, s, f);
    const StabilityReport b = run_stability_grid(c, archs, op, s, f);
    CHECK(a.violations() == 0);
    CHECK(a.rows.size() == 3 * 3 * 4);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].empirical == b.rows[i].empirical);
      CHECK(a.rows[i].seed == b.rows[i].seed);
      CHECK(a.rows[i].bound >= a.rows[i].empirical);
    }
    CHECK(a.delta == doctest::Approx(frt_delta(0.2, 0.2)));
    CHECK(a.lipschitz_b == a.lipschitz_b_hat);
  }
}

TEST_CASE("sweep preconditions") {
  const SymmetricOperator op = testsupport::random_graph_laplacian(12, 1);
  const Spectrum s = eigendecompose(op);
  const Signal f = Signal::from_vector(testsupport::random_vector(12, 2));
  StabilityConfig c = base_config();
  c.lipschitz_b = 1e-6;
  CHECK_THROWS_AS(run_stability_sweep(c, op, s, f), UsageError);
  c = base_config();
  CHECK_THROWS(run_stability_sweep(c, op, eigendecompose(op, 5), f));
  CHECK_THROWS(run_stability_sweep(c, op, s, Signal(Eigen::MatrixXd::Zero(12, 2))));
}

TEST_CASE("discriminability probe") {
  const SymmetricOperator op = testsupport::random_graph_laplacian(30, 21);
  const Spectrum s = eigendecompose(op);
  const Eigen::MatrixXd& q = s.eigenvectors();

  SUBCASE("single group gives no separation") {
    const auto rows = discriminability_probe({0.99}, {1e9}, s, q.col(3), q.col(20), 0.01);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].groups == 1);
    CHECK(rows[0].separation <= 1e-12);
  }
  SUBCASE("probes sharing a group are not separated") {
    const SpectrumPartition p = gamma_partition(s, 0.3);
    const auto group = p.group_of_index();
    Eigen::Index a = -1;
    Eigen::Index b = -1;
    for (Eigen::Index i = 2; i < s.size() && a < 0; ++i) {
      if (group[i] == group[i - 1] && s.eigenvalue(i - 1) > 0) {
        a = i - 1;
        b = i;
      }
    }
    REQUIRE(a >= 0);
    const auto rows = discriminability_probe({0.3}, {1e9}, s, q.col(a), q.col(b), 0.01);
    CHECK(rows[0].separation <= 1e-12);
  }
  SUBCASE("separated groups reach the non-amplifying gap") {
    const SpectrumPartition p = gamma_partition(s, 0.01);
    const auto group = p.group_of_index();
    REQUIRE(group[5] != group[25]);
    const auto rows = discriminability_probe({0.01}, {1e9}, s, 2.0 * q.col(5), 2.0 * q.col(25), 0.01);
    CHECK(rows[0].separation == doctest::Approx(2.0 * (2.0 - 2.0 * kNonAmplifyMargin)).epsilon(1e-12));
    CHECK(rows[0].bound > 0.0);
  }
  SUBCASE("separation shrinks with gamma and with B") {
    const Eigen::VectorXd a = testsupport::random_vector(30, 1);
    const Eigen::VectorXd b = testsupport::random_vector(30, 2);
    const std::vector<double> gammas = {0.01, 0.05, 0.1, 0.3, 0.6, 0.9};
    const auto rows = discriminability_probe(gammas, {1e9}, s, a, b, 0.01);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].separation <= rows[i - 1].separation + 1e-12);
      CHECK(rows[i].groups <= rows[i - 1].groups);
    }
    const auto by_b = discriminability_probe({0.05}, {0.01, 0.1, 1.0, 10.0}, s, a, b, 0.01);
    for (std::size_t i = 1; i < by_b.size(); ++i) {
      CHECK(by_b[i].separation >= by_b[i - 1].separation - 1e-12);
    }
    for (const auto& r : by_b) {
      CHECK(r.spread_after_activation >= 0.0);
      CHECK(r.spread_after_activation <= 1.0);
    }
  }
}
