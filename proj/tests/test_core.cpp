#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ofw/core.hpp"

using namespace ofw;

namespace {

SignedBasis e(Index i, int sign = 1, double r = 1.0) { return SignedBasis{i, sign, r}; }

AtomKey key_of(const Atom& a) { return *canonical_key(a); }

Eigen::VectorXd point_of(const ActiveSet& as, Index n) { return as.point(Shape::vector(n)).values().col(0); }

}  // namespace

TEST_CASE("step sizes") {
  CHECK(step_size(Harmonic{2}, 1) == 1.0);
  CHECK(step_size(Harmonic{2}, 3) == 0.5);
  CHECK(step_size(Power{0.75}, 16) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK_THROWS_AS(step_size(Harmonic{2}, 0), ArgumentError);
  CHECK_THROWS_AS(step_size(Power{0.4}, 1), ArgumentError);
  CHECK_THROWS_AS(step_size(Power{1.0}, 1), ArgumentError);
  CHECK_THROWS_AS(step_size(Harmonic{0}, 1), ArgumentError);
}

TEST_CASE("step sizes start in (0, 1] and strictly decrease") {
  for (int k = 1; k <= 5; ++k) {
    CHECK(step_size(Harmonic{k}, 1) == 1.0);
    for (std::int64_t n = 1; n < 2000; ++n) REQUIRE(step_size(Harmonic{k}, n + 1) < step_size(Harmonic{k}, n));
  }
  for (double a : {0.5, 0.6, 0.75, 0.99}) {
    CHECK(step_size(Power{a}, 1) == 1.0);
    for (std::int64_t n = 1; n < 2000; ++n) REQUIRE(step_size(Power{a}, n + 1) < step_size(Power{a}, n));
  }
}

TEST_CASE("params and gradients check shapes and finiteness") {
  CHECK_THROWS_AS(Shape::vector(0), ArgumentError);
  CHECK_THROWS_AS(Shape::matrix(2, 0), ArgumentError);
  CHECK_THROWS_AS(Params(Shape::vector(3), Eigen::MatrixXd::Zero(2, 1)), ShapeError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 1);
  bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Params(Shape::vector(2), bad), ArgumentError);

  Eigen::MatrixXd g(2, 2);
  g << 1, -2, 3, 0.5;
  const Gradient dense(Shape::matrix(2, 2), g);
  const Gradient sparse(Shape::matrix(2, 2), SparseMatrix(g.sparseView()));
  const Params theta(Shape::matrix(2, 2), Eigen::MatrixXd::Constant(2, 2, 2.0));
  CHECK(dense.dot(theta) == doctest::Approx(5.0));
  CHECK(sparse.dot(theta) == doctest::Approx(5.0));
  CHECK(sparse.max_abs() == 3.0);
  CHECK_THROWS_AS(dense.dot(Params(Shape::vector(4))), ShapeError);
}

TEST_CASE("active set point") {
  ActiveSet empty;
  CHECK(point_of(empty, 3) == Eigen::VectorXd::Zero(3));

  ActiveSet single;
  single.apply_fw_step(e(0, 1, 2.0), 1.0);
  CHECK(point_of(single, 2) == Eigen::Vector2d(2, 0));

  ActiveSet two;
  two.apply_fw_step(e(0), 1.0);
  two.apply_fw_step(e(1, -1), 0.25);
  CHECK(point_of(two, 2).isApprox(Eigen::Vector2d(0.75, -0.25)));

  CHECK_THROWS_AS(two.point(Shape::vector(1)), ShapeError);
  CHECK_THROWS_AS(two.point(Shape::matrix(2, 2)), ShapeError);
}

TEST_CASE("gamma_max") {
  auto with_weight = [](double w) {
    ActiveSet as;
    as.apply_fw_step(e(0), 1.0);
    as.apply_fw_step(e(1), w);
    return as;
  };
  CHECK(with_weight(0.25).gamma_max(key_of(e(1))) == doctest::Approx(1.0 / 3));
  CHECK(with_weight(0.5).gamma_max(key_of(e(1))) == doctest::Approx(1.0));
  CHECK(with_weight(0.1).gamma_max(key_of(e(1))) == doctest::Approx(1.0 / 9));

  ActiveSet one;
  one.apply_fw_step(e(0), 1.0);
  CHECK_THROWS_AS(one.gamma_max(key_of(e(0))), InvariantError);
}

TEST_CASE("fw step weights") {
  ActiveSet as;
  const SignedBasis a = e(0), b = e(1);
  as.apply_fw_step(a, 1.0);
  CHECK(as.size() == 1);
  CHECK(as.weight(key_of(a)) == 1.0);

  as.apply_fw_step(b, 0.5);
  CHECK(as.weight(key_of(a)) == 0.5);
  CHECK(as.weight(key_of(b)) == 0.5);

  // re-entering atom merges by key
  as.apply_fw_step(a, 0.5);
  CHECK(as.size() == 2);
  CHECK(as.weight(key_of(a)) == doctest::Approx(0.75));
  CHECK(as.weight(key_of(b)) == doctest::Approx(0.25));

  as.apply_fw_step(b, 1.0);
  CHECK(as.size() == 1);
  CHECK(as.weight(key_of(b)) == 1.0);

  CHECK_THROWS_AS(as.apply_fw_step(a, 0.0), ArgumentError);
  CHECK_THROWS_AS(as.apply_fw_step(a, 1.5), ArgumentError);
}

TEST_CASE("away and drop steps") {
  const SignedBasis a = e(0), b = e(1);
  ActiveSet as;
  as.apply_fw_step(a, 1.0);
  as.apply_fw_step(b, 0.1);
  as.apply_away_step(key_of(b), 1.0 / 9);
  CHECK(as.size() == 1);
  CHECK_FALSE(as.contains(key_of(b)));
  CHECK(as.weight(key_of(a)) == doctest::Approx(1.0).epsilon(1e-12));

  ActiveSet half;
  half.apply_fw_step(a, 1.0);
  half.apply_fw_step(b, 0.5);
  ActiveSet copy = half;
  half.apply_away_step(key_of(b), 0.5);
  CHECK(half.weight(key_of(a)) == doctest::Approx(0.75));
  CHECK(half.weight(key_of(b)) == doctest::Approx(0.25));

  CHECK_THROWS_AS(copy.apply_away_step(key_of(b), 2.0), InvariantError);
}

TEST_CASE("gamma_max is the exact drop boundary") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (int trial = 0; trial < 200; ++trial) {
    ActiveSet as;
    as.apply_fw_step(e(0), 1.0);
    as.apply_fw_step(e(1, -1), u(rng));
    as.apply_fw_step(e(2), u(rng));
    const AtomKey away = key_of(e(trial % 3, trial % 3 == 1 ? -1 : 1));
    const double gmax = as.gamma_max(away);

    ActiveSet over = as;
    CHECK_THROWS_AS(over.apply_away_step(away, gmax + 1e-6), InvariantError);
    ActiveSet exact = as;
    exact.apply_away_step(away, gmax);
    CHECK_FALSE(exact.contains(away));
    CHECK(exact.weight_sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("random update sequences keep weights and reconstruction consistent") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Index n = 5;
  ActiveSet as;
  for (int op = 0; op < 5000; ++op) {
    const Eigen::VectorXd before = point_of(as, n);
    Eigen::VectorXd expected;
    if (as.size() < 2 || u(rng) < 0.5) {
      const SignedBasis a = e(static_cast<Index>(u(rng) * n), u(rng) < 0.5 ? -1 : 1, 2.0);
      const double gamma = as.empty() ? 1.0 : 0.01 + 0.98 * u(rng);
      expected = (1 - gamma) * before + gamma * atom_point(a, Shape::vector(n)).values().col(0);
      as.apply_fw_step(a, gamma);
    } else {
      auto it = as.entries().begin();
      std::advance(it, static_cast<long>(u(rng) * static_cast<double>(as.size())));
      const AtomKey k = it->first;
      const Eigen::VectorXd b = atom_point(it->second.atom, Shape::vector(n)).values().col(0);
      const double gamma = std::min(1.0, as.gamma_max(k)) * (u(rng) < 0.3 ? 1.0 : u(rng));
      expected = (1 + gamma) * before - gamma * b;
      as.apply_away_step(k, gamma);
    }
    double sum = 0.0;
    for (const auto& [k, entry] : as.entries()) {
      REQUIRE(entry.weight > 0.0);
      sum += entry.weight;
    }
    REQUIRE(std::abs(sum - 1.0) <= 1e-9);
    REQUIRE((point_of(as, n) - expected).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("atoms") {
  CHECK(key_of(e(3, -1)) == key_of(e(3, -1, 5.0)));
  CHECK_FALSE(key_of(e(3, -1)) == key_of(e(3, 1)));
  CHECK_FALSE(canonical_key(RankOne{Eigen::VectorXd::Unit(2, 0), Eigen::VectorXd::Unit(2, 1), 1.0, false}));

  const RankOne r{Eigen::Vector2d(0.6, 0.8), Eigen::Vector3d(0, 1, 0), 2.0, true};
  const Params p = atom_point(r, Shape::matrix(2, 3));
  CHECK(p.values()(0, 1) == doctest::Approx(-1.2));
  CHECK(p.values()(1, 1) == doctest::Approx(-1.6));
  CHECK_THROWS_AS(atom_point(r, Shape::matrix(3, 2)), ShapeError);
  CHECK_THROWS_AS(atom_point(e(4), Shape::vector(3)), ShapeError);

  // u^T G v on a sparse gradient equals the dense contraction
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 3);
  g(0, 1) = 3.0;
  g(1, 2) = -1.0;
  const Gradient sparse(Shape::matrix(2, 3), SparseMatrix(g.sparseView()));
  CHECK(dot(r, sparse) == doctest::Approx((p.values().array() * g.array()).sum()));
}

TEST_CASE("rank-one atoms are never merged") {
  ActiveSet as;
  const RankOne r{Eigen::VectorXd::Unit(2, 0), Eigen::VectorXd::Unit(2, 0), 1.0, true};
  as.apply_fw_step(r, 1.0);
  as.apply_fw_step(r, 0.5);
  CHECK(as.size() == 2);
  const Params p = as.point(Shape::matrix(2, 2));
  CHECK(p.values()(0, 0) == doctest::Approx(-1.0));
}
