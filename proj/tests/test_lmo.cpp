#include <doctest.h>

#include <cmath>
#include <random>

#include "ofw/lmo.hpp"
#include "ofw/oracles.hpp"

using namespace ofw;

namespace {

Eigen::MatrixXd randn(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

Gradient vec_grad(const Eigen::VectorXd& g) { return Gradient(Shape::vector(g.size()), Eigen::MatrixXd(g)); }

}  // namespace

TEST_CASE("l1 lmo examples") {
  const SignedBasis a = lmo_l1(Eigen::Vector3d(3, -5, 1), 2.0);
  CHECK(a.index == 1);
  CHECK(a.sign == 1);
  CHECK(a.radius == 2.0);

  const SignedBasis z = lmo_l1(Eigen::Vector2d(0, 0), 1.0);
  CHECK(z.index == 0);
  CHECK(z.sign == -1);

  CHECK_THROWS_AS(lmo_l1(Eigen::VectorXd(0), 1.0), ArgumentError);
}

TEST_CASE("l1 lmo matches the exhaustive scan and is scale invariant") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0.01, 100.0);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd g = randn(6, 1, rng);
    if (trial % 4 == 0) g = g.array().round();
    const SignedBasis a = lmo_l1(g, 1.0), b = oracles::brute_l1(g, 1.0);
    REQUIRE(a.index == b.index);
    REQUIRE(a.sign == b.sign);
    const SignedBasis c = lmo_l1(pos(rng) * g, 1.0);
    REQUIRE(c.index == a.index);
    REQUIRE(c.sign == a.sign);
  }
}

TEST_CASE("vertex lmo") {
  const VertexPolytope p = VertexPolytope::from_vertices({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)});
  CHECK(lmo_vertices(Eigen::Vector2d(1, 0), p).id == 1);
  CHECK(lmo_vertices(Eigen::Vector2d(1, 1), p).id == 0);
  CHECK_THROWS(VertexPolytope::from_vertices({}));
  CHECK_THROWS_AS(lmo_vertices(Eigen::Vector3d(1, 1, 1), p), ShapeError);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Eigen::VectorXd> verts;
    for (int j = 0; j < 5; ++j) verts.push_back(randn(3, 1, rng));
    const VertexPolytope q = VertexPolytope::from_vertices(verts);
    const Eigen::VectorXd g = randn(3, 1, rng);
    REQUIRE(lmo_vertices(g, q).id == oracles::brute_vertices(g, *q.vertices));
  }
}

TEST_CASE("top singular pair") {
  Eigen::MatrixXd d(2, 2);
  d << 2, 0, 0, 1;
  const SingularPair p = top_singular_pair(d, {});
  CHECK(p.sigma == doctest::Approx(2.0));
  CHECK(std::abs(p.u(0)) == doctest::Approx(1.0));
  CHECK(std::abs(p.v(0)) == doctest::Approx(1.0));
  CHECK(p.u(0) * p.v(0) > 0);

  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 0) = 3;
  CHECK(top_singular_pair(s, {}).sigma == doctest::Approx(3.0));

  const SingularPair z = top_singular_pair(Eigen::MatrixXd::Zero(3, 2), {});
  CHECK(z.sigma == 0.0);
  CHECK(z.u == Eigen::VectorXd::Unit(3, 0));
  CHECK(z.v == Eigen::VectorXd::Unit(2, 0));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd m = randn(5, 4, rng);
    const PowerIterConfig cfg;
    const SingularPair q = top_singular_pair(m, cfg);
    const double ref = oracles::dense_top_sigma(m);
    REQUIRE(std::abs(q.sigma - ref) <= 1e-6 * ref);
    const double scale = cfg.tol * std::max(1.0, m.norm());
    CHECK((m * q.v - q.sigma * q.u).norm() <= scale);
    CHECK((m.transpose() * q.u - q.sigma * q.v).norm() <= scale);

    // sparse path agrees, and repeated calls are bitwise identical
    const SingularPair sp = top_singular_pair(SparseMatrix(m.sparseView()), cfg);
    CHECK(std::abs(sp.sigma - ref) <= 1e-6 * ref);
    const SingularPair again = top_singular_pair(m, cfg);
    CHECK(again.sigma == q.sigma);
    CHECK(again.u == q.u);
    CHECK(again.v == q.v);
  }
}

TEST_CASE("non-convergence is flagged") {
  std::mt19937_64 rng(4);
  PowerIterConfig cfg;
  cfg.max_iter = 1;
  cfg.tol = 1e-14;
  const SingularPair p = top_singular_pair(randn(8, 7, rng), cfg);
  CHECK_FALSE(p.converged);
  CHECK(p.sigma > 0.0);
}

TEST_CASE("trace lmo") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
  g(0, 0) = 1;
  const TraceLmo t = lmo_trace(Gradient(Shape::matrix(2, 2), g), 1.0, {});
  const Params p = atom_point(t.atom, Shape::matrix(2, 2));
  CHECK(p.values()(0, 0) == doctest::Approx(-1.0));
  CHECK(p.values().cwiseAbs().sum() == doctest::Approx(1.0));

  const Gradient zero(Shape::matrix(3, 2), Eigen::MatrixXd::Zero(3, 2));
  const TraceLmo tz = lmo_trace(zero, 1.0, {});
  CHECK(dot(tz.atom, zero) == 0.0);
  CHECK(tz.atom.u.norm() == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd m = randn(6, 5, rng);
    const Gradient gm(Shape::matrix(6, 5), m);
    const TraceLmo a = lmo_trace(gm, 2.0, {});
    CHECK(a.atom.negated);
    CHECK(a.atom.radius == 2.0);
    CHECK(a.atom.u.norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.atom.v.norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dot(a.atom, gm) <= oracles::dense_trace_lmo_value(m, 2.0) + 1e-6);
  }
}

TEST_CASE("lmo dispatch") {
  const Eigen::Vector3d g(3, -5, 1);
  const LmoOutput l1 = lmo(L1Ball{2.0, 3}, vec_grad(g));
  CHECK(std::get<SignedBasis>(l1.atom).index == 1);

  const VertexPolytope simplex = VertexPolytope::simplex(3);
  CHECK(std::get<Vertex>(lmo(simplex, vec_grad(g)).atom).id == 1);

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
  m(1, 2) = 4;
  const LmoOutput tr = lmo(TraceNormBall{1.0, 2, 3, {}}, Gradient(Shape::matrix(2, 3), m));
  CHECK(dot(tr.atom, Gradient(Shape::matrix(2, 3), m)) == doctest::Approx(-4.0));

  CHECK_THROWS_AS(lmo(L1Ball{1.0, 4}, vec_grad(g)), ShapeError);
  CHECK_THROWS_AS(lmo(TraceNormBall{1.0, 3, 2, {}}, Gradient(Shape::matrix(2, 3), m)), ShapeError);
  CHECK_THROWS_AS(validate(ConstraintSet{L1Ball{0.0, 3}}), ArgumentError);
  CHECK_THROWS_AS(validate(ConstraintSet{TraceNormBall{-1.0, 2, 2, {}}}), ArgumentError);
}

TEST_CASE("lmo output minimizes over random feasible points") {
  std::mt19937_64 rng(6);
  std::vector<Eigen::VectorXd> verts;
  for (int j = 0; j < 6; ++j) verts.push_back(randn(4, 1, rng));
  const std::vector<ConstraintSet> sets = {L1Ball{1.5, 4}, VertexPolytope::from_vertices(verts),
                                           TraceNormBall{2.0, 3, 4, {}}};
  for (const ConstraintSet& c : sets) {
    const Shape shape = shape_of(c);
    for (int trial = 0; trial < 5; ++trial) {
      const Gradient g(shape, randn(shape.rows, shape.cols, rng));
      const double best = dot(lmo(c, g).atom, g);
      for (int k = 0; k < 1000; ++k) {
        const Params x(shape, oracles::random_feasible(c, rng));
        REQUIRE(best <= g.dot(x) + 1e-9);
      }
    }
  }
}
