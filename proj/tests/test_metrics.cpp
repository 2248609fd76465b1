#include <doctest.h>

#include <cmath>
#include <random>

#include "ofw/metrics.hpp"
#include "ofw/oracles.hpp"
#include "ofw/workloads.hpp"

using namespace ofw;

namespace {

Eigen::MatrixXd randn(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

std::vector<std::pair<double, double>> power_law(double lo, double hi, double (*f)(double)) {
  std::vector<std::pair<double, double>> s;
  for (double t = lo; t <= hi; t *= 1.25) s.emplace_back(t, f(t));
  return s;
}

std::vector<StepRecord> gaps(std::initializer_list<double> values) {
  std::vector<StepRecord> out;
  std::int64_t t = 1;
  for (double g : values) {
    StepRecord r;
    r.t = t++;
    r.g_fw = g;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("primal gap and regret") {
  CHECK(primal_gap(3.0, 1.0).value == 2.0);
  CHECK(primal_gap(1.0, 1.0).value == 0.0);
  CHECK_FALSE(primal_gap(1.0, 1.0).clamped);
  const PrimalGap low = primal_gap(1.0, 1.0 + 1e-6);
  CHECK(low.clamped);
  CHECK(low.value == kGapFloor);
  CHECK_FALSE(primal_gap(1.0, 1.0 + 1e-10).clamped);

  const std::vector<double> at_opt = {1.0, 1.0, 1.0};
  CHECK(average_regret(at_opt, 1.0) == 0.0);
  const std::vector<double> two = {3.0, 1.0};
  CHECK(average_regret(two, 1.0) == 1.0);
  CHECK_THROWS_AS(average_regret(std::vector<double>{}, 0.0), ArgumentError);

  std::mt19937_64 rng(1);
  std::vector<double> f(50);
  for (double& v : f) v = 2.0 + std::abs(randn(1, 1, rng)(0));
  CHECK(average_regret(f, 2.0) >= *std::min_element(f.begin(), f.end()) - 2.0 - 1e-9);
}

TEST_CASE("duality gaps") {
  const Shape s = Shape::vector(3);
  const SignedBasis a{1, -1, 2.0};
  CHECK(duality_gap_fw(Gradient(s, Eigen::MatrixXd::Zero(3, 1)), Params(s), a) == 0.0);
  const Params at_atom = atom_point(a, s);
  CHECK(duality_gap_fw(Gradient(s, Eigen::MatrixXd::Ones(3, 1)), at_atom, a) == 0.0);
  CHECK_THROWS_AS(duality_gap_fw(Gradient(Shape::vector(2), Eigen::MatrixXd::Ones(2, 1)), at_atom, a), ShapeError);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Shape ms = Shape::matrix(4, 5);
    Eigen::MatrixXd g = randn(4, 5, rng);
    g = (g.array().abs() > 1.0).select(g, 0.0);
    const Gradient sparse(ms, SparseMatrix(g.sparseView()));
    const Params theta(ms, randn(4, 5, rng));
    const RankOne fw{randn(4, 1, rng).normalized(), randn(5, 1, rng).normalized(), 1.5, true};
    const RankOne aw{randn(4, 1, rng).normalized(), randn(5, 1, rng).normalized(), 1.5, true};
    const Eigen::MatrixXd pfw = atom_point(fw, ms).values(), paw = atom_point(aw, ms).values();
    const double dense_fw = (g.array() * (theta.values() - pfw).array()).sum();
    const double dense_aw = (g.array() * (paw - pfw).array()).sum();
    REQUIRE(std::abs(duality_gap_fw(sparse, theta, fw) - dense_fw) <= 1e-10);
    REQUIRE(std::abs(duality_gap_aw(sparse, aw, fw) - dense_aw) <= 1e-10);
  }
}

TEST_CASE("gradient errors") {
  const Shape s = Shape::vector(2);
  const Gradient a(s, Eigen::MatrixXd(Eigen::Vector2d(1, -3))), b(s, Eigen::MatrixXd(Eigen::Vector2d(1, 0)));
  CHECK(grad_error(a, a, ErrorNorm::Inf) == 0.0);
  CHECK(grad_error(a, b, ErrorNorm::Inf) == 3.0);
  CHECK_THROWS_AS(grad_error(a, b, ErrorNorm::Operator), ArgumentError);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd x = randn(6, 4, rng), y = randn(6, 4, rng);
    const Shape ms = Shape::matrix(6, 4);
    const double ref = oracles::dense_top_sigma(x - y);
    CHECK(std::abs(grad_error(Gradient(ms, SparseMatrix(x.sparseView())), Gradient(ms, y), ErrorNorm::Operator) - ref) <=
          1e-6);
    CHECK(grad_error(Gradient(ms, x), Gradient(ms, y), ErrorNorm::Inf) == (x - y).cwiseAbs().maxCoeff());
  }
}

TEST_CASE("log-log slope") {
  const auto inv = power_law(10, 1000, [](double t) { return 1.0 / t; });
  const SlopeFit f = loglog_slope(inv, 10, 1000);
  CHECK(std::abs(f.slope + 1.0) <= 1e-9);
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(std::abs(loglog_slope(power_law(10, 1000, [](double t) { return std::pow(t, -0.5); }), 10, 1000).slope + 0.5) <=
        1e-9);
  const double s = loglog_slope(power_law(1, 2e5, [](double t) { return 3.0 * std::log(t) / t; }), 1e2, 1e5).slope;
  CHECK(s > -1.05);
  CHECK(s < -0.80);

  // exact power laws with an intercept
  for (double p : {-2.0, -0.3, 0.7}) {
    std::vector<std::pair<double, double>> pts;
    for (double t = 3; t < 5000; t *= 1.7) pts.emplace_back(t, 4.0 * std::pow(t, p));
    const SlopeFit g = loglog_slope(pts, 0, 1e9);
    CHECK(std::abs(g.slope - p) <= 1e-9);
    CHECK(std::abs(g.intercept - std::log(4.0)) <= 1e-9);
  }

  std::vector<std::pair<double, double>> with_zero = inv;
  with_zero.emplace_back(500.0, 0.0);
  with_zero.emplace_back(600.0, -1.0);
  const SlopeFit z = loglog_slope(with_zero, 10, 1000);
  CHECK(z.excluded == 2);
  CHECK(z.points == inv.size());

  const std::vector<std::pair<double, double>> few = {{1, 1}, {2, 0.5}, {3, 0.3}, {4, 0.25}};
  CHECK_THROWS_AS(loglog_slope(few, 0, 10), ArgumentError);
  CHECK_NOTHROW(loglog_slope(few, 0, 10, 3));
  CHECK_THROWS_AS(loglog_slope(inv, 2000, 3000), ArgumentError);
}

TEST_CASE("min gap over the tail") {
  CHECK(min_gap_tail(gaps({5, 4, 3, 2}), 4) == 2.0);
  CHECK(min_gap_tail(gaps({7, 7, 7, 7, 7}), 5) == 7.0);
  CHECK(min_gap_tail(gaps({1, 9, 8, 7, 6}), 5) == 6.0);  // tail is t = 3..5
  CHECK(min_gap_tail(gaps({1, 9, 8, 7, 6}), 2) == 9.0);
  CHECK_THROWS_AS(min_gap_tail(gaps({1, 2}), 3), ArgumentError);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<StepRecord> recs;
    for (int t = 1; t <= 200; ++t) {
      StepRecord r;
      r.t = t;
      r.g_fw = u(rng);
      recs.push_back(r);
    }
    const std::int64_t T = 1 + static_cast<std::int64_t>(u(rng) * 199);
    double brute = INFINITY;
    for (const auto& r : recs)
      if (r.t > T / 2 && r.t <= T) brute = std::min(brute, r.g_fw);
    REQUIRE(min_gap_tail(recs, T) == brute);

    // appending a smaller value inside the tail never raises the minimum
    const double before = min_gap_tail(recs, 200);
    recs[199].g_fw = before / 2;
    REQUIRE(min_gap_tail(recs, 200) <= before);
  }
}

TEST_CASE("checkpoints") {
  std::vector<std::int64_t> hit;
  for (std::int64_t t = 1; t <= 100; ++t)
    if (is_checkpoint(Cadence::Geometric, t, 100)) hit.push_back(t);
  CHECK(hit == std::vector<std::int64_t>{1, 2, 4, 8, 16, 32, 64, 100});
  for (std::int64_t t = 1; t <= 10; ++t) CHECK(is_checkpoint(Cadence::Every, t, 10));

  std::vector<std::int64_t> dense;
  for (std::int64_t t = 1; t <= 64; ++t)
    if (is_checkpoint(Cadence::Geometric, t, 64, 4)) dense.push_back(t);
  CHECK(dense == std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 13, 16, 19, 23, 27, 32, 38, 45, 54, 64});
}

TEST_CASE("evaluation at the interior optimum") {
  const Workload w = gen_fixed_design_lasso(LassoParams{});
  const EvalSpec spec = w.eval_spec(Cadence::Every);
  const Gradient g = w.grad_f(*w.theta_star);
  const Evaluation e = evaluate(spec, *w.theta_star, g);
  CHECK(std::abs(*e.h) <= 1e-12 * std::max(1.0, *w.f_star));
  CHECK(*e.grad_err_inf == 0.0);
  CHECK_FALSE(e.grad_err_op);
}

TEST_CASE("traced runs evaluate at checkpoints only") {
  McParams p;
  p.m1 = 6;
  p.m2 = 8;
  p.rank = 2;
  const Workload w = gen_mc(p);
  auto solver = make_solver(SolverKind::OFW, w.constraint, Harmonic{2});
  GradientOracle o = w.oracle_factory();
  auto st = w.stream_factory();
  const Trace tr = run_traced(*solver, o, *st, RunOptions{50, 1, 2}, w.eval_spec(Cadence::Geometric));
  REQUIRE(tr.rows.size() == 100);
  for (const auto& r : tr.rows) {
    const bool cp = is_checkpoint(Cadence::Geometric, r.step.t, 100);
    CHECK(r.eval.h.has_value() == cp);
    CHECK(r.eval.grad_err_op.has_value() == cp);
    if (cp) CHECK(*r.eval.grad_err_op <= std::sqrt(48.0) * *r.eval.grad_err_inf + 1e-12);
  }
  CHECK(tr.rows.back().eval.h);
  CHECK(tr.series([](const TraceRow& r) { return r.eval.h; }).size() == 8);
}
