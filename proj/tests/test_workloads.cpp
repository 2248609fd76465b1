#include <doctest.h>

#include <cmath>

#include "ofw/metrics.hpp"
#include "ofw/workloads.hpp"

using namespace ofw;

namespace {

std::vector<Sample> drain(SampleStream& s, std::size_t n) {
  std::vector<Sample> out;
  while (out.size() < n) {
    auto x = s.next();
    if (!x) break;
    out.push_back(*x);
  }
  return out;
}

double l1_radius(const Workload& w) { return std::get<L1Ball>(w.constraint).radius; }

}  // namespace

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("fixed-design LASSO with an interior optimum") {
  LassoParams p;
  const Workload w = gen_fixed_design_lasso(p);
  REQUIRE(w.theta_star);
  REQUIRE(w.f_star);
  CHECK_FALSE(w.f_star_is_reference);
  const Eigen::VectorXd bar = w.theta_star->values().col(0);
  CHECK((bar.array() != 0.0).count() == 10);
  CHECK(l1_radius(w) == doctest::Approx(1.1 * bar.lpNorm<1>()));
  CHECK(*w.f_star == doctest::Approx(0.5 * 40 * 100.0));
  CHECK(std::abs(w.f(*w.theta_star) - *w.f_star) <= 1e-9);
  CHECK(w.grad_f(*w.theta_star).max_abs() <= 1e-9);
  const EvalSpec spec = w.eval_spec();
  CHECK(std::abs(*evaluate(spec, *w.theta_star, w.grad_f(*w.theta_star)).h) <= 1e-12 * *w.f_star);

  // f is the expected sample loss: a Monte Carlo average of 1/2 |Y - A theta|^2 tracks it
  auto st = w.stream_factory();
  const Params zero(w.shape());
  double acc = 0.0;
  const int n = 4000;
  for (const Sample& s : drain(*st, n)) {
    const auto& ls = std::get<LassoSample>(s);
    acc += 0.5 * ls.y.squaredNorm();
  }
  CHECK(acc / n == doctest::Approx(w.f(zero)).epsilon(0.03));
}

TEST_CASE("noiseless samples give a zero gradient at theta_bar") {
  LassoParams p;
  p.sigma_w = 0.0;
  const Workload w = gen_fixed_design_lasso(p);
  GradientOracle o = w.oracle_factory();
  auto st = w.stream_factory();
  for (int t = 1; t <= 20; ++t) {
    o.observe(*st->next());
    REQUIRE(o.gradient(*w.theta_star).gradient.max_abs() <= 1e-10);
  }
}

TEST_CASE("boundary LASSO needs a reference optimum") {
  LassoParams p;
  p.r_factor = 0.15;
  Workload w = gen_fixed_design_lasso(p);
  CHECK_FALSE(w.theta_star);
  CHECK_FALSE(w.f_star);
  attach_reference(w);
  REQUIRE(w.f_star);
  CHECK(w.f_star_is_reference);
  REQUIRE(w.f_star_certificate);
  CHECK(*w.f_star_certificate < 1e-5 * *w.f_star);
  // strictly above the unconstrained optimum, which lies outside the ball
  CHECK(*w.f_star > 0.5 * 40 * 100.0);
}

TEST_CASE("reference solve on an interior LASSO recovers the analytic optimum") {
  const Workload w = gen_fixed_design_lasso(LassoParams{});
  const ReferenceResult r = reference_solve(w);
  CHECK(std::abs(r.f_star - *w.f_star) <= 1e-6);
  CHECK(r.f_star >= *w.f_star - 1e-9);
  CHECK(r.f_star - *w.f_star <= r.certificate + 1e-9);
}

TEST_CASE("reference solve on a toy quadratic over the simplex") {
  // min 1/2 |x - (0.8, 0.6)|^2 over the simplex: projection (0.6, 0.4), value 0.04
  const Eigen::Vector2d c(0.8, 0.6);
  Workload w;
  w.constraint = VertexPolytope::simplex(2);
  w.f = [c](const Params& x) { return 0.5 * (x.values().col(0) - c).squaredNorm(); };
  w.grad_f = [c](const Params& x) { return Gradient(Shape::vector(2), Eigen::MatrixXd(x.values().col(0) - c)); };
  const ReferenceResult r = reference_solve(w, 20000);
  CHECK(r.f_star == doctest::Approx(0.04).epsilon(1e-6));
  CHECK(r.theta.values()(0, 0) == doctest::Approx(0.6).epsilon(1e-3));

  Workload bare;
  bare.constraint = VertexPolytope::simplex(2);
  CHECK_THROWS_AS(reference_solve(bare), ArgumentError);
}

TEST_CASE("random-design LASSO") {
  LassoParams p;
  p.n = 20;
  p.m = 10;
  const Workload w = gen_random_design_lasso(p);
  REQUIRE(w.theta_star);
  CHECK(w.grad_f(*w.theta_star).max_abs() <= 1e-9);
  // gradient error at a fixed point shrinks as samples accumulate
  GradientOracle o = w.oracle_factory();
  auto st = w.stream_factory();
  const Params probe(w.shape(), Eigen::MatrixXd::Constant(20, 1, 0.05));
  const Gradient truth = w.grad_f(probe);
  double early = 0.0;
  for (int t = 1; t <= 20000; ++t) {
    o.observe(*st->next());
    if (t == 20) early = grad_error(o.gradient(probe).gradient, truth, ErrorNorm::Inf);
  }
  CHECK(grad_error(o.gradient(probe).gradient, truth, ErrorNorm::Inf) < early / 5);
}

TEST_CASE("streams are reproducible") {
  const Workload a = gen_fixed_design_lasso(LassoParams{});
  auto s1 = a.stream_factory(), s2 = a.stream_factory();
  for (int i = 0; i < 10; ++i) {
    CHECK(std::get<LassoSample>(*s1->next()).y == std::get<LassoSample>(*s2->next()).y);
  }
  const Workload m = gen_mc(McParams{});
  auto m1 = m.stream_factory(), m2 = m.stream_factory();
  for (int i = 0; i < 50; ++i) {
    const auto x = std::get<McSample>(*m1->next()), y = std::get<McSample>(*m2->next());
    CHECK(x.k == y.k);
    CHECK(x.l == y.l);
    CHECK(x.y == y.y);
  }
  LassoParams other;
  other.seed = 2;
  auto s3 = gen_fixed_design_lasso(other).stream_factory();
  CHECK(std::get<LassoSample>(*s3->next()).y != std::get<LassoSample>(*a.stream_factory()->next()).y);
}

TEST_CASE("matrix completion") {
  McParams p;
  const Workload w = gen_mc(p);
  REQUIRE(w.theta_star);
  const Eigen::MatrixXd bar = w.theta_star->values();
  const double nuclear = Eigen::JacobiSVD<Eigen::MatrixXd>(bar).singularValues().sum();
  CHECK(std::get<TraceNormBall>(w.constraint).radius == doctest::Approx(1.1 * nuclear).epsilon(1e-10));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(bar);
  CHECK(svd.singularValues()(3) <= 1e-9 * svd.singularValues()(0));
  CHECK(*w.f_star == doctest::Approx(1.5));
  CHECK(w.grad_f(*w.theta_star).max_abs() <= 1e-12);
  CHECK_FALSE(w.long_running);

  McParams quiet = p;
  quiet.noise_var = 0.0;
  const Workload q = gen_mc(quiet);
  CHECK(std::abs(q.f(*q.theta_star)) <= 1e-15);

  // the per-cell surrogate gradient averages to grad f
  GradientOracle o = w.oracle_factory();
  auto st = w.stream_factory();
  const Params zero(w.shape());
  for (int t = 0; t < 200000; ++t) o.observe(*st->next());
  CHECK(grad_error(o.gradient(zero).gradient, w.grad_f(zero), ErrorNorm::Inf) <= 0.1 / 1000 * 30);

  McParams tight = p;
  tight.r_factor = 0.5;
  CHECK_FALSE(gen_mc(tight).theta_star);
  McParams bad = p;
  bad.rank = 0;
  CHECK_THROWS_AS(gen_mc(bad), ArgumentError);
}

TEST_CASE("matrix completion with non-Gaussian links") {
  for (Link link : {Link::Logistic, Link::Poisson}) {
    McParams p;
    p.m1 = 5;
    p.m2 = 6;
    p.rank = 2;
    p.link = link;
    const Workload w = gen_mc(p);
    REQUIRE(w.theta_star);
    CHECK(w.grad_f(*w.theta_star).max_abs() <= 1e-12);
    // theta_bar minimizes the expected loss
    const Params off(w.shape(), w.theta_star->values().array() + 0.1);
    CHECK(w.f(off) > *w.f_star);
    auto st = w.stream_factory();
    for (int i = 0; i < 100; ++i) {
      const double y = std::get<McSample>(*st->next()).y;
      CHECK(y >= 0.0);
      CHECK(y == std::round(y));
    }
  }
}

TEST_CASE("paper-scale matrix completion is flagged") {
  McParams p;
  p.m1 = 200;
  p.m2 = 5000;
  p.rank = 20;
  CHECK(gen_mc(p).long_running);
}

TEST_CASE("classification labels") {
  ClassificationParams p;
  p.m1 = p.m2 = 8;
  p.rank = 3;
  p.n_train = 10000;
  const auto clean = classification_samples(p);
  const Workload w0 = gen_classification(p);
  CHECK(w0.info.at("flipped") == 0.0);

  // independent recomputation of theta_bar from the documented seeds
  std::mt19937_64 rng(derive_seed(p.seed, 1));
  const Eigen::MatrixXd u = gaussian_matrix(8, 3, rng), v = gaussian_matrix(8, 3, rng);
  const Eigen::MatrixXd bar = u * v.transpose();
  for (const Sample& s : *clean) {
    const auto& lv = std::get<LabeledVector>(s);
    const Eigen::VectorXd& x = std::get<Eigen::VectorXd>(lv.x);
    REQUIRE(lv.y == ((Eigen::Map<const Eigen::VectorXd>(bar.data(), 64).dot(x) >= 0) ? 1 : -1));
  }

  p.flip_frac = 0.25;
  const auto noisy = classification_samples(p);
  std::int64_t diff = 0;
  for (std::size_t i = 0; i < clean->size(); ++i) {
    const auto& a = std::get<LabeledVector>((*clean)[i]);
    const auto& b = std::get<LabeledVector>((*noisy)[i]);
    REQUIRE(std::get<Eigen::VectorXd>(a.x) == std::get<Eigen::VectorXd>(b.x));
    diff += a.y != b.y;
  }
  const double sigma = std::sqrt(10000 * 0.25 * 0.75);
  CHECK(std::abs(static_cast<double>(diff) - 2500.0) <= 3 * sigma);
  CHECK(gen_classification(p).info.at("flipped") == static_cast<double>(diff));
}

TEST_CASE("classification workload") {
  ClassificationParams p;
  p.m1 = 4;
  p.m2 = 5;
  p.rank = 2;
  p.n_train = 300;
  const Workload tr = gen_classification(p);
  CHECK(tr.shape() == Shape::matrix(4, 5));
  CHECK(std::holds_alternative<TraceNormBall>(tr.constraint));
  CHECK_FALSE(tr.f_star);
  auto st = tr.stream_factory();
  CHECK(drain(*st, 1000).size() == 300);

  p.constraint = ClassConstraint::L1;
  const Workload l1 = gen_classification(p);
  CHECK(l1.shape() == Shape::vector(20));
  // f and grad_f are the training averages: the full oracle agrees with them
  GradientOracle o = l1.oracle_factory();
  auto s2 = l1.stream_factory();
  for (const Sample& s : drain(*s2, 300)) o.observe(s);
  const Params theta(l1.shape(), Eigen::MatrixXd::Constant(20, 1, 0.01));
  CHECK(grad_error(o.gradient(theta).gradient, l1.grad_f(theta), ErrorNorm::Inf) <= 1e-12);

  p.flip_frac = 1.0;
  CHECK_THROWS_AS(gen_classification(p), ArgumentError);
}

TEST_CASE("radius overrides") {
  Workload w = gen_fixed_design_lasso(LassoParams{});
  const double l1 = w.theta_star->values().lpNorm<1>();
  set_radius(w, 2 * l1);
  CHECK(l1_radius(w) == 2 * l1);
  CHECK(w.theta_star);
  CHECK(w.f_star);
  set_radius(w, 0.5 * l1);
  CHECK_FALSE(w.theta_star);
  CHECK_FALSE(w.f_star);
  CHECK(w.info.at("radius") == 0.5 * l1);
  CHECK_THROWS_AS(set_radius(w, 0.0), ArgumentError);

  Workload poly;
  poly.constraint = VertexPolytope::simplex(2);
  CHECK_THROWS_AS(set_radius(poly, 1.0), UnsupportedError);
}
