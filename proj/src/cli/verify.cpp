#include "ofw/cli/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "ofw/metrics.hpp"
#include "ofw/oracles.hpp"
#include "ofw/workloads.hpp"

namespace ofw::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string g4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::optional<double> pick_h(const TraceRow& r) { return r.eval.h; }

Trace traced(const Workload& w, SolverKind kind, StepSchedule schedule, std::int64_t horizon, int per_octave) {
  auto solver = make_solver(kind, w.constraint, schedule);
  GradientOracle oracle = w.oracle_factory();
  auto stream = w.stream_factory();
  RunOptions opts;
  opts.horizon = horizon;
  EvalSpec spec = w.eval_spec(Cadence::Geometric, per_octave);
  spec.grad_f = nullptr;  // only h_t is needed here
  return run_traced(*solver, oracle, *stream, opts, spec);
}

double final_h(const Trace& tr) {
  for (auto it = tr.rows.rbegin(); it != tr.rows.rend(); ++it)
    if (it->eval.h) return *it->eval.h;
  throw InvariantError("trace has no evaluated h_t");
}

std::string fit_text(const SlopeFit& f) {
  return "slope " + g4(f.slope) + " (r2 " + g4(f.r2) + ", " + std::to_string(f.points) + " pts in [" + g4(f.t_lo) +
         ", " + g4(f.t_hi) + "])";
}

Eigen::VectorXd gaussian_vector(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = scale * normal(rng);
  return v;
}

Eigen::VectorXd integer_vector(Index n, std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

Index uniform_index(std::mt19937_64& rng, Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(rng); }

CriterionResult start(int id, const char* name) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  return r;
}

Eigen::VectorXd atom_vector(const Atom& a, Index n) { return atom_point(a, Shape::vector(n)).values().col(0); }

}  // namespace

std::string format_result(const CriterionResult& r) {
  char time[32];
  std::snprintf(time, sizeof time, "%.1f s", r.seconds);
  return std::string(r.pass ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name + ": " + r.detail + " (" +
         time + ")";
}

const std::vector<SuiteInfo>& suites() {
  static const std::vector<SuiteInfo> list = {
      {"all", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
      {"interior-lasso", {1}},
      {"boundary-lasso", {2}},
      {"grad-error", {3}},
      {"nonconvex", {4}},
      {"drop-lemma", {5}},
      {"active-set", {6}},
      {"lmo", {7}},
      {"aggregators", {8}},
      {"solver-reference", {9}},
      {"mc", {10}},
  };
  return list;
}

void Verifier::note(const std::string& msg) const {
  if (log_) *log_ << "  .. " << msg << std::endl;
}

std::vector<CriterionResult> Verifier::run(const std::string& suite) {
  for (const auto& s : suites()) {
    if (s.name != suite) continue;
    std::vector<CriterionResult> out;
    for (int id : s.criteria) out.push_back(criterion(id));
    return out;
  }
  std::string names;
  for (const auto& s : suites()) names += (names.empty() ? "" : ", ") + s.name;
  throw ArgumentError("unknown suite '" + suite + "'; available: " + names);
}

CriterionResult Verifier::criterion(int id) {
  const auto t0 = Clock::now();
  CriterionResult r;
  try {
    switch (id) {
      case 1: r = interior_lasso(); break;
      case 2: r = boundary_lasso(); break;
      case 3: r = grad_error(); break;
      case 4: r = nonconvex(); break;
      case 5: r = drop_lemma(); break;
      case 6: r = active_set(); break;
      case 7: r = lmo(); break;
      case 8: r = aggregators(); break;
      case 9: r = solver_reference(); break;
      case 10: r = mc(); break;
      default: throw ArgumentError("no criterion " + std::to_string(id));
    }
  } catch (const ArgumentError&) {
    throw;
  } catch (const std::exception& e) {
    r.id = id;
    r.pass = false;
    r.detail = std::string("threw: ") + e.what();
  }
  if (r.seconds == 0.0) r.seconds = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------

CriterionResult Verifier::interior_lasso() {
  CriterionResult r = start(1, "interior-lasso");
  note("O-FW on fixed-design LASSO n=100 m=40 sigma_w=10 r=1.1|theta_bar|_1, T=1e5");
  const Workload w = gen_fixed_design_lasso(LassoParams{});
  const Trace tr = traced(w, SolverKind::OFW, Harmonic{2}, 100000, 4);
  const SlopeFit fit = loglog_slope(tr.series(pick_h), 1e3, 1e5);
  r.pass = fit.slope <= -0.80;
  r.detail = "h_t " + fit_text(fit) + " vs <= -0.80; h_T = " + g4(final_h(tr));
  return r;
}

CriterionResult Verifier::boundary_lasso() {
  if (boundary_) return *boundary_;
  const auto t0 = Clock::now();
  CriterionResult r = start(2, "boundary-lasso");
  LassoParams p;
  p.r_factor = 0.15;
  Workload w = gen_fixed_design_lasso(p);
  note("reference solve (1e6 exact-gradient FW iterations)");
  const ReferenceResult ref = reference_solve(w, 1000000);
  w.f_star = ref.f_star;
  w.f_star_is_reference = true;
  const double rel_cert = ref.certificate / std::abs(ref.f_star);
  const bool cert_ok = rel_cert <= 1e-5;

  note("O-FW and O-AW at r = 0.15|theta_bar|_1, T=1e5");
  const Trace fw = traced(w, SolverKind::OFW, Harmonic{2}, 100000, 4);
  OawRun run{"boundary-lasso O-AW", {}, {}};
  std::optional<Trace> aw;
  try {
    aw = traced(w, SolverKind::OAW, Harmonic{2}, 100000, 4);
    run.records = aw->records();
  } catch (const InvariantError& e) {
    run.error = e.what();
  }
  oaw_runs_.push_back(run);
  if (!aw) {
    r.detail = "O-AW run aborted: " + run.error;
    r.seconds = seconds_since(t0);
    boundary_ = r;
    return r;
  }
  const SlopeFit fit = loglog_slope(aw->series(pick_h), 1e3, 1e5);
  const double h_fw = final_h(fw), h_aw = final_h(*aw);
  const SlopeFit fit_fw = loglog_slope(fw.series(pick_h), 1e3, 1e5);
  r.pass = cert_ok && fit.slope <= -0.80 && h_aw <= 1.5 * h_fw;
  r.detail = "O-AW h_t " + fit_text(fit) + " vs <= -0.80; h_T O-AW " + g4(h_aw) + " vs 1.5 x O-FW " + g4(h_fw) +
             " (O-FW slope " + g4(fit_fw.slope) + "); f_star " + g4(ref.f_star) + " certificate " +
             g4(ref.certificate) + " = " + g4(rel_cert) + " relative vs <= 1e-5";
  r.seconds = seconds_since(t0);
  boundary_ = r;
  return r;
}

CriterionResult Verifier::grad_error() {
  CriterionResult r = start(3, "grad-error");
  LassoParams p;
  p.n = 50;
  p.m = 20;
  note("random-design LASSO n=50 m=20, t up to 1e5");
  const Workload w = gen_random_design_lasso(p);
  std::mt19937_64 rng(derive_seed(p.seed, 99));
  const Params probe(w.shape(), oracles::random_feasible(w.constraint, rng));
  const Gradient truth = w.grad_f(probe);
  GradientOracle oracle = w.oracle_factory();
  auto stream = w.stream_factory();
  const std::int64_t horizon = 100000;
  std::vector<std::pair<double, double>> series;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    oracle.observe(*stream->next());
    if (is_checkpoint(Cadence::Geometric, t, horizon, 4)) {
      series.emplace_back(static_cast<double>(t), ofw::grad_error(oracle.gradient(probe).gradient, truth, ErrorNorm::Inf));
    }
  }
  const SlopeFit fit = loglog_slope(series, 1e2, 1e5);
  r.pass = fit.slope > -0.65 && fit.slope < -0.35;
  r.detail = "|grad F_t - grad f|_inf " + fit_text(fit) + " vs (-0.65, -0.35); error at t=1e5 " + g4(series.back().second);
  return r;
}

CriterionResult Verifier::nonconvex() {
  if (nonconvex_) return *nonconvex_;
  const auto t0 = Clock::now();
  CriterionResult r = start(4, "nonconvex");
  struct Case {
    SolverKind kind;
    double flip;
  };
  const std::vector<Case> cases = {{SolverKind::OFW, 0.0}, {SolverKind::OAW, 0.0}, {SolverKind::OFW, 0.25}};
  const std::int64_t horizon = std::int64_t{1} << 14;
  bool all = true;
  std::string detail;
  for (const Case& c : cases) {
    ClassificationParams p;
    p.m1 = p.m2 = 10;
    p.rank = 3;
    p.n_train = horizon;
    p.flip_frac = c.flip;
    p.radius = 5.0;
    p.constraint = ClassConstraint::L1;
    const std::string label = std::string(c.kind == SolverKind::OFW ? "O-FW" : "O-AW") + " flip " + g4(c.flip);
    note("sigmoid classification 10x10 rank 3, l1 radius 5, Power(0.75), " + label + ", T=2^14");
    const Workload w = gen_classification(p);
    auto solver = make_solver(c.kind, w.constraint, Power{0.75});
    GradientOracle oracle = w.oracle_factory();
    auto stream = w.stream_factory();
    RunOptions opts;
    opts.horizon = horizon;
    RunResult res;
    try {
      res = ofw::run(*solver, oracle, *stream, opts);
    } catch (const InvariantError& e) {
      if (c.kind == SolverKind::OAW) oaw_runs_.push_back({"nonconvex " + label, {}, e.what()});
      all = false;
      detail += (detail.empty() ? "" : "; ") + label + " aborted: " + e.what();
      continue;
    }
    if (c.kind == SolverKind::OAW) oaw_runs_.push_back({"nonconvex " + label, res.records, {}});

    std::vector<std::pair<double, double>> pts;
    for (int e : {10, 12, 14}) {
      const std::int64_t T = std::int64_t{1} << e;
      pts.emplace_back(static_cast<double>(T), min_gap_tail(res.records, T));
    }
    const bool monotone = pts[1].second <= pts[0].second && pts[2].second <= pts[1].second;
    const SlopeFit fit = loglog_slope(pts, 0.0, std::numeric_limits<double>::infinity(), 3);
    const bool ok = monotone && fit.slope <= -0.10;
    all = all && ok;
    detail += (detail.empty() ? "" : "; ") + label + ": min tail gap " + g4(pts[0].second) + " > " + g4(pts[1].second) +
              " > " + g4(pts[2].second) + (monotone ? "" : " (NOT non-increasing)") + ", slope " + g4(fit.slope);
  }
  r.pass = all;
  r.detail = detail + " vs non-increasing and slope <= -0.10";
  r.seconds = seconds_since(t0);
  nonconvex_ = r;
  return r;
}

CriterionResult Verifier::drop_lemma() {
  const auto t0 = Clock::now();
  if (!boundary_) boundary_lasso();
  if (!nonconvex_) nonconvex();
  CriterionResult r = start(5, "drop-lemma");
  std::int64_t violations = 0, steps = 0, drops = 0;
  std::int64_t slack = std::numeric_limits<std::int64_t>::max();
  std::string errors;
  for (const auto& run : oaw_runs_) {
    if (!run.error.empty()) {
      ++violations;
      errors += "; " + run.label + ": " + run.error;
    }
    for (const auto& rec : run.records) {
      ++steps;
      drops += rec.kind == StepKind::Drop;
      const std::int64_t half = (rec.t + 1) / 2;
      slack = std::min(slack, rec.n_t - half);
      if (rec.n_t < half) ++violations;
    }
  }
  r.pass = violations == 0 && oaw_runs_.size() >= 2 && steps > 0;
  r.detail = std::to_string(violations) + " violations of n_t >= ceil(t/2) over " + std::to_string(steps) +
             " O-AW steps in " + std::to_string(oaw_runs_.size()) + " runs (" + std::to_string(drops) +
             " drop steps, min n_t - ceil(t/2) = " + (steps ? std::to_string(slack) : std::string("n/a")) + ")" +
             errors;
  r.seconds = seconds_since(t0);
  return r;
}

CriterionResult Verifier::active_set() {
  CriterionResult r = start(6, "active-set");
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index n = 4;
  const double radius = 1.5;
  const Shape shape = Shape::vector(n);
  ActiveSet as;
  std::int64_t violations = 0, fw = 0, aw = 0, drop = 0, overshoot_checks = 0;
  double worst_sum = 0.0, worst_point = 0.0;
  std::string first;
  auto flag = [&](const std::string& what) {
    ++violations;
    if (first.empty()) first = what;
  };

  for (int op = 0; op < 10000; ++op) {
    const Eigen::VectorXd before = as.point(shape).values().col(0);
    Eigen::VectorXd expected;
    const int choice = as.size() >= 2 ? static_cast<int>(uniform_index(rng, 0, 2)) : 0;
    if (choice == 0) {
      const SignedBasis a{uniform_index(rng, 0, n - 1), unit(rng) < 0.5 ? -1 : 1, radius};
      // an empty set only admits the full step, as at t = 1
      const double gamma = as.empty() || unit(rng) < 0.05 ? 1.0 : std::max(1e-6, unit(rng));
      expected = (1.0 - gamma) * before + gamma * atom_vector(a, n);
      as.apply_fw_step(a, gamma);
      ++fw;
    } else {
      auto it = as.entries().begin();
      std::advance(it, uniform_index(rng, 0, static_cast<Index>(as.size()) - 1));
      const AtomKey key = it->first;
      const Eigen::VectorXd b = atom_vector(it->second.atom, n);
      const double gmax = as.gamma_max(key);
      if (op % 10 == 0) {
        ++overshoot_checks;
        ActiveSet copy = as;
        bool threw = false;
        try {
          copy.apply_away_step(key, gmax + 1e-6);
        } catch (const InvariantError&) {
          threw = true;
        }
        if (!threw) flag("step gamma_max + 1e-6 accepted at op " + std::to_string(op));
      }
      // O-AW only drops when gamma_max is below the scheduled step, so gamma_max <= 1
      const bool is_drop = choice == 2 && gmax <= 1.0;
      const double gamma = is_drop ? gmax : std::min(gmax, 1.0) * (0.01 + 0.98 * unit(rng));
      expected = (1.0 + gamma) * before - gamma * b;
      as.apply_away_step(key, gamma);
      if (is_drop) {
        ++drop;
        if (as.contains(key)) flag("drop kept atom " + key.str() + " at op " + std::to_string(op));
      } else {
        ++aw;
      }
    }
    double sum = 0.0;
    for (const auto& [key, e] : as.entries()) {
      if (!(e.weight > 0.0)) flag("nonpositive weight at op " + std::to_string(op));
      sum += e.weight;
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    if (std::abs(sum - 1.0) > 1e-9) flag("weights sum to " + g4(sum) + " at op " + std::to_string(op));
    const double err = (as.point(shape).values().col(0) - expected).cwiseAbs().maxCoeff();
    worst_point = std::max(worst_point, err);
    if (err > 1e-7) flag("reconstruction off by " + g4(err) + " at op " + std::to_string(op));
  }
  r.pass = violations == 0;
  r.detail = std::to_string(violations) + " violations in 10000 updates (" + std::to_string(fw) + " FW, " +
             std::to_string(aw) + " AW, " + std::to_string(drop) + " drop, " + std::to_string(overshoot_checks) +
             " overshoot rejections checked); max |sum - 1| " + g4(worst_sum) + ", max reconstruction error " +
             g4(worst_point) + (first.empty() ? "" : "; first: " + first);
  return r;
}

CriterionResult Verifier::lmo() {
  CriterionResult r = start(7, "lmo");
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::int64_t l1_bad = 0, vx_bad = 0, tr_bad = 0, tr_unconverged = 0;
  double tr_worst = 0.0;

  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = uniform_index(rng, 1, 20);
    const Eigen::VectorXd g = trial % 3 == 0 ? integer_vector(n, rng, -3, 3) : gaussian_vector(n, rng);
    const double radius = std::exp(normal(rng));
    const LmoOutput out = ofw::lmo(L1Ball{radius, n}, Gradient(Shape::vector(n), Eigen::MatrixXd(g)));
    const auto& a = std::get<SignedBasis>(out.atom);
    const SignedBasis b = oracles::brute_l1(g, radius);
    if (a.index != b.index || a.sign != b.sign) ++l1_bad;
  }

  for (int trial = 0; trial < 1000; ++trial) {
    const Index d = uniform_index(rng, 1, 6), k = uniform_index(rng, 1, 12);
    const bool ints = trial % 3 == 0;
    std::vector<Eigen::VectorXd> verts;
    for (Index j = 0; j < k; ++j) verts.push_back(ints ? integer_vector(d, rng, -2, 2) : gaussian_vector(d, rng));
    const VertexPolytope poly = VertexPolytope::from_vertices(verts);
    const Eigen::VectorXd g = ints ? integer_vector(d, rng, -2, 2) : gaussian_vector(d, rng);
    const LmoOutput out = ofw::lmo(poly, Gradient(Shape::vector(d), Eigen::MatrixXd(g)));
    if (std::get<Vertex>(out.atom).id != oracles::brute_vertices(g, *poly.vertices)) ++vx_bad;
  }

  for (int trial = 0; trial < 1000; ++trial) {
    const Index m1 = uniform_index(rng, 1, 20), m2 = uniform_index(rng, 1, 15);
    Eigen::MatrixXd g = gaussian_matrix(m1, m2, rng);
    if (trial % 10 == 0) g.setZero();
    if (trial % 10 == 1) g = gaussian_matrix(m1, 1, rng) * gaussian_matrix(1, m2, rng);
    const double radius = std::exp(normal(rng));
    const TraceNormBall ball{radius, m1, m2, {}};
    Gradient grad(Shape::matrix(m1, m2), g);
    if (trial % 2 == 1) grad = Gradient(Shape::matrix(m1, m2), SparseMatrix(g.sparseView()));
    const LmoOutput out = ofw::lmo(ball, grad);
    if (!out.converged) ++tr_unconverged;
    const double val = dot(out.atom, grad);
    const double ref = oracles::dense_trace_lmo_value(g, radius);
    const double rel = ref == 0.0 ? std::abs(val) : std::abs(val - ref) / std::abs(ref);
    tr_worst = std::max(tr_worst, rel);
    if (rel > 1e-6) ++tr_bad;
  }

  r.pass = l1_bad == 0 && vx_bad == 0 && tr_bad == 0;
  r.detail = "l1 mismatches " + std::to_string(l1_bad) + "/1000, vertex mismatches " + std::to_string(vx_bad) +
             "/1000, trace-norm beyond 1e-6 relative " + std::to_string(tr_bad) + "/1000 (worst " + g4(tr_worst) +
             ", " + std::to_string(tr_unconverged) + " power iterations unconverged)";
  return r;
}

CriterionResult Verifier::aggregators() {
  CriterionResult r = start(8, "aggregators");
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  double lasso_err = 0.0, mc_err = 0.0, replay_err = 0.0, fd_err = 0.0;
  std::int64_t fd_bad = 0, fd_checks = 0;

  for (int inst = 0; inst < 40; ++inst) {
    const Index n = uniform_index(rng, 1, 8), m = uniform_index(rng, 1, 5);
    const auto t = uniform_index(rng, 1, 50);
    const bool fixed = inst % 2 == 0;
    auto a_fixed = std::make_shared<const Eigen::MatrixXd>(gaussian_matrix(m, n, rng));
    auto gram = std::make_shared<const Eigen::MatrixXd>(a_fixed->transpose() * *a_fixed);
    std::vector<LassoSample> samples;
    GradientOracle oracle = GradientOracle::lasso(n);
    for (Index s = 0; s < t; ++s) {
      LassoSample ls;
      if (fixed) {
        ls.a = a_fixed;
        ls.gram = gram;
      } else {
        ls.a = std::make_shared<const Eigen::MatrixXd>(gaussian_matrix(m, n, rng));
      }
      ls.y = gaussian_vector(m, rng, 3.0);
      oracle.observe(ls);
      samples.push_back(ls);
    }
    const Eigen::VectorXd theta = gaussian_vector(n, rng);
    const Eigen::VectorXd got = oracle.gradient(Params(Shape::vector(n), theta)).gradient.to_dense().col(0);
    lasso_err = std::max(lasso_err, (got - oracles::naive_lasso_grad(samples, theta)).cwiseAbs().maxCoeff());
  }

  for (Link link : {Link::Gaussian, Link::Logistic, Link::Poisson}) {
    for (int inst = 0; inst < 20; ++inst) {
      const Index m1 = uniform_index(rng, 1, 6), m2 = uniform_index(rng, 1, 6);
      const auto t = uniform_index(rng, 1, 50);
      GradientOracle oracle = GradientOracle::matrix_completion(m1, m2, link);
      std::vector<McSample> samples;
      for (Index s = 0; s < t; ++s) {
        McSample ms{uniform_index(rng, 0, m1 - 1), uniform_index(rng, 0, m2 - 1), 0.0};
        if (link == Link::Gaussian) ms.y = normal(rng);
        else if (link == Link::Logistic) ms.y = static_cast<double>(uniform_index(rng, 0, 1));
        else ms.y = static_cast<double>(uniform_index(rng, 0, 5));
        oracle.observe(ms);
        samples.push_back(ms);
      }
      const Eigen::MatrixXd theta = 0.5 * gaussian_matrix(m1, m2, rng);
      const Eigen::MatrixXd got = oracle.gradient(Params(Shape::matrix(m1, m2), theta)).gradient.to_dense();
      mc_err = std::max(mc_err, (got - oracles::naive_mc_grad(samples, link, theta)).cwiseAbs().maxCoeff());
    }
  }

  for (LossKind kind : {LossKind::Sigmoid, LossKind::Logistic}) {
    for (int inst = 0; inst < 40; ++inst) {
      const Index n = uniform_index(rng, 1, 10);
      const auto t = uniform_index(rng, 1, 50);
      const bool sparse = inst % 2 == 1;
      GradientOracle oracle = GradientOracle::replay(Shape::vector(n), kind);
      std::vector<LabeledVector> samples;
      for (Index s = 0; s < t; ++s) {
        Eigen::VectorXd x = gaussian_vector(n, rng);
        LabeledVector lv{x, uniform_index(rng, 0, 1) ? 1 : -1};
        if (sparse) {
          for (Index i = 0; i < n; ++i)
            if (uniform_index(rng, 0, 2) == 0) x(i) = 0.0;
          lv.x = SparseVector(x.sparseView());
        }
        oracle.observe(lv);
        samples.push_back(lv);
      }
      const Eigen::VectorXd theta = gaussian_vector(n, rng, 0.15);
      const Eigen::VectorXd got = oracle.gradient(Params(Shape::vector(n), theta)).gradient.to_dense().col(0);
      replay_err = std::max(replay_err, (got - oracles::naive_replay_grad(samples, kind, theta)).cwiseAbs().maxCoeff());

      const Eigen::VectorXd d = gaussian_vector(n, rng).normalized();
      const double fd = oracles::directional_fd(
          [&](const Eigen::VectorXd& x) { return oracles::naive_replay_loss(samples, kind, x); }, theta, d);
      const double gd = got.dot(d);
      const double rel = std::abs(fd - gd) / std::max({std::abs(fd), std::abs(gd), 1e-8});
      fd_err = std::max(fd_err, rel);
      ++fd_checks;
      if (rel > 1e-4) ++fd_bad;
    }
  }

  r.pass = lasso_err <= 1e-10 && mc_err <= 1e-10 && replay_err <= 1e-10 && fd_bad == 0;
  r.detail = "max-norm gap to naive averages: lasso " + g4(lasso_err) + ", mc " + g4(mc_err) + ", replay " +
             g4(replay_err) + " vs <= 1e-10; replay vs finite differences worst relative " + g4(fd_err) + " over " +
             std::to_string(fd_checks) + " checks vs <= 1e-4";
  return r;
}

CriterionResult Verifier::solver_reference() {
  CriterionResult r = start(9, "solver-reference");
  std::mt19937_64 rng(9);
  double worst = 0.0;
  int instances = 0;
  for (int inst = 0; inst < 60; ++inst) {
    const Index d = inst < 20 ? 3 : uniform_index(rng, 2, 6);
    VertexPolytope poly = VertexPolytope::simplex(d);
    if (inst >= 40) {
      std::vector<Eigen::VectorXd> verts;
      for (Index j = 0; j < d + 2; ++j) verts.push_back(gaussian_vector(d, rng));
      poly = VertexPolytope::from_vertices(verts);
    }
    const Eigen::MatrixXd b = gaussian_matrix(d, d, rng);
    const Eigen::MatrixXd q = b.transpose() * b + 0.1 * Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd c = gaussian_vector(d, rng);
    const int k = static_cast<int>(uniform_index(rng, 1, 3));
    const auto path = oracles::reference_ofw_quadratic(q, c, *poly.vertices, k, 10);

    OfwSolver solver(poly, Harmonic{k});
    for (int step = 1; step <= 10; ++step) {
      const Eigen::VectorXd x = solver.theta().values().col(0);
      solver.step(Gradient(Shape::vector(d), Eigen::MatrixXd(q * x - c)));
      worst = std::max(worst, (solver.theta().values().col(0) - path[static_cast<std::size_t>(step)]).cwiseAbs().maxCoeff());
    }
    ++instances;
  }
  r.pass = worst <= 1e-12;
  r.detail = "max coordinate deviation from the straight-line reference " + g4(worst) + " over " +
             std::to_string(instances) + " 10-step trajectories vs <= 1e-12";
  return r;
}

CriterionResult Verifier::mc() {
  CriterionResult r = start(10, "mc");
  std::map<double, std::pair<double, int>> mean;
  std::string per_seed;
  const int seeds = 5;
  for (int s = 1; s <= seeds; ++s) {
    McParams p;
    p.seed = static_cast<std::uint64_t>(s);
    note("matrix completion 20x50 rank 3, noise 3, R=1.1|theta_bar|_*, 1e4 observations, seed " + std::to_string(s));
    Workload w = gen_mc(p);
    std::get<TraceNormBall>(w.constraint).power.max_iter = 200;
    const Trace tr = traced(w, SolverKind::OFW, Harmonic{2}, 10000, 4);
    const auto series = tr.series(pick_h);
    for (const auto& [t, h] : series) {
      mean[t].first += h;
      ++mean[t].second;
    }
    per_seed += (per_seed.empty() ? "" : ", ") + g4(loglog_slope(series, 1e2, 1e4).slope);
  }
  std::vector<std::pair<double, double>> avg;
  for (const auto& [t, acc] : mean)
    if (acc.second == seeds) avg.emplace_back(t, acc.first / seeds);
  const SlopeFit fit = loglog_slope(avg, 1e2, 1e4);
  r.pass = fit.slope <= -0.70;
  r.detail = "seed-averaged h_t " + fit_text(fit) + " vs <= -0.70 (per-seed slopes " + per_seed + ")";
  return r;
}

// ---------------------------------------------------------------------------

int verify_command(const std::string& suite, std::ostream& out, std::ostream& err) {
  Verifier v(&out);
  std::vector<CriterionResult> results;
  bool known = false;
  for (const auto& s : suites()) known = known || s.name == suite;
  if (!known) {
    try {
      v.run(suite);
    } catch (const ArgumentError& e) {
      err << "error: " << e.what() << '\n';
    }
    return 2;
  }
  for (const auto& s : suites()) {
    if (s.name != suite) continue;
    for (int id : s.criteria) {
      results.push_back(v.criterion(id));
      out << format_result(results.back()) << std::endl;
    }
  }
  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  out << passed << "/" << results.size() << " criteria passed\n";
  return passed == static_cast<long>(results.size()) ? 0 : 1;
}

int lmo_check_command(const std::string& dims, std::int64_t trials, std::ostream& out, std::ostream& err) {
  if (trials < 1) {
    err << "error: trials must be >= 1\n";
    return 2;
  }
  long long a = 0, b = 0;
  char extra = 0;
  const bool matrix = std::sscanf(dims.c_str(), "%lldx%lld%c", &a, &b, &extra) == 2;
  const bool vector = !matrix && std::sscanf(dims.c_str(), "%lld%c", &a, &extra) == 1;
  if ((!matrix && !vector) || a < 1 || (matrix && b < 1)) {
    err << "error: dims must look like '20x15' or '6', got '" << dims << "'\n";
    return 2;
  }
  std::mt19937_64 rng(derive_seed(static_cast<std::uint64_t>(a * 1000 + b), static_cast<std::uint64_t>(trials)));
  if (matrix) {
    std::int64_t bad = 0, unconverged = 0;
    double worst = 0.0;
    for (std::int64_t i = 0; i < trials; ++i) {
      const Eigen::MatrixXd g = gaussian_matrix(a, b, rng);
      const TraceLmo t = lmo_trace(Gradient(Shape::matrix(a, b), g), 1.0, PowerIterConfig{});
      unconverged += !t.converged;
      const double val = dot(Atom{t.atom}, Gradient(Shape::matrix(a, b), g));
      const double ref = oracles::dense_trace_lmo_value(g, 1.0);
      const double rel = ref == 0.0 ? std::abs(val) : std::abs(val - ref) / std::abs(ref);
      worst = std::max(worst, rel);
      bad += rel > 1e-6;
    }
    out << "trace-norm LMO " << a << "x" << b << ": " << trials << " trials, " << bad
        << " beyond 1e-6 relative of dense SVD (worst " << g4(worst) << "), " << unconverged << " unconverged\n";
    return bad == 0 ? 0 : 1;
  }
  std::int64_t l1_bad = 0, vx_bad = 0;
  for (std::int64_t i = 0; i < trials; ++i) {
    const Eigen::VectorXd g = i % 3 == 0 ? integer_vector(a, rng, -3, 3) : gaussian_vector(a, rng);
    const SignedBasis x = lmo_l1(g, 1.0), y = oracles::brute_l1(g, 1.0);
    l1_bad += x.index != y.index || x.sign != y.sign;
    std::vector<Eigen::VectorXd> verts;
    for (long long j = 0; j < 2 * a; ++j) verts.push_back(gaussian_vector(a, rng));
    const VertexPolytope poly = VertexPolytope::from_vertices(verts);
    vx_bad += lmo_vertices(g, poly).id != oracles::brute_vertices(g, *poly.vertices);
  }
  out << "l1 LMO n=" << a << ": " << trials << " trials, " << l1_bad << " mismatches with exhaustive scan\n";
  out << "vertex LMO (" << 2 * a << " vertices in R^" << a << "): " << trials << " trials, " << vx_bad
      << " mismatches with exhaustive scan\n";
  return l1_bad == 0 && vx_bad == 0 ? 0 : 1;
}

}  // namespace ofw::cli
