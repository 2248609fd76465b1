#include "ofw/solvers.hpp"

#include <chrono>
#include <cmath>

namespace ofw {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t nanos_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

void check_gradient(const Gradient& ghat, const Params& theta) {
  if (!(ghat.shape() == theta.shape())) {
    throw ShapeError("gradient " + ghat.shape().str() + " does not match iterate " + theta.shape().str());
  }
  if (!ghat.all_finite()) throw ArgumentError("gradient must be finite");
}

}  // namespace

const char* to_string(SolverKind kind) { return kind == SolverKind::OFW ? "ofw" : "oaw"; }

const char* to_string(StepKind kind) {
  switch (kind) {
    case StepKind::FW: return "FW";
    case StepKind::AW: return "AW";
    case StepKind::Drop: return "Drop";
  }
  return "?";
}

// ---------------------------------------------------------------------------

OfwSolver::OfwSolver(ConstraintSet constraint, StepSchedule schedule)
    : constraint_(std::move(constraint)), schedule_(schedule) {
  validate(constraint_);
  validate(schedule_);
  theta_ = Params::zeros(shape_of(constraint_));
}

StepRecord OfwSolver::step(const Gradient& ghat) {
  const auto start = Clock::now();
  check_gradient(ghat, theta_);

  LmoOutput out = lmo(constraint_, ghat);
  const double gamma = step_size(schedule_, t_);

  StepRecord rec;
  rec.t = t_;
  rec.n_t = t_;
  rec.kind = StepKind::FW;
  rec.gamma_hat = gamma;
  rec.g_fw = ghat.dot(theta_) - dot(out.atom, ghat);
  rec.fw_key = canonical_key(out.atom);
  rec.lmo_converged = out.converged;

  theta_.values() *= (1.0 - gamma);
  add_scaled(theta_.values(), out.atom, gamma);
  ++t_;
  rec.elapsed_ns = nanos_since(start);
  return rec;
}

// ---------------------------------------------------------------------------

OawSolver::OawSolver(ConstraintSet constraint, StepSchedule schedule)
    : constraint_(std::move(constraint)), schedule_(schedule) {
  validate(constraint_);
  validate(schedule_);
  if (!is_atomic(constraint_)) {
    throw UnsupportedError("O-AW needs an atomic constraint set, got " + describe(constraint_));
  }
  theta_ = Params::zeros(shape_of(constraint_));
}

StepRecord OawSolver::step(const Gradient& ghat) {
  const auto start = Clock::now();
  check_gradient(ghat, theta_);

  LmoOutput out = lmo(constraint_, ghat);
  const double dot_fw = dot(out.atom, ghat);
  const double dot_theta = ghat.dot(theta_);

  StepRecord rec;
  rec.t = t_;
  rec.g_fw = dot_theta - dot_fw;
  rec.fw_key = canonical_key(out.atom);
  rec.lmo_converged = out.converged;

  // Away atom: the active atom most aligned with the gradient, lowest key on ties.
  std::optional<AtomKey> away;
  double dot_aw = 0.0;
  for (const auto& [key, entry] : active_.entries()) {
    const double d = dot(entry.atom, ghat);
    if (!away || d > dot_aw) {
      away = key;
      dot_aw = d;
    }
  }
  if (away) rec.g_aw = dot_aw - dot_fw;

  const double fw_slope = dot_fw - dot_theta;
  const double away_slope = dot_theta - dot_aw;
  if (!away || active_.size() == 1 || fw_slope <= away_slope) {
    ++n_;
    rec.kind = StepKind::FW;
    rec.gamma_hat = step_size(schedule_, n_);
    active_.apply_fw_step(out.atom, rec.gamma_hat);
  } else {
    rec.away_key = away;
    const double gmax = active_.gamma_max(*away);
    if (gmax >= step_size(schedule_, n_) - kDropTolerance) {
      ++n_;
      rec.kind = StepKind::AW;
      rec.gamma_hat = step_size(schedule_, n_);
    } else {
      rec.kind = StepKind::Drop;
      rec.gamma_hat = gmax;
    }
    active_.apply_away_step(*away, rec.gamma_hat);
  }

  theta_ = active_.point(theta_.shape());
  rec.n_t = n_;
  if (2 * n_ < t_) {
    throw InvariantError("non-drop counter " + std::to_string(n_) + " below half of " + std::to_string(t_) + " steps");
  }
  ++t_;
  rec.elapsed_ns = nanos_since(start);
  return rec;
}

std::unique_ptr<Solver> make_solver(SolverKind kind, ConstraintSet constraint, StepSchedule schedule) {
  if (kind == SolverKind::OFW) return std::make_unique<OfwSolver>(std::move(constraint), schedule);
  return std::make_unique<OawSolver>(std::move(constraint), schedule);
}

// ---------------------------------------------------------------------------

RunResult run(Solver& solver, GradientOracle& oracle, SampleStream& stream, const RunOptions& options,
              const StepObserver& observer) {
  if (options.horizon < 1) throw ArgumentError("horizon must be >= 1");
  if (options.batch < 1) throw ArgumentError("batch must be >= 1");
  if (options.inner_repeats < 1) throw ArgumentError("inner_repeats must be >= 1");
  if (!(oracle.shape() == solver.theta().shape())) throw ShapeError("oracle and solver shapes differ");

  RunResult result;
  result.records.reserve(static_cast<std::size_t>(options.horizon * options.inner_repeats));
  Params theta_before;

  for (std::int64_t round = 1; round <= options.horizon; ++round) {
    for (std::int64_t b = 0; b < options.batch; ++b) {
      std::optional<Sample> s = stream.next();
      if (!s) {
        result.truncated = true;
        return result;
      }
      oracle.observe(*s);
      ++result.samples;
    }
    for (std::int64_t r = 0; r < options.inner_repeats; ++r) {
      const auto start = Clock::now();
      OracleGradient og = oracle.gradient(solver.theta());
      if (observer) theta_before = solver.theta();
      StepRecord rec = solver.step(og.gradient);
      rec.elapsed_ns = nanos_since(start);
      rec.saturated = og.saturated;
      result.saturated = result.saturated || og.saturated;
      if (!rec.lmo_converged) ++result.lmo_warnings;
      if (observer) observer(theta_before, og.gradient, rec);
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

}  // namespace ofw
