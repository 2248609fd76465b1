#include "ofw/metrics.hpp"

#include <chrono>
#include <cmath>
#include <algorithm>
#include <limits>

namespace ofw {

PrimalGap primal_gap(double f_value, double f_star) {
  const double h = f_value - f_star;
  if (h < kGapFloor) return PrimalGap{kGapFloor, true};
  return PrimalGap{h, false};
}

double average_regret(std::span<const double> f_values, double f_star) {
  if (f_values.empty()) throw ArgumentError("average_regret needs at least one value");
  double sum = 0.0;
  for (double f : f_values) sum += f;
  return sum / static_cast<double>(f_values.size()) - f_star;
}

double duality_gap_fw(const Gradient& ghat, const Params& theta, const Atom& atom) {
  if (!(ghat.shape() == theta.shape())) throw ShapeError("duality_gap_fw: gradient and iterate shapes differ");
  check_compatible(atom, theta.shape());
  return ghat.dot(theta) - dot(atom, ghat);
}

double duality_gap_aw(const Gradient& ghat, const Atom& a_aw, const Atom& a_fw) {
  check_compatible(a_aw, ghat.shape());
  check_compatible(a_fw, ghat.shape());
  return dot(a_aw, ghat) - dot(a_fw, ghat);
}

double grad_error(const Gradient& ghat, const Gradient& g_true, ErrorNorm norm, const PowerIterConfig& power) {
  if (!(ghat.shape() == g_true.shape())) throw ShapeError("grad_error: shapes differ");
  if (norm == ErrorNorm::Operator && !ghat.shape().is_matrix()) {
    throw ArgumentError("operator norm needs matrix-shaped gradients");
  }
  const Eigen::MatrixXd diff = ghat.to_dense() - g_true.to_dense();
  if (norm == ErrorNorm::Inf) return diff.size() == 0 ? 0.0 : diff.cwiseAbs().maxCoeff();
  return top_singular_pair(diff, power).sigma;
}

SlopeFit loglog_slope(std::span<const std::pair<double, double>> series, double t_lo, double t_hi,
                      std::size_t min_points) {
  SlopeFit fit;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [t, v] : series) {
    if (t < t_lo || t > t_hi) continue;
    if (!(v > 0.0) || !(t > 0.0)) {
      ++fit.excluded;
      continue;
    }
    const double x = std::log(t);
    const double y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++fit.points;
  }
  if (fit.points < std::max<std::size_t>(min_points, 2)) {
    throw ArgumentError("loglog_slope needs >= " + std::to_string(min_points) + " positive points in [" + std::to_string(t_lo) + ", " +
                        std::to_string(t_hi) + "], got " + std::to_string(fit.points) + " (" +
                        std::to_string(fit.excluded) + " nonpositive excluded)");
  }
  const double n = static_cast<double>(fit.points);
  const double cxx = sxx - sx * sx / n;
  const double cxy = sxy - sx * sy / n;
  const double cyy = syy - sy * sy / n;
  if (!(cxx > 0.0)) throw ArgumentError("loglog_slope needs at least two distinct t values");
  fit.slope = cxy / cxx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r2 = cyy > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  return fit;
}

double min_gap_tail(std::span<const StepRecord> records, std::int64_t horizon) {
  if (horizon < 1) throw ArgumentError("min_gap_tail needs T >= 1");
  const std::int64_t lo = horizon / 2 + 1;
  double best = std::numeric_limits<double>::infinity();
  bool reached = false;
  for (const auto& r : records) {
    if (r.t >= lo && r.t <= horizon) best = std::min(best, r.g_fw);
    if (r.t == horizon) reached = true;
  }
  if (!reached) throw ArgumentError("trace does not reach t = " + std::to_string(horizon));
  return best;
}

// ---------------------------------------------------------------------------

bool is_checkpoint(Cadence cadence, std::int64_t t, std::int64_t final_t, int per_octave) {
  if (cadence == Cadence::Every) return true;
  if (t == final_t) return true;
  if (t < 1) return false;
  if (per_octave <= 1) return (t & (t - 1)) == 0;
  // t is a checkpoint when it is the rounding of some 2^(j / per_octave).
  const double j = std::floor(per_octave * std::log2(static_cast<double>(t)));
  for (double k = j - 1; k <= j + 1; ++k) {
    if (std::llround(std::exp2(k / per_octave)) == t) return true;
  }
  return false;
}

Evaluation evaluate(const EvalSpec& spec, const Params& theta, const Gradient& ghat) {
  Evaluation e;
  if (spec.f) {
    e.f_value = spec.f(theta);
    if (spec.f_star) {
      PrimalGap h = primal_gap(*e.f_value, *spec.f_star);
      e.h = h.value;
      e.h_clamped = h.clamped;
    }
  }
  if (spec.grad_f) {
    const Gradient g = spec.grad_f(theta);
    e.grad_err_inf = grad_error(ghat, g, ErrorNorm::Inf);
    if (spec.operator_norm && theta.shape().is_matrix()) {
      e.grad_err_op = grad_error(ghat, g, ErrorNorm::Operator, spec.power);
    }
  }
  return e;
}

std::vector<StepRecord> Trace::records() const {
  std::vector<StepRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.step);
  return out;
}

std::vector<std::pair<double, double>> Trace::series(
    const std::function<std::optional<double>(const TraceRow&)>& pick) const {
  std::vector<std::pair<double, double>> out;
  for (const auto& r : rows) {
    if (auto v = pick(r)) out.emplace_back(static_cast<double>(r.step.t), *v);
  }
  return out;
}

Trace run_traced(Solver& solver, GradientOracle& oracle, SampleStream& stream, const RunOptions& options,
                 const EvalSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t final_t = solver.t() - 1 + options.horizon * options.inner_repeats;
  Trace trace;
  trace.rows.reserve(static_cast<std::size_t>(options.horizon * options.inner_repeats));
  auto observer = [&](const Params& theta, const Gradient& ghat, const StepRecord& rec) {
    TraceRow row{rec, {}};
    if (is_checkpoint(spec.cadence, rec.t, final_t, spec.per_octave)) {
      row.eval = evaluate(spec, theta, ghat);
    }
    trace.rows.push_back(std::move(row));
  };
  RunResult result = run(solver, oracle, stream, options, observer);
  trace.truncated = result.truncated;
  trace.lmo_warnings = result.lmo_warnings;
  trace.saturated = result.saturated;
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

}  // namespace ofw
