#pragma once

// Optimality gaps, regret, duality gaps, gradient errors and the log-log
// slope fits used to check empirical convergence rates.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ofw/core.hpp"
#include "ofw/lmo.hpp"
#include "ofw/solvers.hpp"

namespace ofw {

/// Reporting floor for primal gaps measured against a numerical reference optimum.
inline constexpr double kGapFloor = -1e-9;

struct PrimalGap {
  double value = 0.0;
  bool clamped = false;  // raw gap fell below kGapFloor
};

/// h = f(theta_t) - f_star.
PrimalGap primal_gap(double f_value, double f_star);

/// T^-1 sum_t f(theta_t) - f_star.
double average_regret(std::span<const double> f_values, double f_star);

/// <ghat, theta - atom>
double duality_gap_fw(const Gradient& ghat, const Params& theta, const Atom& atom);
/// <ghat, a_aw - a_fw>
double duality_gap_aw(const Gradient& ghat, const Atom& a_aw, const Atom& a_fw);

enum class ErrorNorm { Inf, Operator };

/// ||ghat - g_true|| in the max-entry or operator (top singular value) norm.
double grad_error(const Gradient& ghat, const Gradient& g_true, ErrorNorm norm, const PowerIterConfig& power = {});

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
  std::size_t excluded = 0;  // nonpositive values dropped from the window
  double t_lo = 0.0;
  double t_hi = 0.0;
};

/// Least squares of log(value) on log(t) over t in [t_lo, t_hi]. Needs at
/// least `min_points` (default five) positive values in the window.
SlopeFit loglog_slope(std::span<const std::pair<double, double>> series, double t_lo, double t_hi,
                      std::size_t min_points = 5);

/// min of g_fw over steps floor(T/2)+1 .. T.
double min_gap_tail(std::span<const StepRecord> records, std::int64_t horizon);

// ---------------------------------------------------------------------------

enum class Cadence { Every, Geometric };

/// Geometric checkpoints are t = 1, 2, 4, 8, ... plus the final step;
/// per_octave > 1 adds the roundings of 2^(j / per_octave) in between.
bool is_checkpoint(Cadence cadence, std::int64_t t, std::int64_t final_t, int per_octave = 1);

struct Evaluation {
  std::optional<double> h;
  std::optional<double> grad_err_inf;
  std::optional<double> grad_err_op;
  std::optional<double> f_value;
  bool h_clamped = false;
};

/// What can be measured about a workload beyond the solver's own records.
struct EvalSpec {
  std::function<double(const Params&)> f;
  std::function<Gradient(const Params&)> grad_f;
  std::optional<double> f_star;
  Cadence cadence = Cadence::Geometric;
  int per_octave = 1;
  bool operator_norm = true;  // also measure grad_err_op on matrix shapes
  PowerIterConfig power;
};

Evaluation evaluate(const EvalSpec& spec, const Params& theta, const Gradient& ghat);

struct TraceRow {
  StepRecord step;
  Evaluation eval;
};

struct Trace {
  std::vector<TraceRow> rows;
  std::string digest;
  std::vector<std::uint64_t> seeds;
  double wall_seconds = 0.0;
  bool truncated = false;
  std::int64_t lmo_warnings = 0;
  bool saturated = false;

  std::vector<StepRecord> records() const;
  /// (t, value) pairs where `pick` yields a value.
  std::vector<std::pair<double, double>> series(const std::function<std::optional<double>(const TraceRow&)>& pick) const;
};

/// Runs `solver` and evaluates `spec` at its checkpoints.
Trace run_traced(Solver& solver, GradientOracle& oracle, SampleStream& stream, const RunOptions& options,
                 const EvalSpec& spec);

}  // namespace ofw
