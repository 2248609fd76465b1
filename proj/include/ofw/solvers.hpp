#pragma once

// Online Frank-Wolfe (O-FW) and online away-step Frank-Wolfe (O-AW).
//
// Both solvers are driven one step at a time with the current aggregated
// gradient; `run` wires a solver to a gradient oracle and a sample stream.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ofw/core.hpp"
#include "ofw/gradients.hpp"
#include "ofw/lmo.hpp"

namespace ofw {

enum class SolverKind { OFW, OAW };
enum class StepKind { FW, AW, Drop };

const char* to_string(SolverKind kind);
const char* to_string(StepKind kind);

struct StepRecord {
  std::int64_t t = 0;    // index of the solver step
  std::int64_t n_t = 0;  // non-drop steps taken, this one included
  StepKind kind = StepKind::FW;
  double gamma_hat = 0.0;
  double g_fw = 0.0;
  std::optional<double> g_aw;
  std::optional<AtomKey> fw_key;
  std::optional<AtomKey> away_key;
  std::int64_t elapsed_ns = 0;
  bool lmo_converged = true;
  bool saturated = false;
};

class Solver {
 public:
  virtual ~Solver() = default;

  /// One update of the iterate against the surrogate gradient `ghat`.
  virtual StepRecord step(const Gradient& ghat) = 0;

  virtual SolverKind kind() const = 0;
  virtual const Params& theta() const = 0;
  /// Index of the next step (starts at 1).
  virtual std::int64_t t() const = 0;
  virtual const ConstraintSet& constraint() const = 0;
};

/// theta_{t+1} = theta_t + gamma_t (a_t - theta_t), a_t = lmo(ghat).
class OfwSolver final : public Solver {
 public:
  OfwSolver(ConstraintSet constraint, StepSchedule schedule);

  StepRecord step(const Gradient& ghat) override;

  SolverKind kind() const override { return SolverKind::OFW; }
  const Params& theta() const override { return theta_; }
  std::int64_t t() const override { return t_; }
  const ConstraintSet& constraint() const override { return constraint_; }

 private:
  ConstraintSet constraint_;
  StepSchedule schedule_;
  Params theta_;
  std::int64_t t_ = 1;
};

/// Away-step variant over atomic sets. Keeps the iterate as an explicit
/// convex combination of atoms and counts non-drop steps in n.
class OawSolver final : public Solver {
 public:
  /// Throws UnsupportedError for trace-norm balls.
  OawSolver(ConstraintSet constraint, StepSchedule schedule);

  StepRecord step(const Gradient& ghat) override;

  SolverKind kind() const override { return SolverKind::OAW; }
  const Params& theta() const override { return theta_; }
  std::int64_t t() const override { return t_; }
  const ConstraintSet& constraint() const override { return constraint_; }
  const ActiveSet& active() const { return active_; }
  std::int64_t n() const { return n_; }

 private:
  ConstraintSet constraint_;
  StepSchedule schedule_;
  Params theta_;
  ActiveSet active_;
  std::int64_t t_ = 1;
  std::int64_t n_ = 0;
};

std::unique_ptr<Solver> make_solver(SolverKind kind, ConstraintSet constraint, StepSchedule schedule);

struct RunOptions {
  std::int64_t horizon = 1;        // rounds T
  std::int64_t batch = 1;          // samples pulled per round
  std::int64_t inner_repeats = 1;  // solver steps per round
};

/// Called after every step with the iterate the step started from and the
/// gradient it used. May fill in nothing; the record is already final.
using StepObserver = std::function<void(const Params& theta_t, const Gradient& ghat, const StepRecord& record)>;

struct RunResult {
  std::vector<StepRecord> records;
  bool truncated = false;
  std::int64_t samples = 0;
  std::int64_t lmo_warnings = 0;
  bool saturated = false;
};

RunResult run(Solver& solver, GradientOracle& oracle, SampleStream& stream, const RunOptions& options,
              const StepObserver& observer = {});

}  // namespace ofw
