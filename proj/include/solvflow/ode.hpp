#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace solvflow::ode {

using State = Eigen::VectorXd;
using Rhs = std::function<State(double t, const State& y)>;

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double init_step = 1e-3;
  double max_step = std::numeric_limits<double>::infinity();
  /// Step failure once h < min_step_ratio * max(1, |t|).
  double min_step_ratio = 1e-14;
  /// Optional partition of the state into consecutive blocks; the step error
  /// is then the worst block error, each block scaled by its own norm.
  std::vector<Eigen::Index> blocks;
};

enum class StepVerdict { Accept, Reject, Stop };

/// Inspects (and may modify) a trial state that already passed error
/// control. Reject halves the step and retries; Stop ends the advance with
/// the (possibly modified) state committed.
using AcceptHook = std::function<StepVerdict(double t, State& y)>;

enum class Status { Reached, Stopped, StepFailure };

/// Dormand-Prince 5(4) with PI step-size control. The error of a step is
/// measured as ||err||_2 / max(abs_tol, rel_tol * max(||y||, ||y_new||)) and
/// the step is accepted when this is <= 1. Deterministic for a given input.
class DormandPrince {
 public:
  DormandPrince(Rhs f, Options opts);

  /// Advances (t, y) to exactly t_target unless a hook stops early or the
  /// step size underflows. The last proposed step size carries over between
  /// calls, so clipping to sample times does not throttle the controller.
  Status advance(double& t, State& y, double t_target, const AcceptHook& hook = nullptr);

  double proposed_step() const { return h_; }
  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }
  std::size_t rhs_evaluations() const { return evals_; }

 private:
  double error_ratio(const State& err, const State& y, const State& y_new) const;

  Rhs f_;
  Options opts_;
  double h_;
  double err_prev_ = 1e-4;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
  std::size_t evals_ = 0;
};

}  // namespace solvflow::ode
