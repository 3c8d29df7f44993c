#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "solvflow/matcore.hpp"

namespace solvflow {

// The three matrix ODEs on the abelian-ideal data A = ad(e0)|R^n:
//   bracket     A' = -tr(S(A)^2) A + 1/2 [A,[A,A^t]] - 1/2 tr(A) [A,A^t]
//   normalized  B' = [B,[B,B^t]] - tr(B) [B,B^t] + ||[B,B^t]||^2 B   (||B|| = 1,
//               in the rescaled time ds = ||A||^2/2 dt)
//   gradient    A' = 4 [A,[A,A^t]]   (negative gradient of ||[A,A^t]||^2)

enum class FlowKind { Bracket, Normalized, Gradient };

std::string to_string(FlowKind k);
FlowKind flow_kind_from_string(const std::string& s);

Mat bracket_rhs(const Mat& a);
/// Requires ||B|| = 1 within 1e-6.
Mat normalized_rhs(const Mat& b);
Mat gradient_rhs(const Mat& a);
/// Dispatch on kind; Normalized skips the unit-norm precondition so it can be
/// evaluated at Runge-Kutta stage points.
Mat flow_rhs(FlowKind kind, const Mat& a);

struct FlowSpec {
  FlowKind kind = FlowKind::Bracket;
  Mat A0 = Mat(1);
  double t_end = 10.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double init_step = 1e-3;
  double sample_stride = 0.1;
  /// Stop once ||RHS|| <= eps * max(1, ||A||).
  std::optional<double> stop_when_stationary;
  /// When set, samples are taken at 0, stride, and then geometrically with
  /// this many samples per factor of ten in t. Used for long runs toward
  /// limits where a uniform stride would produce millions of rows.
  std::optional<double> samples_per_decade;

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

struct DiagnosticRow {
  double norm_sq = 0;
  double tr_A = 0;
  double tr_A2 = 0;
  double tr_S2 = 0;
  /// ||[A/||A||, (A/||A||)^t]||^2, zero for A = 0.
  double F = 0;
  double rhs_norm = 0;
  /// Scale with Spec(A(t)) = a(t) Spec(A(0)); absent for nilpotent starts.
  std::optional<double> a_of_t;
  Spectrum spectrum;
};

struct Sample {
  double t;
  Mat A;
  DiagnosticRow diag;
};

enum class Terminal { ReachedTEnd, Stationary, StepFailure };

std::string to_string(Terminal t);

struct Trajectory {
  FlowSpec spec;
  std::vector<Sample> samples;
  Terminal terminal = Terminal::ReachedTEnd;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  const Sample& front() const { return samples.front(); }
  const Sample& back() const { return samples.back(); }
};

/// Diagnostics of A under the given flow, with a(t) measured against A0.
DiagnosticRow diagnose(FlowKind kind, const Mat& a, const Mat& a0, const Spectrum& spec0);

/// Adaptive Dormand-Prince solution of spec. For Normalized the state is
/// renormalised after every accepted step and steps whose norm drift exceeds
/// 1e-9 are rejected. A step-size underflow ends the run with
/// Terminal::StepFailure and the samples recorded so far.
Trajectory integrate(const FlowSpec& spec);

/// Exact bracket-flow solution through a soliton A0:
///   normal:     (2 tr(S(A0)^2) t + 1)^(-1/2) A0
///   nilpotent:  ((||A0||^2 - c) t + 1)^(-1/2) A0  with [A0,[A0,A0^t]] = c A0.
/// Throws std::domain_error when A0 is neither (at tol).
Mat closed_form_soliton(const Mat& a0, double t, double tol = kDefaultTol);

/// h(t) = diag(b(t), phi(t)) co-integrated with the bracket flow.
struct PullbackSample {
  double t;
  double b;
  Mat phi;
  /// ||A(t) - phi A0 phi^-1 / b|| / ||A(t)|| against the trajectory sample.
  double consistency;
};

struct PullbackResult {
  std::vector<PullbackSample> samples;
  double max_consistency = 0;
  bool truncated = false;
  std::string note;
};

/// Requires a Bracket trajectory. Integrates b' = tr(S(A)^2) b and
/// phi' = -(1/2 [A,A^t] - tr(A) S(A)) phi together with A, and stops early
/// (truncated = true) once cond(phi) exceeds 1e12.
PullbackResult cointegrate_pullback(const Trajectory& traj);

struct ReparamSample {
  double t;
  double c;
  double tau;
  double residual;
};

struct ReparamReport {
  std::vector<ReparamSample> samples;
  /// max_t ||A(t) - c(t) Abar(tau(t))|| / ||A(t)||
  double max_residual = 0;
  /// Co-integrated Abar(tau(t_end)) against an independent gradient-flow run
  /// to tau(t_end), relative.
  double gradient_residual = 0;
  double tau_end = 0;
  double c_end = 0;
};

/// Compares the bracket flow A(t) with c(t) Abar(tau(t)) where Abar is the
/// gradient flow, c' = -tr(S(Abar(tau))^2) c^3 and tau' = c^2/8. Only for
/// traceless A0 (|tr A0| <= 1e-10 max(1, ||A0||)).
ReparamReport reparam_bridge(const Mat& a0, double t_end, double sample_stride = 0.1,
                             double rel_tol = 1e-11, double abs_tol = 1e-13);

}  // namespace solvflow
