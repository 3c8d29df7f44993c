#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "solvflow/flow.hpp"
#include "solvflow/geometry.hpp"
#include "solvflow/matcore.hpp"

namespace solvflow {

// ---- 2x2 antidiagonal family A = [[0, x], [y, 0]] ----

struct Phase2DPoint {
  double x = 0;
  double y = 0;
};

/// Restriction of the bracket flow to the antidiagonal family:
///   x' = x (x + y)(-3x/2 + y/2),  y' = y (x + y)(-3y/2 + x/2).
Phase2DPoint phase2d_rhs(Phase2DPoint p);

Mat phase2d_embed(Phase2DPoint p);

enum class PhaseClass {
  /// Starts on the line y = -x of skew matrices.
  FixedLine,
  /// Converges to a nonzero point of y = -x.
  SkewLimit,
  /// Converges to the origin with direction tending to y = x.
  OriginDiagonal,
  /// Starts on an axis (a nilpotent soliton) and shrinks to the origin along it.
  OriginAxis,
  StepFailure,
  /// Stop criterion not met by t_end.
  Unresolved,
};

std::string to_string(PhaseClass c);

struct PhaseSweepOptions {
  double t_end = 1e13;
  /// Integration stops once |x + y| / sqrt(2) drops to this.
  double stop_distance = 1e-6;
  double samples_per_decade = 8;
  double first_sample = 1e-2;
  double rel_tol = 1e-11;
  double abs_tol = 1e-20;
  /// Worker threads; 0 means hardware concurrency.
  unsigned threads = 0;
};

struct PhaseTrajectoryPoint {
  double t;
  double x;
  double y;
};

struct PhaseResult {
  std::size_t index = 0;
  Phase2DPoint start;
  PhaseClass cls = PhaseClass::Unresolved;
  Phase2DPoint limit;
  /// Time the stop criterion was met (or the last time reached).
  double t_stationary = 0;
  /// Distance of the normalised end point to the nearer of +-(1,1)/sqrt(2),
  /// present when the end point is nonzero.
  std::optional<double> diagonal_distance;
  std::vector<PhaseTrajectoryPoint> samples;
};

/// n x n grid over [lo, hi]^2 in row-major order (y outer, x inner).
std::vector<Phase2DPoint> phase2d_grid(std::size_t n = 41, double lo = -2.0, double hi = 2.0);

/// Integrates every grid point independently on a worker pool; the result
/// vector is indexed like the grid, so thread count never changes output.
std::vector<PhaseResult> phase2d_sweep(const std::vector<Phase2DPoint>& grid, const PhaseSweepOptions& opts = {});

// ---- 4-d family mu(e0, ei) = alpha diag(lambda, 1-lambda, 1) ei, mu(e1, e2) = h e3 ----

/// lambda^2 + (1 - lambda)^2 + 1.
double ejsol_c(double lambda);
/// The alpha at which h = 1 gives an algebraic soliton: sqrt(3 / (2 c)).
double ejsol_soliton_alpha(double lambda);

MetricLieAlgebra ejsol_algebra(double lambda, double alpha, double h = 1.0);

struct EjsolState {
  double lambda = 0;
  double alpha0 = 0;
  double alpha = 0;
  double h = 1;
  double t = 0;
};

/// alpha(t) = (2 c t + alpha0^-2)^(-1/2), h(t) = (3t + 1)^(-1/2).
EjsolState ejsol_exact(const EjsolState& s, double t);

/// Numerical solution of alpha' = -c alpha^3, h' = -(3/2) h^3 sampled every
/// stride through t_end.
std::vector<EjsolState> ejsol_integrate(double lambda, double alpha0, double t_end, double stride = 0.5,
                                        double rel_tol = 1e-12, double abs_tol = 1e-14);

/// K(e1, e3) = h^2/4 - lambda alpha^2.
double ejsol_k13(double lambda, double alpha, double h);

/// First t >= 0 from which K(e1, e3) >= 0 along the exact solution:
/// max(0, (4 lambda - alpha0^-2) / (2c - 12 lambda)). Empty when that never
/// happens (only possible at lambda = 2 - sqrt(3)). Throws
/// std::domain_error unless 0 < lambda <= 2 - sqrt(3) and alpha0 > 0.
std::optional<double> ejsol_curvature_crossing(double lambda, double alpha0);

struct CurvatureWatchReport {
  std::optional<double> first_negative_time;
  /// Heintze negativity held at every sample from first_negative_time on.
  bool persistent = false;
  std::size_t samples = 0;
  /// Largest sampled sectional curvature at the first negative sample and at
  /// the final sample.
  std::optional<double> sampled_max_first;
  std::optional<double> sampled_max_end;
  /// The sampler saw only negative planes wherever Heintze said negative.
  bool sampler_agrees = false;
  Terminal terminal = Terminal::ReachedTEnd;
};

/// Bracket flow from A0 with heintze_check at every sample. Throws
/// std::domain_error when admits_negative_curvature(A0) is false.
CurvatureWatchReport curvature_watch(const Mat& a0, double t_end, double stride = 0.1, std::uint64_t seed = 0,
                                     std::size_t planes = 1000);

}  // namespace solvflow
