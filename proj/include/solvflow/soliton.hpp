#pragma once

#include <optional>
#include <string>
#include <vector>

#include "solvflow/flow.hpp"
#include "solvflow/geometry.hpp"
#include "solvflow/matcore.hpp"

namespace solvflow {

/// ||[B, B^t]||^2.
double moment_functional(const Mat& b);

enum class SolitonLabel { NormalSoliton, NilpotentSoliton, NotSoliton };

std::string to_string(SolitonLabel l);

struct SolitonResiduals {
  /// ||[A,A^t]|| / ||A||^2.
  double normality = 0;
  /// ||[A,[A,A^t]] - c A|| / ||A||^3 with c the projection ratio.
  double eigen_relation = 0;
  /// ||Ric - c I - D|| / ||Ric|| (0 when Ric = 0).
  double ric_decomposition = 0;
  /// ||delta_mu(D)|| / (||mu|| ||D||), 0 without a derivation.
  double derivation = 0;
};

struct SolitonVerdict {
  SolitonLabel label = SolitonLabel::NotSoliton;
  /// Nilpotent eigen-ratio in [A,[A,A^t]] = c A; always <= 0.
  std::optional<double> c;
  /// The constant in Ric = c I + D.
  std::optional<double> soliton_constant;
  std::optional<Mat> derivation;
  SolitonResiduals residuals;

  bool accepted() const { return label != SolitonLabel::NotSoliton; }
};

/// Normal, or nilpotent with [A,[A,A^t]] = c A, each at relative tolerance
/// tol. Soliton verdicts carry the explicit (c, D) with Ric(mu_A) = c I + D.
/// Throws std::invalid_argument for the zero matrix.
SolitonVerdict classify_soliton(const Mat& a, double tol = kDefaultTol);

/// Matrix of the linear map D -> delta_mu(D) = mu(D.,.) + mu(.,D.) - D mu(.,.)
/// from gl(m) (column-major vec) to the pairs i < j times m components.
Eigen::MatrixXd derivation_map(const MetricLieAlgebra& g);

/// Orthonormal basis (columns, vec of m x m) of Der(g), singular values
/// below 1e-10 of the largest counted as zero.
Eigen::MatrixXd derivation_basis(const MetricLieAlgebra& g);

/// Least-squares Ric = c I + D with D in Der(g); accepted iff the residual is
/// <= tol ||Ric||. Accepted verdicts are labelled NilpotentSoliton when g is
/// nilpotent and NormalSoliton otherwise.
SolitonVerdict certify_algebraic_soliton(const MetricLieAlgebra& g, double tol = kDefaultTol);

struct Violation {
  double t;
  std::string rule;
  double magnitude;
};

struct MonitorOptions {
  /// Per-sample slack is slack_factor * rel_tol of the trajectory.
  double slack_factor = 10.0;
  /// A monotonicity breach is reported once it lasts this many consecutive
  /// sample pairs.
  std::size_t persistence = 3;
  /// Relative slack for tr(S^2) (2t + tr(S(A0)^2)^-1) <= 1.
  double decay_slack = 1e-6;
};

/// Checks the monotone quantities of the trajectory's flow kind. Bracket:
/// ||A||^2, tr(S^2) and F(A/||A||) non-increasing, signs of tr A and tr A^2
/// constant, and the tr(S^2) decay bound. Normalized: F non-increasing and
/// the trace signs. Gradient: ||A||^2 and ||[A,A^t]||^2 non-increasing.
std::vector<Violation> monitor_suite(const Trajectory& traj, const MonitorOptions& opts = {});

struct OmegaLimitReport {
  bool converged = false;
  std::optional<Mat> A_inf;
  /// ||S(A_inf)|| / max(1, ||A_inf||).
  double skew_residual = 0;
  /// Unit-normalised samples of the trailing window.
  std::vector<Mat> late_samples;
  /// Pairwise canonical spectra and F values of late_samples agree to 1e-5.
  bool spectra_agree = false;
  std::vector<double> normality_residuals;
  /// Largest pairwise ||B_i - B_j|| over late_samples.
  double late_spread = 0;
  /// Verdict on A_inf / ||A_inf|| (Normalized only).
  std::optional<SolitonVerdict> verdict;
  Terminal terminal = Terminal::ReachedTEnd;
  double t_final = 0;
};

/// Runs spec (stop_when_stationary defaults to 1e-10) and inspects the tail.
/// window is the trailing fraction of samples, at least 10 of them.
/// converged means the run ended Stationary, and for Normalized also that
/// B_inf passes classify_soliton.
OmegaLimitReport omega_limit(const FlowSpec& spec, double window = 0.2);

}  // namespace solvflow
