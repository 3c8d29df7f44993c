#include "solvflow/flow.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "solvflow/ode.hpp"

namespace solvflow {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd flatten(const MatrixXd& m) { return Eigen::Map<const VectorXd>(m.data(), m.size()); }

MatrixXd unflatten(const VectorXd& v, Eigen::Index n, Eigen::Index offset = 0) {
  return Eigen::Map<const MatrixXd>(v.data() + offset, n, n);
}

// Raw Eigen versions; the Mat wrappers re-validate finiteness, the
// integrator works on these and validates only what it records.
MatrixXd comm(const MatrixXd& x, const MatrixXd& y) { return x * y - y * x; }

MatrixXd bracket_rhs_raw(const MatrixXd& a) {
  const MatrixXd s = 0.5 * (a + a.transpose());
  const MatrixXd c = comm(a, a.transpose());
  return -s.squaredNorm() * a + 0.5 * comm(a, c) - 0.5 * a.trace() * c;
}

MatrixXd normalized_rhs_raw(const MatrixXd& b) {
  const MatrixXd c = comm(b, b.transpose());
  return comm(b, c) - b.trace() * c + c.squaredNorm() * b;
}

MatrixXd gradient_rhs_raw(const MatrixXd& a) { return 4.0 * comm(a, comm(a, a.transpose())); }

MatrixXd rhs_raw(FlowKind kind, const MatrixXd& a) {
  switch (kind) {
    case FlowKind::Bracket: return bracket_rhs_raw(a);
    case FlowKind::Normalized: return normalized_rhs_raw(a);
    case FlowKind::Gradient: return gradient_rhs_raw(a);
  }
  throw std::logic_error("unknown FlowKind");
}

class SampleSchedule {
 public:
  explicit SampleSchedule(const FlowSpec& spec) : spec_(spec) {}

  /// Time of sample k (k = 0 is t = 0), clipped to t_end.
  double at(std::size_t k) const {
    double t = 0.0;
    if (k == 0) return 0.0;
    if (spec_.samples_per_decade) {
      t = spec_.sample_stride * std::pow(10.0, static_cast<double>(k - 1) / *spec_.samples_per_decade);
    } else {
      t = spec_.sample_stride * static_cast<double>(k);
    }
    return std::min(t, spec_.t_end);
  }

 private:
  const FlowSpec& spec_;
};

}  // namespace

std::string to_string(FlowKind k) {
  switch (k) {
    case FlowKind::Bracket: return "bracket";
    case FlowKind::Normalized: return "normalized";
    case FlowKind::Gradient: return "gradient";
  }
  return "?";
}

FlowKind flow_kind_from_string(const std::string& s) {
  if (s == "bracket") return FlowKind::Bracket;
  if (s == "normalized") return FlowKind::Normalized;
  if (s == "gradient") return FlowKind::Gradient;
  throw std::invalid_argument(fmt::format("unknown flow kind '{}'", s));
}

std::string to_string(Terminal t) {
  switch (t) {
    case Terminal::ReachedTEnd: return "ReachedTEnd";
    case Terminal::Stationary: return "Stationary";
    case Terminal::StepFailure: return "StepFailure";
  }
  return "?";
}

Mat bracket_rhs(const Mat& a) { return Mat(bracket_rhs_raw(a.eigen())); }

Mat normalized_rhs(const Mat& b) {
  const double nb = frob_norm(b);
  if (std::abs(nb - 1.0) > 1e-6) {
    throw std::invalid_argument(fmt::format("normalized_rhs: ||B|| = {} is not 1", nb));
  }
  return Mat(normalized_rhs_raw(b.eigen()));
}

Mat gradient_rhs(const Mat& a) { return Mat(gradient_rhs_raw(a.eigen())); }

Mat flow_rhs(FlowKind kind, const Mat& a) { return Mat(rhs_raw(kind, a.eigen())); }

void FlowSpec::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("FlowSpec: " + m); };
  if (!(rel_tol > 0 && rel_tol < 1)) fail("rel_tol must lie in (0, 1)");
  if (!(abs_tol > 0 && abs_tol < 1)) fail("abs_tol must lie in (0, 1)");
  if (!(t_end > 0)) fail("t_end must be positive");
  if (!(sample_stride > 0)) fail("sample_stride must be positive");
  if (!(init_step > 0)) fail("init_step must be positive");
  if (!(max_step > 0)) fail("max_step must be positive");
  if (stop_when_stationary && !(*stop_when_stationary > 0)) fail("stop_when_stationary must be positive");
  if (samples_per_decade && !(*samples_per_decade > 0)) fail("samples_per_decade must be positive");
  if (kind == FlowKind::Normalized && frob_norm(A0) == 0.0) fail("normalized flow needs ||A0|| > 0");
}

DiagnosticRow diagnose(FlowKind kind, const Mat& a, const Mat& a0, const Spectrum& spec0) {
  DiagnosticRow row;
  const MatrixXd& A = a.eigen();
  row.norm_sq = A.squaredNorm();
  row.tr_A = A.trace();
  row.tr_A2 = (A * A).trace();
  row.tr_S2 = (0.5 * (A + A.transpose())).squaredNorm();
  if (row.norm_sq > 0) {
    row.F = comm(A, A.transpose()).squaredNorm() / (row.norm_sq * row.norm_sq);
  }
  row.rhs_norm = rhs_raw(kind, A).norm();
  row.spectrum = eigenvalues(a);

  const double n0 = frob_norm(a0);
  const double tr0 = a0.trace();
  if (std::abs(tr0) > 1e-8 * std::max(1.0, n0)) {
    row.a_of_t = row.tr_A / tr0;
  } else if (!is_nilpotent(a0)) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < spec0.size(); ++i) {
      num += std::real(std::conj(spec0[i]) * row.spectrum[i]);
      den += std::norm(spec0[i]);
    }
    if (den > 0) row.a_of_t = num / den;
  }
  return row;
}

Trajectory integrate(const FlowSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.A0.dim());

  Trajectory traj;
  traj.spec = spec;

  Mat start = spec.A0;
  if (spec.kind == FlowKind::Normalized) start = spec.A0 / frob_norm(spec.A0);
  const Spectrum spec0 = eigenvalues(start);

  auto stationary = [&](const MatrixXd& a) {
    if (!spec.stop_when_stationary) return false;
    return rhs_raw(spec.kind, a).norm() <= *spec.stop_when_stationary * std::max(1.0, a.norm());
  };
  auto record = [&](double t, const MatrixXd& a) {
    Mat m(a);
    traj.samples.push_back(Sample{t, m, diagnose(spec.kind, m, start, spec0)});
  };

  record(0.0, start.eigen());
  if (stationary(start.eigen())) {
    traj.terminal = Terminal::Stationary;
    return traj;
  }

  ode::Options opts;
  opts.rel_tol = spec.rel_tol;
  opts.abs_tol = spec.abs_tol;
  opts.init_step = spec.init_step;
  opts.max_step = spec.max_step;
  const FlowKind kind = spec.kind;
  ode::DormandPrince stepper(
      [kind, n](double, const VectorXd& y) { return flatten(rhs_raw(kind, unflatten(y, n))); }, opts);

  ode::AcceptHook hook = [&](double, VectorXd& y) {
    if (kind == FlowKind::Normalized) {
      const double norm = y.norm();
      if (std::abs(norm - 1.0) > 1e-9) return ode::StepVerdict::Reject;
      y /= norm;
    }
    return stationary(unflatten(y, n)) ? ode::StepVerdict::Stop : ode::StepVerdict::Accept;
  };

  SampleSchedule schedule(spec);
  double t = 0.0;
  VectorXd y = flatten(start.eigen());
  for (std::size_t k = 1; t < spec.t_end; ++k) {
    const double target = schedule.at(k);
    if (target <= t) continue;
    const auto status = stepper.advance(t, y, target, hook);
    if (status == ode::Status::StepFailure) {
      traj.terminal = Terminal::StepFailure;
      break;
    }
    record(t, unflatten(y, n));
    if (status == ode::Status::Stopped) {
      traj.terminal = Terminal::Stationary;
      break;
    }
  }
  traj.accepted_steps = stepper.accepted_steps();
  traj.rejected_steps = stepper.rejected_steps();
  return traj;
}

Mat closed_form_soliton(const Mat& a0, double t, double tol) {
  if (t < 0) throw std::domain_error("closed_form_soliton: t must be non-negative");
  if (is_normal(a0, tol)) {
    const double trs2 = frob_norm_sq(sym_part(a0));
    return std::pow(2.0 * trs2 * t + 1.0, -0.5) * a0;
  }
  if (is_nilpotent(a0, tol)) {
    const Mat at = a0.transpose();
    const Mat dbl = commutator(a0, commutator(a0, at));
    const double n2 = frob_norm_sq(a0);
    const double c = frob_inner(dbl, a0) / n2;
    if (frob_norm(dbl - c * a0) <= tol * n2 * std::sqrt(n2)) {
      return std::pow((n2 - c) * t + 1.0, -0.5) * a0;
    }
  }
  throw std::domain_error("closed_form_soliton: A0 is neither normal nor a nilpotent soliton");
}

PullbackResult cointegrate_pullback(const Trajectory& traj) {
  if (traj.spec.kind != FlowKind::Bracket) {
    throw std::invalid_argument("cointegrate_pullback: trajectory must come from the bracket flow");
  }
  if (traj.samples.empty()) throw std::invalid_argument("cointegrate_pullback: empty trajectory");
  const Mat& a0 = traj.front().A;
  const auto n = static_cast<Eigen::Index>(a0.dim());
  const Eigen::Index nn = n * n;

  // State: [vec A, b, vec phi].
  auto rhs = [n, nn](double, const VectorXd& y) {
    const MatrixXd a = unflatten(y, n, 0);
    const double b = y(nn);
    const MatrixXd phi = unflatten(y, n, nn + 1);
    const MatrixXd s = 0.5 * (a + a.transpose());
    const MatrixXd ric = 0.5 * comm(a, a.transpose()) - a.trace() * s;
    VectorXd dy(2 * nn + 1);
    dy.segment(0, nn) = flatten(bracket_rhs_raw(a));
    dy(nn) = s.squaredNorm() * b;
    dy.segment(nn + 1, nn) = flatten(MatrixXd(-ric * phi));
    return dy;
  };

  ode::Options opts;
  opts.rel_tol = traj.spec.rel_tol;
  opts.abs_tol = traj.spec.abs_tol;
  opts.init_step = traj.spec.init_step;
  opts.max_step = traj.spec.max_step;
  opts.blocks = {nn, 1, nn};
  ode::DormandPrince stepper(rhs, opts);

  VectorXd y(2 * nn + 1);
  y.segment(0, nn) = flatten(a0.eigen());
  y(nn) = 1.0;
  y.segment(nn + 1, nn) = flatten(MatrixXd::Identity(n, n));
  double t = 0.0;

  PullbackResult result;
  for (const auto& sample : traj.samples) {
    if (sample.t > t) {
      if (stepper.advance(t, y, sample.t) != ode::Status::Reached) {
        result.truncated = true;
        result.note = fmt::format("step failure at t = {}", t);
        break;
      }
    }
    const double b = y(nn);
    const Mat phi(unflatten(y, n, nn + 1));
    const double cond = condition_number(phi);
    if (!(cond <= 1e12)) {
      result.truncated = true;
      result.note = fmt::format("phi numerically singular at t = {} (cond = {:.3e})", t, cond);
      break;
    }
    const Mat conj = (phi * a0 * inverse(phi)) / b;
    const double na = frob_norm(sample.A);
    const double diff = frob_norm(sample.A - conj);
    const double residual = na > 0 ? diff / na : diff;
    result.max_consistency = std::max(result.max_consistency, residual);
    result.samples.push_back(PullbackSample{sample.t, b, phi, residual});
  }
  return result;
}

ReparamReport reparam_bridge(const Mat& a0, double t_end, double sample_stride, double rel_tol,
                             double abs_tol) {
  if (std::abs(a0.trace()) > 1e-10 * std::max(1.0, frob_norm(a0))) {
    throw std::invalid_argument("reparam_bridge: A0 must be traceless");
  }
  if (!(t_end > 0) || !(sample_stride > 0)) {
    throw std::invalid_argument("reparam_bridge: t_end and sample_stride must be positive");
  }

  FlowSpec bracket;
  bracket.kind = FlowKind::Bracket;
  bracket.A0 = a0;
  bracket.t_end = t_end;
  bracket.sample_stride = sample_stride;
  bracket.rel_tol = rel_tol;
  bracket.abs_tol = abs_tol;
  const Trajectory traj = integrate(bracket);

  const auto n = static_cast<Eigen::Index>(a0.dim());
  const Eigen::Index nn = n * n;
  // State: [vec Abar(tau(t)), c, tau], all in bracket time t.
  auto rhs = [n, nn](double, const VectorXd& y) {
    const MatrixXd abar = unflatten(y, n, 0);
    const double c = y(nn);
    const double dtau = c * c / 8.0;
    const double trs2 = (0.5 * (abar + abar.transpose())).squaredNorm();
    VectorXd dy(nn + 2);
    dy.segment(0, nn) = dtau * flatten(gradient_rhs_raw(abar));
    dy(nn) = -trs2 * c * c * c;
    dy(nn + 1) = dtau;
    return dy;
  };
  ode::Options opts;
  opts.rel_tol = rel_tol;
  opts.abs_tol = abs_tol;
  opts.blocks = {nn, 1, 1};
  ode::DormandPrince stepper(rhs, opts);

  VectorXd y(nn + 2);
  y.segment(0, nn) = flatten(a0.eigen());
  y(nn) = 1.0;
  y(nn + 1) = 0.0;
  double t = 0.0;

  ReparamReport report;
  for (const auto& sample : traj.samples) {
    if (sample.t > t && stepper.advance(t, y, sample.t) != ode::Status::Reached) {
      throw ConvergenceError("reparam_bridge: step failure in (c, tau) co-integration");
    }
    const double c = y(nn);
    const MatrixXd diff = sample.A.eigen() - c * unflatten(y, n, 0);
    const double na = sample.A.eigen().norm();
    const double residual = na > 0 ? diff.norm() / na : diff.norm();
    report.max_residual = std::max(report.max_residual, residual);
    report.samples.push_back(ReparamSample{sample.t, c, y(nn + 1), residual});
  }
  report.c_end = y(nn);
  report.tau_end = y(nn + 1);

  if (report.tau_end > 0) {
    FlowSpec grad;
    grad.kind = FlowKind::Gradient;
    grad.A0 = a0;
    grad.t_end = report.tau_end;
    grad.sample_stride = report.tau_end;
    grad.rel_tol = rel_tol;
    grad.abs_tol = abs_tol;
    const Trajectory g = integrate(grad);
    const MatrixXd abar_end = unflatten(y, n, 0);
    const double ng = g.back().A.eigen().norm();
    const double d = (g.back().A.eigen() - abar_end).norm();
    report.gradient_residual = ng > 0 ? d / ng : d;
  }
  return report;
}

}  // namespace solvflow
