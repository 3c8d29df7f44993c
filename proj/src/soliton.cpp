#include "solvflow/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace solvflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double moment_functional(const Mat& b) { return frob_norm_sq(commutator(b, b.transpose())); }

std::string to_string(SolitonLabel l) {
  switch (l) {
    case SolitonLabel::NormalSoliton: return "NormalSoliton";
    case SolitonLabel::NilpotentSoliton: return "NilpotentSoliton";
    case SolitonLabel::NotSoliton: return "NotSoliton";
  }
  return "?";
}

MatrixXd derivation_map(const MetricLieAlgebra& g) {
  const std::size_t m = g.dim();
  const std::size_t pairs = m * (m - 1) / 2;
  MatrixXd out = MatrixXd::Zero(static_cast<Eigen::Index>(pairs * m), static_cast<Eigen::Index>(m * m));
  auto col = [m](std::size_t p, std::size_t q) { return static_cast<Eigen::Index>(p + q * m); };
  std::size_t pair = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j, ++pair)
      for (std::size_t k = 0; k < m; ++k) {
        const auto row = static_cast<Eigen::Index>(pair * m + k);
        for (std::size_t p = 0; p < m; ++p) {
          out(row, col(p, i)) += g.c(p, j, k);
          out(row, col(p, j)) += g.c(i, p, k);
          out(row, col(k, p)) -= g.c(i, j, p);
        }
      }
  return out;
}

MatrixXd derivation_basis(const MetricLieAlgebra& g) {
  const auto mm = static_cast<Eigen::Index>(g.dim() * g.dim());
  const MatrixXd delta = derivation_map(g);
  if (delta.rows() == 0) return MatrixXd::Identity(mm, mm);
  Eigen::JacobiSVD<MatrixXd> svd(delta, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-10 * top) ++rank;
  return svd.matrixV().rightCols(mm - rank);
}

namespace {

double derivation_residual(const MetricLieAlgebra& g, const MatrixXd& d) {
  const double scale = std::sqrt(g.norm_sq()) * d.norm();
  if (scale == 0.0) return 0.0;
  const VectorXd vec_d = Eigen::Map<const VectorXd>(d.data(), d.size());
  return (derivation_map(g) * vec_d).norm() / scale;
}

struct Decomposition {
  double c;
  MatrixXd d;
  double residual;
};

// Best Ric ~ c I + D with D in the span of the derivation basis.
Decomposition fit_soliton(const MatrixXd& ric, const MatrixXd& basis) {
  const Eigen::Index m = ric.rows();
  const Eigen::Index mm = m * m;
  MatrixXd design(mm, basis.cols() + 1);
  const MatrixXd id = MatrixXd::Identity(m, m);
  design.col(0) = Eigen::Map<const VectorXd>(id.data(), mm);
  design.rightCols(basis.cols()) = basis;
  const VectorXd target = Eigen::Map<const VectorXd>(ric.data(), mm);
  const VectorXd x = design.completeOrthogonalDecomposition().solve(target);
  const VectorXd d_vec = basis * x.tail(basis.cols());
  Decomposition out;
  out.c = x(0);
  out.d = Eigen::Map<const MatrixXd>(d_vec.data(), m, m);
  out.residual = (target - design * x).norm();
  return out;
}

}  // namespace

SolitonVerdict certify_algebraic_soliton(const MetricLieAlgebra& g, double tol) {
  SolitonVerdict v;
  const MatrixXd ric = ricci_operator_general(g).eigen();
  const double ric_norm = ric.norm();
  const Decomposition fit = fit_soliton(ric, derivation_basis(g));
  v.residuals.ric_decomposition = ric_norm > 0 ? fit.residual / ric_norm : fit.residual;
  v.residuals.derivation = derivation_residual(g, fit.d);
  if (fit.residual <= tol * ric_norm) {
    v.label = g.is_nilpotent() ? SolitonLabel::NilpotentSoliton : SolitonLabel::NormalSoliton;
    v.soliton_constant = fit.c;
    v.derivation = Mat(fit.d);
  }
  return v;
}

SolitonVerdict classify_soliton(const Mat& a, double tol) {
  const double na = frob_norm(a);
  if (na == 0.0) throw std::invalid_argument("classify_soliton: zero matrix");
  const MatrixXd& A = a.eigen();
  const MatrixXd at = A.transpose();
  const MatrixXd comm = A * at - at * A;
  const MatrixXd dbl = A * comm - comm * A;
  const double ratio = (dbl.array() * A.array()).sum() / (na * na);

  SolitonVerdict v;
  v.residuals.normality = comm.norm() / (na * na);
  v.residuals.eigen_relation = (dbl - ratio * A).norm() / (na * na * na);

  const auto n = static_cast<Eigen::Index>(a.dim());
  const MatrixXd s = 0.5 * (A + at);
  const double trs2 = s.squaredNorm();
  MatrixXd d = MatrixXd::Zero(n + 1, n + 1);
  double constant = 0.0;
  if (v.residuals.normality <= tol) {
    v.label = SolitonLabel::NormalSoliton;
    constant = -trs2;
    d.bottomRightCorner(n, n) = trs2 * MatrixXd::Identity(n, n) - A.trace() * s;
  } else if (is_nilpotent(a, tol) && v.residuals.eigen_relation <= tol) {
    v.label = SolitonLabel::NilpotentSoliton;
    v.c = ratio;
    constant = (ratio - na * na) / 2.0;
    d(0, 0) = -ratio / 2.0;
    d.bottomRightCorner(n, n) = 0.5 * comm - constant * MatrixXd::Identity(n, n);
  }

  const MetricLieAlgebra g = mu_of_A(a);
  if (v.accepted()) {
    v.soliton_constant = constant;
    v.derivation = Mat(d);
    const MatrixXd ric = ricci_operator_muA(a).eigen();
    const MatrixXd rest = ric - constant * MatrixXd::Identity(n + 1, n + 1) - d;
    v.residuals.ric_decomposition = ric.norm() > 0 ? rest.norm() / ric.norm() : rest.norm();
    v.residuals.derivation = derivation_residual(g, d);
  } else {
    // Report how far the best decomposition is, for diagnostics only.
    v.residuals.ric_decomposition = certify_algebraic_soliton(g, tol).residuals.ric_decomposition;
  }
  return v;
}

namespace {

enum class Quantity { NormSq, TrS2, F, RawF };

double value_of(const Sample& s, Quantity q) {
  switch (q) {
    case Quantity::NormSq: return s.diag.norm_sq;
    case Quantity::TrS2: return s.diag.tr_S2;
    case Quantity::F: return s.diag.F;
    case Quantity::RawF: return s.diag.F * s.diag.norm_sq * s.diag.norm_sq;
  }
  return 0.0;
}

// Absolute size of integrator noise in the quantity at sample s.
double noise_scale(const Sample& s, Quantity q) {
  switch (q) {
    case Quantity::NormSq:
    case Quantity::TrS2: return s.diag.norm_sq;
    case Quantity::F: return 1.0;
    case Quantity::RawF: return s.diag.norm_sq * s.diag.norm_sq;
  }
  return 1.0;
}

void check_nonincreasing(const Trajectory& traj, Quantity q, const std::string& rule, double slack,
                         std::size_t persistence, std::vector<Violation>& out) {
  std::vector<Violation> run;
  auto flush = [&] {
    if (run.size() >= persistence) out.insert(out.end(), run.begin(), run.end());
    run.clear();
  };
  for (std::size_t k = 1; k < traj.samples.size(); ++k) {
    const auto& prev = traj.samples[k - 1];
    const auto& cur = traj.samples[k];
    const double rise = value_of(cur, q) - value_of(prev, q);
    if (rise > slack * noise_scale(prev, q)) {
      run.push_back({cur.t, rule, rise});
    } else {
      flush();
    }
  }
  flush();
}

int sign_of(double x, double zero_band) {
  if (std::abs(x) <= zero_band) return 0;
  return x > 0 ? 1 : -1;
}

void check_sign(const Trajectory& traj, bool trace_squared, const std::string& rule,
                std::vector<Violation>& out) {
  const auto& first = traj.front().diag;
  auto band = [&](const DiagnosticRow& d) {
    return kDefaultTol * (trace_squared ? d.norm_sq : std::sqrt(d.norm_sq));
  };
  const double v0 = trace_squared ? first.tr_A2 : first.tr_A;
  const int s0 = sign_of(v0, band(first));
  for (const auto& s : traj.samples) {
    const double v = trace_squared ? s.diag.tr_A2 : s.diag.tr_A;
    const int si = sign_of(v, band(s.diag));
    if (si != s0 && !(s0 == 0 && si == 0)) out.push_back({s.t, rule, std::abs(v)});
  }
}

}  // namespace

std::vector<Violation> monitor_suite(const Trajectory& traj, const MonitorOptions& opts) {
  std::vector<Violation> out;
  if (traj.samples.empty()) throw std::invalid_argument("monitor_suite: empty trajectory");
  const double slack = opts.slack_factor * traj.spec.rel_tol;

  switch (traj.spec.kind) {
    case FlowKind::Bracket: {
      check_nonincreasing(traj, Quantity::NormSq, "norm_sq_nonincreasing", slack, opts.persistence, out);
      check_nonincreasing(traj, Quantity::TrS2, "tr_S2_nonincreasing", slack, opts.persistence, out);
      check_nonincreasing(traj, Quantity::F, "F_nonincreasing", slack, opts.persistence, out);
      check_sign(traj, false, "tr_A_sign_constant", out);
      check_sign(traj, true, "tr_A2_sign_constant", out);
      const double s0 = traj.front().diag.tr_S2;
      if (s0 > 0) {
        for (const auto& s : traj.samples) {
          const double excess = s.diag.tr_S2 * (2.0 * s.t + 1.0 / s0) - 1.0;
          if (excess > std::max(opts.decay_slack, slack)) out.push_back({s.t, "tr_S2_decay_bound", excess});
        }
      }
      break;
    }
    case FlowKind::Normalized:
      check_nonincreasing(traj, Quantity::F, "F_nonincreasing", slack, opts.persistence, out);
      check_sign(traj, false, "tr_A_sign_constant", out);
      check_sign(traj, true, "tr_A2_sign_constant", out);
      break;
    case FlowKind::Gradient:
      check_nonincreasing(traj, Quantity::NormSq, "norm_sq_nonincreasing", slack, opts.persistence, out);
      check_nonincreasing(traj, Quantity::RawF, "F_nonincreasing", slack, opts.persistence, out);
      break;
  }
  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) { return a.t < b.t; });
  return out;
}

OmegaLimitReport omega_limit(const FlowSpec& spec, double window) {
  if (spec.kind == FlowKind::Gradient) {
    throw std::invalid_argument("omega_limit: only bracket and normalized flows are supported");
  }
  if (!(window > 0 && window <= 1)) throw std::invalid_argument("omega_limit: window must lie in (0, 1]");
  FlowSpec run = spec;
  if (!run.stop_when_stationary) run.stop_when_stationary = 1e-10;
  const Trajectory traj = integrate(run);

  OmegaLimitReport rep;
  rep.terminal = traj.terminal;
  rep.t_final = traj.back().t;
  const Mat& last = traj.back().A;
  rep.A_inf = last;
  rep.skew_residual = frob_norm(sym_part(last)) / std::max(1.0, frob_norm(last));
  rep.converged = traj.terminal == Terminal::Stationary;

  if (spec.kind == FlowKind::Normalized) {
    rep.verdict = classify_soliton(last);
    rep.converged = rep.converged && rep.verdict->accepted();
  }

  const std::size_t total = traj.samples.size();
  std::size_t count = std::max<std::size_t>(10, static_cast<std::size_t>(std::ceil(window * total)));
  count = std::min(count, total);
  std::vector<double> f_values;
  std::vector<Spectrum> spectra;
  for (std::size_t k = total - count; k < total; ++k) {
    const Mat& a = traj.samples[k].A;
    const double na = frob_norm(a);
    if (na == 0.0) continue;
    Mat b = a / na;
    rep.normality_residuals.push_back(frob_norm(commutator(b, b.transpose())));
    f_values.push_back(moment_functional(b));
    spectra.push_back(eigenvalues(b));
    rep.late_samples.push_back(std::move(b));
  }

  double spec_gap = 0.0;
  double f_gap = 0.0;
  for (std::size_t i = 0; i < rep.late_samples.size(); ++i)
    for (std::size_t j = i + 1; j < rep.late_samples.size(); ++j) {
      rep.late_spread = std::max(rep.late_spread, frob_norm(rep.late_samples[i] - rep.late_samples[j]));
      spec_gap = std::max(spec_gap, spectrum_distance(spectra[i], spectra[j]));
      f_gap = std::max(f_gap, std::abs(f_values[i] - f_values[j]));
    }
  rep.spectra_agree = !rep.late_samples.empty() && spec_gap <= 1e-5 && f_gap <= 1e-5;
  return rep;
}

}  // namespace solvflow
