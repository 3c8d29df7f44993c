#include "solvflow/validate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "solvflow/casebook.hpp"
#include "solvflow/geometry.hpp"
#include "solvflow/soliton.hpp"

namespace solvflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace sample {

Mat gaussian(Rng& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return Mat(std::move(m));
}

Mat orthogonal(Rng& rng, std::size_t n) {
  const MatrixXd g = gaussian(rng, n).eigen();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < q.cols(); ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  return Mat(std::move(q));
}

Mat skew(Rng& rng, std::size_t n) {
  const Mat g = gaussian(rng, n);
  return skew_part(g);
}

Mat normal(Rng& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution pair(0.5);
  MatrixXd block = MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n;) {
    if (i + 1 < n && pair(rng)) {
      const double re = g(rng);
      const double im = g(rng);
      block(i, i) = re;
      block(i + 1, i + 1) = re;
      block(i, i + 1) = -im;
      block(i + 1, i) = im;
      i += 2;
    } else {
      block(i, i) = g(rng);
      i += 1;
    }
  }
  const MatrixXd q = orthogonal(rng, n).eigen();
  return Mat(MatrixXd(q * block * q.transpose()));
}

Mat nilpotent_soliton(Rng& rng, std::size_t n) {
  if (n < 2) throw std::invalid_argument("nilpotent_soliton: needs n >= 2");
  std::uniform_int_distribution<std::size_t> size(2, n);
  std::uniform_real_distribution<double> scale(0.2, 3.0);
  MatrixXd block = MatrixXd::Zero(n, n);
  std::size_t offset = 0;
  const double s = scale(rng);
  while (n - offset >= 2) {
    const std::size_t k = std::min(size(rng), n - offset);
    // Nilpositive element of the k-dimensional irreducible sl2 module.
    for (std::size_t i = 1; i < k; ++i) {
      block(offset + i - 1, offset + i) = s * std::sqrt(static_cast<double>(i * (k - i)));
    }
    offset += k;
    if (std::bernoulli_distribution(0.5)(rng)) break;
  }
  const MatrixXd q = orthogonal(rng, n).eigen();
  return Mat(MatrixXd(q * block * q.transpose()));
}

Mat traceless(Rng& rng, std::size_t n) {
  const Mat g = gaussian(rng, n);
  return g - (g.trace() / static_cast<double>(n)) * Mat::identity(n);
}

}  // namespace sample

bool ValidateReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

namespace {

using sample::Rng;

struct Context {
  Rng rng;
  double scale;
  const ValidateOptions* opts;

  std::size_t trials(std::size_t base) const {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(base) * scale)));
  }
  std::size_t dim(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }
};

struct Tracker {
  CheckResult r;

  Tracker(std::string name, double tol) {
    r.name = std::move(name);
    r.tolerance = tol;
  }
  void see(double residual) {
    r.worst = std::max(r.worst, std::isfinite(residual) ? residual : std::numeric_limits<double>::infinity());
  }
  CheckResult done(std::size_t trials, std::string detail = {}) {
    r.trials = trials;
    r.passed = r.worst <= r.tolerance;
    r.detail = std::move(detail);
    return r;
  }
};

double rel(double err, double scale) { return scale > 0 ? std::abs(err) / scale : std::abs(err); }

// ---- matrix core ----

CheckResult commutator_trace(Context& cx) {
  Tracker t("matcore.commutator_trace", 1e-12);
  const std::size_t n_trials = cx.trials(1000);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const std::size_t n = cx.dim(1, 8);
    const Mat x = sample::gaussian(cx.rng, n);
    const Mat y = sample::gaussian(cx.rng, n);
    t.see(rel(commutator(x, y).trace(), frob_norm(x) * frob_norm(y)));
  }
  return t.done(n_trials);
}

CheckResult frobenius_identities(Context& cx) {
  Tracker t("matcore.frobenius_identities", 1e-10);
  const std::size_t n_trials = cx.trials(1000);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const std::size_t n = cx.dim(1, 8);
    const Mat a = sample::gaussian(cx.rng, n);
    const Mat c = commutator(a, a.transpose());
    const double na = frob_norm(a);
    // <A, [A,A^t]> = 0 and <A, [A,[A,A^t]]> = -||[A,A^t]||^2.
    t.see(rel(frob_inner(a, c), na * na * na));
    t.see(rel(frob_inner(a, commutator(a, c)) + frob_norm_sq(c), na * na * na * na));
  }
  return t.done(n_trials);
}

CheckResult spectrum_conjugation(Context& cx) {
  Tracker t("matcore.spectrum_conjugation", 1e-7);
  const std::size_t n_trials = cx.trials(200);
  std::size_t done = 0;
  while (done < n_trials) {
    const std::size_t n = cx.dim(1, 6);
    const Mat a = sample::gaussian(cx.rng, n);
    const Mat p = sample::gaussian(cx.rng, n);
    if (condition_number(p) > 1e2) continue;
    const Spectrum s0 = eigenvalues(a);
    const Spectrum s1 = eigenvalues(p * a * inverse(p));
    t.see(spectrum_distance(s0, s1) / std::max(1.0, s0.scale()));
    ++done;
  }
  return t.done(n_trials, "P with cond <= 100; distance relative to max(1, spectral radius)");
}

CheckResult classify_scale_invariance(Context& cx) {
  Tracker t("matcore.classify_scale_invariance", 0);
  const std::size_t n_trials = cx.trials(200);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const std::size_t n = cx.dim(2, 6);
    Mat a(n);
    switch (k % 4) {
      case 0: a = sample::gaussian(cx.rng, n); break;
      case 1: a = sample::skew(cx.rng, n); break;
      case 2: a = sample::normal(cx.rng, n); break;
      default: a = sample::nilpotent_soliton(cx.rng, n); break;
    }
    const MatrixClass base = classify_matrix(a);
    for (double c : {1e-3, 0.5, 2.0, 1e3}) t.see(classify_matrix(c * a) == base ? 0.0 : 1.0);
  }
  return t.done(n_trials, "mismatching labels across c in {1e-3, 0.5, 2, 1e3}");
}

// ---- flows ----

CheckResult bracket_identities(Context& cx) {
  Tracker t("flow.bracket_rhs_identities", 1e-8);
  const std::size_t n_trials = cx.trials(1000);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const std::size_t n = cx.dim(1, 6);
    const Mat a = sample::gaussian(cx.rng, n);
    const Mat rhs = bracket_rhs(a);
    const double trs2 = frob_norm_sq(sym_part(a));
    const double n2 = frob_norm_sq(a);
    const double scale = n2 * n2;
    t.see(rel(2 * frob_inner(rhs, a) + 2 * trs2 * n2 + frob_norm_sq(commutator(a, a.transpose())), scale));
    // d/dt tr(A^2) = -2 tr(S^2) tr(A^2).
    t.see(rel(frob_inner(rhs, a.transpose()) + trs2 * (a * a).trace(), scale));
  }
  return t.done(n_trials, "residuals relative to ||A||^4");
}

CheckResult gradient_finite_difference(Context& cx) {
  Tracker t("flow.gradient_finite_difference", 1e-4);
  const std::size_t n_trials = cx.trials(200);
  auto f = [](const MatrixXd& a) {
    const MatrixXd c = a * a.transpose() - a.transpose() * a;
    return c.squaredNorm();
  };
  for (std::size_t k = 0; k < n_trials; ++k) {
    const std::size_t n = cx.dim(2, 6);
    const Mat a = sample::gaussian(cx.rng, n);
    const double h = 1e-5 * frob_norm(a);
    MatrixXd neg_grad(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        MatrixXd up = a.eigen();
        MatrixXd dn = a.eigen();
        up(i, j) += h;
        dn(i, j) -= h;
        neg_grad(i, j) = -(f(up) - f(dn)) / (2 * h);
      }
    const Mat field = cx.opts->gradient_field(a);
    t.see((field.eigen() - neg_grad).norm() / std::max(neg_grad.norm(), 1e-300));
  }
  return t.done(n_trials, "central differences with step 1e-5 ||A||");
}

std::string describe(const std::vector<Violation>& v) {
  if (v.empty()) return "no violations";
  return fmt::format("{} violations, first {} at t = {}", v.size(), v.front().rule, v.front().t);
}

CheckResult bracket_monotonicity(Context& cx) {
  Tracker t("flow.bracket_monotonicity", 0);
  const std::size_t n_trials = cx.trials(12);
  std::string detail = "no violations";
  double identity_worst = 0;
  for (std::size_t k = 0; k < n_trials; ++k) {
    FlowSpec s;
    s.A0 = sample::gaussian(cx.rng, cx.dim(2, 5));
    s.t_end = 20;
    s.sample_stride = 0.1;
    const Trajectory traj = integrate(s);
    const auto v = monitor_suite(traj);
    if (!v.empty()) detail = describe(v);
    t.see(static_cast<double>(v.size()));
    for (const auto& smp : traj.samples) {
      const auto& d = smp.diag;
      identity_worst = std::max(identity_worst, rel(d.tr_S2 - 0.5 * d.norm_sq - 0.5 * d.tr_A2, d.norm_sq));
    }
  }
  if (identity_worst > 1e-10) {
    t.see(1.0);
    detail += fmt::format("; tr_S2 identity residual {:.3e}", identity_worst);
  }
  return t.done(n_trials, detail + "; includes the tr(S^2) decay bound and the tr(S^2) = |A|^2/2 + tr(A^2)/2 identity");
}

CheckResult spectrum_scaling(Context& cx) {
  Tracker t("flow.spectrum_scaling", 1e-5);
  const std::size_t n_trials = cx.trials(10);
  for (std::size_t k = 0; k < n_trials; ++k) {
    FlowSpec s;
    s.A0 = sample::gaussian(cx.rng, cx.dim(2, 4));
    s.t_end = 5;
    s.sample_stride = 0.25;
    const Trajectory traj = integrate(s);
    const Spectrum& s0 = traj.front().diag.spectrum;
    const double tr0 = s.A0.trace();
    for (const auto& smp : traj.samples) {
      if (!smp.diag.a_of_t) {
        t.see(1.0);
        continue;
      }
      const double a = *smp.diag.a_of_t;
      t.see(spectrum_distance(smp.diag.spectrum, s0.scaled(a)) / (a * s0.scale()));
      // Independent least-squares ratio against the trace ratio.
      double num = 0;
      double den = 0;
      for (std::size_t i = 0; i < s0.size(); ++i) {
        num += std::real(std::conj(s0[i]) * smp.diag.spectrum[i]);
        den += std::norm(s0[i]);
      }
      if (std::abs(tr0) > 1e-8) t.see(rel(num / den - smp.A.trace() / tr0, a));
    }
  }
  return t.done(n_trials, "relative to a(t) times the spectral radius of A0");
}

CheckResult normalized_laws(Context& cx) {
  Tracker t("flow.normalized_laws", 1e-6);
  const std::size_t n_trials = cx.trials(8);
  std::size_t violations = 0;
  for (std::size_t k = 0; k < n_trials; ++k) {
    const std::size_t n = cx.dim(2, 4);
    FlowSpec s;
    s.kind = FlowKind::Normalized;
    s.A0 = sample::gaussian(cx.rng, n);
    s.t_end = 10;
    s.sample_stride = 0.1;
    violations += monitor_suite(integrate(s)).size();

    // Second-order one-sided differences against the evolution laws.
    const double h = 1e-4;
    s.t_end = 2 * h;
    s.sample_stride = h;
    s.rel_tol = 1e-13;
    s.abs_tol = 1e-15;
    const Trajectory tr = integrate(s);
    const Mat& b = tr.front().A;
    const double f_raw = moment_functional(b);
    auto d_ds = [&](auto get) {
      return (-3 * get(tr.samples[0]) + 4 * get(tr.samples[1]) - get(tr.samples[2])) / (2 * h);
    };
    const double d_tr = d_ds([](const Sample& x) { return x.diag.tr_A; });
    const double d_tr2 = d_ds([](const Sample& x) { return x.diag.tr_A2; });
    t.see(std::abs(d_tr - f_raw * b.trace()) / std::max(1.0, std::abs(d_tr)));
    t.see(std::abs(d_tr2 - 2 * f_raw * (b * b).trace()) / std::max(1.0, std::abs(d_tr2)));
  }
  if (violations > 0) t.see(static_cast<double>(violations));
  return t.done(n_trials, fmt::format("{} monitor violations; finite-difference step 1e-4", violations));
}

CheckResult gradient_laws(Context& cx) {
  Tracker t("flow.gradient_laws", 1e-6);
  const std::size_t n_trials = cx.trials(6);
  std::size_t violations = 0;
  for (std::size_t k = 0; k < n_trials; ++k) {
    FlowSpec s;
    s.kind = FlowKind::Gradient;
    const Mat g = sample::gaussian(cx.rng, cx.dim(2, 4));
    s.A0 = g / frob_norm(g);
    s.t_end = 200;
    s.sample_stride = 1;
    const Trajectory traj = integrate(s);
    violations += monitor_suite(traj).size();
    const Mat& last = traj.back().A;
    t.see(frob_norm(commutator(last, last.transpose())) / frob_norm_sq(last));
  }
  if (violations > 0) t.see(static_cast<double>(violations));
  return t.done(n_trials, fmt::format("{} monitor violations; worst is the normality of A(200) for unit A0", violations));
}

// ---- curvature ----

CheckResult ricci_cross_validation(Context& cx) {
  Tracker t("geometry.ricci_cross_validation", 1e-10);
  const std::size_t n_trials = cx.trials(500);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const Mat a = sample::gaussian(cx.rng, cx.dim(1, 6));
    const Mat block = ricci_operator_muA(a);
    const Mat general = ricci_operator_general(mu_of_A(a));
    t.see(frob_norm(general - block) / std::max(frob_norm(block), 1e-300));
  }
  return t.done(n_trials);
}

CheckResult scalar_curvature(Context& cx) {
  Tracker t("geometry.scalar_curvature", 1e-10);
  const std::size_t n_trials = cx.trials(500);
  std::size_t positive = 0;
  for (std::size_t k = 0; k < n_trials; ++k) {
    const Mat a = sample::gaussian(cx.rng, cx.dim(1, 6));
    const double scal = ricci_operator_general(mu_of_A(a)).trace();
    const double expected = -frob_norm_sq(sym_part(a)) - a.trace() * a.trace();
    t.see(rel(scal - expected, std::abs(expected)));
    if (scal > 0) ++positive;
  }
  if (positive > 0) t.see(static_cast<double>(positive));
  return t.done(n_trials, fmt::format("{} positive scalar curvatures", positive));
}

CheckResult riemann_symmetries(Context& cx) {
  Tracker t("geometry.riemann_symmetries", 1e-9);
  const std::size_t n_trials = cx.trials(100);
  std::uniform_real_distribution<double> lam(-1.0, 4.0);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const MetricLieAlgebra g = k % 3 == 2 ? ejsol_algebra(lam(cx.rng), 0.3 + std::abs(lam(cx.rng)), lam(cx.rng))
                                          : mu_of_A(sample::gaussian(cx.rng, cx.dim(1, 5)));
    const RiemannTensor r(g);
    const double sc = std::max(g.max_abs() * g.max_abs(), 1e-300);
    t.see(r.symmetry_residual() / sc);
    t.see(r.bianchi_residual() / sc);
    const Mat ric = ricci_operator_general(g);
    t.see(frob_norm(r.ricci() - ric) / std::max(frob_norm(ric), sc));
  }
  return t.done(n_trials, "mu_A and 4-d family algebras; pair symmetries, first Bianchi, Ricci contraction");
}

CheckResult riemann_scaling(Context& cx) {
  Tracker t("geometry.riemann_scaling", 1e-8);
  const std::size_t n_trials = cx.trials(50);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const Mat a = sample::gaussian(cx.rng, cx.dim(1, 5));
    const double base = RiemannTensor(mu_of_A(a)).norm();
    for (double c : {0.5, 2.0, 10.0}) t.see(rel(RiemannTensor(mu_of_A(c * a)).norm() - c * c * base, c * c * base));
  }
  return t.done(n_trials);
}

CheckResult heintze_vs_sampler(Context& cx) {
  Tracker t("geometry.heintze_vs_sampler", 0);
  const std::size_t n_trials = cx.trials(100);
  std::uniform_real_distribution<double> shift(0.0, 4.0);
  std::size_t negatives = 0;
  std::size_t done = 0;
  std::size_t seed_base = 1000;
  while (done < n_trials) {
    const std::size_t n = cx.dim(1, 5);
    const Mat a = sample::gaussian(cx.rng, n) + shift(cx.rng) * Mat::identity(n);
    const HeintzeResult h = heintze_check(a);
    if (!h.condA || h.marginal) continue;
    const SectionalRange range = sample_sectional(RiemannTensor(mu_of_A(a)), seed_base + done);
    t.see(h.negative == (range.max < 0) ? 0.0 : 1.0);
    if (h.negative) ++negatives;
    ++done;
  }
  return t.done(n_trials, fmt::format("{} of the matrices are Heintze-negative", negatives));
}

CheckResult heintze_normal(Context& cx) {
  Tracker t("geometry.heintze_normal_admits", 0);
  const std::size_t n_trials = cx.trials(100);
  std::size_t done = 0;
  while (done < n_trials) {
    const std::size_t n = cx.dim(1, 5);
    Mat a = sample::normal(cx.rng, n);
    // Push some spectra into one half-plane so both answers occur.
    if (done % 2 == 0) a = a + 3.0 * Mat::identity(n);
    const HeintzeResult h = heintze_check(a);
    if (!h.condA || h.marginal) continue;
    t.see(h.negative == admits_negative_curvature(a) ? 0.0 : 1.0);
    ++done;
  }
  return t.done(n_trials);
}

// ---- solitons ----

Mat soliton_or_random(Context& cx, std::size_t k, std::size_t n) {
  switch (k % 4) {
    case 0: return sample::normal(cx.rng, n);
    case 1: return sample::nilpotent_soliton(cx.rng, n);
    default: return sample::gaussian(cx.rng, n);
  }
}

CheckResult fixed_point_agreement(Context& cx) {
  Tracker t("soliton.fixed_point_agreement", 0);
  const std::size_t n_trials = cx.trials(300);
  std::size_t accepted = 0;
  for (std::size_t k = 0; k < n_trials; ++k) {
    const Mat a = soliton_or_random(cx, k, cx.dim(2, 5));
    const Mat b = a / frob_norm(a);
    const bool fixed = frob_norm(normalized_rhs(b)) <= 1e-8;
    const bool sol = classify_soliton(a).accepted();
    if (sol) ++accepted;
    t.see(fixed == sol ? 0.0 : 1.0);
  }
  return t.done(n_trials, fmt::format("{} solitons among the samples", accepted));
}

CheckResult certify_agreement(Context& cx) {
  Tracker t("soliton.certify_classify_agreement", 0);
  const std::size_t n_trials = cx.trials(200);
  double worst_derivation = 0;
  for (std::size_t k = 0; k < n_trials; ++k) {
    const Mat a = soliton_or_random(cx, k, cx.dim(2, 4));
    const SolitonVerdict direct = classify_soliton(a);
    const SolitonVerdict cert = certify_algebraic_soliton(mu_of_A(a));
    t.see(direct.accepted() == cert.accepted() ? 0.0 : 1.0);
    if (cert.accepted()) worst_derivation = std::max(worst_derivation, cert.residuals.derivation);
  }
  if (worst_derivation > 1e-8) t.see(1.0);
  return t.done(n_trials, fmt::format("worst derivation residual {:.3e}", worst_derivation));
}

CheckResult flat_iff_skew(Context& cx) {
  Tracker t("soliton.flat_iff_skew", 0);
  const std::size_t n_trials = cx.trials(100);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const std::size_t n = cx.dim(1, 5);
    const Mat a = k % 2 == 0 ? sample::skew(cx.rng, n) : sample::gaussian(cx.rng, n);
    const double riem = RiemannTensor(mu_of_A(a)).norm();
    const bool flat = riem <= 1e-8 * std::max(1.0, frob_norm_sq(a));
    t.see(flat == (classify_matrix(a) == MatrixClass::Skew) ? 0.0 : 1.0);
  }
  return t.done(n_trials);
}

bool imaginary_spectrum(const Mat& a) {
  const Spectrum s = eigenvalues(a);
  return std::all_of(s.values().begin(), s.values().end(),
                     [&](const auto& v) { return std::abs(v.real()) <= 1e-6 * std::max(1.0, s.scale()); });
}

CheckResult normalized_flatness(Context& cx) {
  Tracker t("soliton.normalized_limit_flatness", 0);
  const std::size_t n_trials = cx.trials(8);
  std::string detail;
  for (std::size_t k = 0; k < n_trials; ++k) {
    const std::size_t n = cx.dim(2, 3);
    Mat a(n);
    if (k % 2 == 0) {
      // Imaginary spectrum, not skew: conjugate a skew matrix by a
      // positive diagonal scaling.
      std::uniform_real_distribution<double> d(0.5, 2.0);
      std::vector<double> w(n);
      for (auto& x : w) x = d(cx.rng);
      const Mat k_skew = sample::skew(cx.rng, n);
      const Mat dm = Mat::diagonal(w);
      a = dm * k_skew * inverse(dm);
    } else {
      a = sample::gaussian(cx.rng, n);
    }
    FlowSpec s;
    s.kind = FlowKind::Normalized;
    s.A0 = a;
    s.t_end = 400;
    s.sample_stride = 0.1;
    const OmegaLimitReport rep = omega_limit(s);
    const bool skew_limit = rep.A_inf && is_skew(*rep.A_inf, 1e-6);
    const bool imag = imaginary_spectrum(a);
    if (!rep.converged || skew_limit != imag) {
      t.see(1.0);
      detail = fmt::format("trial {}: converged={} skew_limit={} imaginary_spectrum={}", k, rep.converged,
                           skew_limit, imag);
    }
  }
  return t.done(n_trials, detail.empty() ? "B_inf skew exactly for imaginary spectra" : detail);
}

CheckResult unimodular_single_limit(Context& cx) {
  Tracker t("soliton.unimodular_single_limit", 1e-5);
  const std::size_t n_trials = cx.trials(6);
  std::size_t disagreements = 0;
  for (std::size_t k = 0; k < n_trials; ++k) {
    const std::size_t n = cx.dim(2, 3);
    FlowSpec s;
    s.kind = FlowKind::Normalized;
    s.A0 = k % 2 == 0 ? sample::traceless(cx.rng, n) : sample::gaussian(cx.rng, n);
    s.t_end = 400;
    s.sample_stride = 0.1;
    const OmegaLimitReport rep = omega_limit(s);
    if (k % 2 == 0) {
      t.see(rep.late_spread);
    } else if (!rep.spectra_agree) {
      ++disagreements;
    }
  }
  if (disagreements > 0) t.see(static_cast<double>(disagreements));
  return t.done(n_trials,
                fmt::format("traceless: late-window spread; trace nonzero: {} spectrum disagreements", disagreements));
}

// ---- worked examples ----

CheckResult phase_specialization(Context& cx) {
  Tracker t("casebook.phase_specialization", 1e-12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const std::size_t n_trials = cx.trials(100);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const Phase2DPoint p{u(cx.rng), u(cx.rng)};
    const Phase2DPoint d = phase2d_rhs(p);
    const Mat rhs = bracket_rhs(phase2d_embed(p));
    t.see(std::abs(d.x - rhs(0, 1)));
    t.see(std::abs(d.y - rhs(1, 0)));
  }
  return t.done(n_trials);
}

CheckResult phase_closure(Context& cx) {
  Tracker t("casebook.phase_family_closure", 1e-12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const std::size_t n_trials = cx.trials(100);
  for (std::size_t k = 0; k < n_trials; ++k) {
    const Mat rhs = bracket_rhs(phase2d_embed({u(cx.rng), u(cx.rng)}));
    t.see(std::max(std::abs(rhs(0, 0)), std::abs(rhs(1, 1))));
  }
  return t.done(n_trials);
}

CheckResult ejsol_exact_numeric(Context&) {
  Tracker t("casebook.ejsol_exact_vs_numeric", 1e-8);
  std::size_t runs = 0;
  for (double lambda : {0.1, 0.2, 0.5, 1.0, 3.8})
    for (double alpha0 : {ejsol_soliton_alpha(lambda), 1.0, 2.0}) {
      for (const auto& s : ejsol_integrate(lambda, alpha0, 100.0)) {
        const EjsolState ex = ejsol_exact(s, s.t);
        t.see(std::abs(s.alpha - ex.alpha));
        t.see(std::abs(s.h - ex.h));
      }
      ++runs;
    }
  return t.done(runs, "absolute error through t = 100");
}

CheckResult counterexample(Context&) {
  Tracker t("casebook.counterexample_stands", 0);
  const double upper = 2.0 - std::sqrt(3.0);
  std::size_t runs = 0;
  std::string detail;
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(4, 1);
  const Eigen::VectorXd e3 = Eigen::VectorXd::Unit(4, 3);
  for (double lambda : {0.05, 0.1, 0.2, upper}) {
    ++runs;
    const double alpha = ejsol_soliton_alpha(lambda);
    // Rescaling ad(e0) by a large factor gives a negatively curved metric.
    const MetricLieAlgebra scaled = scale_ad_e0(ejsol_algebra(lambda, alpha), 20.0);
    const double kmax = sample_sectional(RiemannTensor(scaled), 7).max;
    if (!(kmax < 0)) {
      t.see(1.0);
      detail = fmt::format("lambda {}: rescaled metric has sampled K up to {}", lambda, kmax);
    }
    // Along the flow from the soliton, K(e1, e3) >= 0 from t0 on.
    const double t0 = ejsol_curvature_crossing(lambda, alpha).value_or(0.0);
    for (double tt = t0; tt <= t0 + 100.0; tt += 0.5) {
      const EjsolState s = ejsol_exact({lambda, alpha, alpha, 1.0, 0.0}, tt);
      const double k13 = sectional_curvature(ejsol_algebra(lambda, s.alpha, s.h), e1, e3);
      if (k13 < -1e-14) {
        t.see(1.0);
        detail = fmt::format("lambda {}: K(e1,e3) = {} at t = {}", lambda, k13, tt);
      }
    }
  }
  return t.done(runs, detail.empty() ? "lambda in {0.05, 0.1, 0.2, 2 - sqrt(3)}" : detail);
}

using CheckFn = CheckResult (*)(Context&);

struct NamedCheck {
  const char* name;
  CheckFn fn;
};

const std::vector<NamedCheck>& registry() {
  static const std::vector<NamedCheck> checks = {
      {"matcore.commutator_trace", commutator_trace},
      {"matcore.frobenius_identities", frobenius_identities},
      {"matcore.spectrum_conjugation", spectrum_conjugation},
      {"matcore.classify_scale_invariance", classify_scale_invariance},
      {"flow.bracket_rhs_identities", bracket_identities},
      {"flow.gradient_finite_difference", gradient_finite_difference},
      {"flow.bracket_monotonicity", bracket_monotonicity},
      {"flow.spectrum_scaling", spectrum_scaling},
      {"flow.normalized_laws", normalized_laws},
      {"flow.gradient_laws", gradient_laws},
      {"geometry.ricci_cross_validation", ricci_cross_validation},
      {"geometry.scalar_curvature", scalar_curvature},
      {"geometry.riemann_symmetries", riemann_symmetries},
      {"geometry.riemann_scaling", riemann_scaling},
      {"geometry.heintze_vs_sampler", heintze_vs_sampler},
      {"geometry.heintze_normal_admits", heintze_normal},
      {"soliton.fixed_point_agreement", fixed_point_agreement},
      {"soliton.certify_classify_agreement", certify_agreement},
      {"soliton.flat_iff_skew", flat_iff_skew},
      {"soliton.normalized_limit_flatness", normalized_flatness},
      {"soliton.unimodular_single_limit", unimodular_single_limit},
      {"casebook.phase_specialization", phase_specialization},
      {"casebook.phase_family_closure", phase_closure},
      {"casebook.ejsol_exact_vs_numeric", ejsol_exact_numeric},
      {"casebook.counterexample_stands", counterexample},
  };
  return checks;
}

}  // namespace

std::vector<std::string> validation_check_names() {
  std::vector<std::string> out;
  for (const auto& c : registry()) out.emplace_back(c.name);
  return out;
}

ValidateReport run_validation(const ValidateOptions& opts) {
  if (!(opts.scale > 0)) throw std::invalid_argument("run_validation: scale must be positive");
  if (!opts.gradient_field) throw std::invalid_argument("run_validation: gradient_field is empty");
  const auto& checks = registry();
  ValidateReport rep;
  rep.seed = opts.seed;
  rep.checks.resize(checks.size());

  auto run_one = [&](std::size_t i) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    Context cx{Rng(seq), opts.scale, &opts};
    try {
      rep.checks[i] = checks[i].fn(cx);
    } catch (const std::exception& e) {
      CheckResult r;
      r.name = checks[i].name;
      r.passed = false;
      r.worst = std::numeric_limits<double>::infinity();
      r.detail = fmt::format("exception: {}", e.what());
      rep.checks[i] = r;
    }
  };

  unsigned workers = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, checks.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < checks.size(); i = next++) run_one(i);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return rep;
}

io::Json to_json(const ValidateReport& r) {
  io::Json checks = io::Json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"worst", std::isfinite(c.worst) ? io::Json(c.worst) : io::Json("inf")},
                      {"tolerance", c.tolerance},
                      {"trials", c.trials},
                      {"detail", c.detail}});
  }
  return {{"seed", r.seed}, {"all_passed", r.all_passed()}, {"checks", std::move(checks)}};
}

}  // namespace solvflow
