// Acceptance run: one PASS/FAIL line per criterion, with the measured value
// and the pinned tolerance. Criteria that cannot hold as stated are listed in
// kUnattainable with the reason; they still print FAIL, but only an
// unexpected FAIL (or an unexpected PASS of a listed one) makes the run exit
// non-zero.

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "solvflow/casebook.hpp"
#include "solvflow/flow.hpp"
#include "solvflow/geometry.hpp"
#include "solvflow/soliton.hpp"
#include "solvflow/validate.hpp"

using namespace solvflow;
using sample::Rng;

namespace {

struct Outcome {
  bool passed = true;
  std::vector<std::string> lines;

  void check(bool ok, std::string line) {
    passed = passed && ok;
    lines.push_back(fmt::format("    [{}] {}", ok ? "ok" : "FAIL", line));
  }
  void note(std::string line) { lines.push_back("    [info] " + line); }
};

const std::map<int, std::string> kUnattainable = {
    {8,
     "the printed K(e1,e3) formula 1/4 - 3 lambda / c_lambda drops a factor 2: with alpha^2 = 3/(2 c_lambda) "
     "the tensor gives 1/4 - 3 lambda / (2 c_lambda), which is also the only form whose sign changes at 2 -+ sqrt(3)"},
    {11,
     "t ||Riem|| along these solutions is an exact multiple of t/(kt + 1), whose running sup still grows by "
     "2 to 3 percent between t = 10 and t = 100, so the 1 percent stabilisation bound cannot hold"},
    {12,
     "the time to Heintze negativity is not bounded over admissible starts: for these draws first hits range "
     "from 0 to about 6e3, and one start first turns negative near t = 6e8, so no fixed t_end works for every draw"},
};

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  FlowSpec s;
  s.t_end = 10;
  auto worst = [&](const Mat& a0, double k) {
    s.A0 = a0;
    double w = 0;
    for (const auto& smp : integrate(s).samples) {
      const Mat exact = (1.0 / std::sqrt(k * smp.t + 1)) * a0;
      w = std::max(w, frob_norm(smp.A - exact) / frob_norm(exact));
    }
    return w;
  };
  const double d = worst(Mat::diagonal({1, -1}), 4.0);
  const double e = worst(Mat::unit(2, 0, 1), 3.0);
  o.check(d <= 1e-6, fmt::format("diag(1,-1) vs (4t+1)^(-1/2) A0 on [0,10]: max rel err {:.3e} <= 1e-6", d));
  o.check(e <= 1e-6, fmt::format("E12 vs (3t+1)^(-1/2) E12 on [0,10]: max rel err {:.3e} <= 1e-6", e));
  return o;
}

Outcome criterion2() {
  Outcome o;
  Rng rng(2001);
  double w1 = 0, w2 = 0, w3 = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 1 + static_cast<std::size_t>(k % 6);
    const Mat a = sample::gaussian(rng, n);
    const Mat c = commutator(a, a.transpose());
    const double n2 = frob_norm_sq(a);
    const double n4 = n2 * n2;
    w1 = std::max(w1, std::abs(frob_inner(a, c)) / (n2 * std::sqrt(n2)));
    w2 = std::max(w2, std::abs(frob_inner(a, commutator(a, c)) + frob_norm_sq(c)) / n4);
    const double trs2 = frob_norm_sq(sym_part(a));
    w3 = std::max(w3, std::abs(2 * frob_inner(bracket_rhs(a), a) + 2 * trs2 * n2 + frob_norm_sq(c)) / n4);
  }
  o.check(w1 <= 1e-8, fmt::format("<A,[A,A^t]> = 0 over 1000 matrices: worst rel {:.3e} <= 1e-8", w1));
  o.check(w2 <= 1e-8, fmt::format("<A,[A,[A,A^t]]> = -||[A,A^t]||^2: worst rel {:.3e} <= 1e-8", w2));
  o.check(w3 <= 1e-8, fmt::format("2<RHS,A> = -2 tr(S^2)||A||^2 - ||[A,A^t]||^2: worst rel {:.3e} <= 1e-8", w3));

  double wg = 0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 5);
    const Mat a = sample::gaussian(rng, n);
    const double h = 1e-5 * frob_norm(a);
    Eigen::MatrixXd fd(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Eigen::MatrixXd up = a.eigen(), dn = a.eigen();
        up(i, j) += h;
        dn(i, j) -= h;
        fd(i, j) = -(moment_functional(Mat(up)) - moment_functional(Mat(dn))) / (2 * h);
      }
    wg = std::max(wg, (gradient_rhs(a).eigen() - fd).norm() / fd.norm());
  }
  o.check(wg <= 1e-4, fmt::format("gradient_rhs vs finite-difference -grad F (200 matrices): worst rel {:.3e} <= 1e-4", wg));
  return o;
}

Outcome criterion3() {
  Outcome o;
  Rng rng(3001);
  std::size_t violations = 0;
  double worst_bound = 0;
  std::string first;
  for (int k = 0; k < 50; ++k) {
    FlowSpec s;
    s.A0 = sample::gaussian(rng, 2 + static_cast<std::size_t>(k % 4));
    s.t_end = 20;
    const Trajectory traj = integrate(s);
    const auto v = monitor_suite(traj);
    if (!v.empty() && first.empty()) first = fmt::format("run {}: {} at t = {}", k, v.front().rule, v.front().t);
    violations += v.size();
    const double s0 = traj.front().diag.tr_S2;
    for (const auto& smp : traj.samples) worst_bound = std::max(worst_bound, smp.diag.tr_S2 * (2 * smp.t + 1 / s0));
  }
  o.check(violations == 0, fmt::format("||A||^2, tr(S^2), F non-increasing over 50 runs (slack 10 rel_tol): {} violations{}",
                                       violations, first.empty() ? "" : " (" + first + ")"));
  o.check(worst_bound <= 1 + 1e-6,
          fmt::format("tr(S(A(t))^2) (2t + tr(S(A0)^2)^-1) <= 1 + 1e-6: max {:.12f}", worst_bound));
  return o;
}

Outcome criterion4() {
  Outcome o;
  Rng rng(4001);
  double ws = 0, wa = 0;
  for (int k = 0; k < 30; ++k) {
    FlowSpec s;
    s.A0 = sample::gaussian(rng, 2 + static_cast<std::size_t>(k % 4));
    s.t_end = 10;
    s.sample_stride = 0.5;
    const Trajectory traj = integrate(s);
    const Spectrum s0 = traj.front().diag.spectrum;
    const double tr0 = s.A0.trace();
    for (const auto& smp : traj.samples) {
      // The scale factor recovered independently from the spectra.
      double num = 0, den = 0;
      for (std::size_t i = 0; i < s0.size(); ++i) {
        num += std::real(std::conj(s0[i]) * smp.diag.spectrum[i]);
        den += std::norm(s0[i]);
      }
      const double a = num / den;
      ws = std::max(ws, spectrum_distance(smp.diag.spectrum, s0.scaled(a)) / (a * s0.scale()));
      if (std::abs(tr0) > 1e-8) wa = std::max(wa, rel_gap(a, smp.A.trace() / tr0));
    }
  }
  o.check(ws <= 1e-5, fmt::format("Spec(A(t)) = a(t) Spec(A0) (30 runs): worst rel {:.3e} <= 1e-5", ws));
  o.check(wa <= 1e-5, fmt::format("a(t) = tr A(t) / tr A0 where tr A0 != 0: worst rel {:.3e} <= 1e-5", wa));
  return o;
}

Outcome criterion5() {
  Outcome o;
  Rng rng(5001);
  double wr = 0, ws = 0, smax = -INFINITY;
  for (int k = 0; k < 500; ++k) {
    const Mat a = sample::gaussian(rng, 1 + static_cast<std::size_t>(k % 6));
    const Mat block = ricci_operator_muA(a);
    const Mat general = ricci_operator_general(mu_of_A(a));
    wr = std::max(wr, frob_norm(general - block) / frob_norm(block));
    const double expected = -frob_norm_sq(sym_part(a)) - a.trace() * a.trace();
    ws = std::max(ws, rel_gap(general.trace(), expected));
    smax = std::max(smax, general.trace());
  }
  o.check(wr <= 1e-10, fmt::format("general Ricci vs mu_A block formula (500 matrices): worst rel {:.3e} <= 1e-10", wr));
  o.check(ws <= 1e-10, fmt::format("scal = -tr(S^2) - tr(A)^2: worst rel {:.3e} <= 1e-10", ws));
  o.check(smax <= 0, fmt::format("scal <= 0: max {:.3e}", smax));
  return o;
}

Outcome criterion6() {
  Outcome o;
  Rng rng(6001);
  double riem = 0, drift = 0;
  for (int k = 0; k < 20; ++k) {
    const Mat kk = sample::skew(rng, 2 + static_cast<std::size_t>(k % 5));
    riem = std::max(riem, RiemannTensor(mu_of_A(kk)).norm());
    FlowSpec s;
    s.A0 = kk;
    s.t_end = 10;
    for (const auto& smp : integrate(s).samples) drift = std::max(drift, frob_norm(smp.A - kk) / frob_norm(kk));
  }
  o.check(riem <= 1e-8, fmt::format("skew A0: riem_norm max {:.3e} <= 1e-8", riem));
  o.check(drift <= 1e-12, fmt::format("skew A0 is a fixed point: max rel drift {:.3e}", drift));

  double worst = 0;
  std::size_t stationary = 0;
  for (int k = 0; k < 30; ++k) {
    FlowSpec s;
    s.A0 = sample::gaussian(rng, 2 + static_cast<std::size_t>(k % 4));
    s.t_end = 1e14;
    s.samples_per_decade = 5;
    s.stop_when_stationary = 1e-16;
    s.rel_tol = 1e-11;
    s.abs_tol = 1e-20;
    const OmegaLimitReport r = omega_limit(s);
    worst = std::max(worst, r.skew_residual);
    if (r.terminal == Terminal::Stationary) ++stationary;
  }
  o.check(worst <= 1e-5, fmt::format("bracket-flow omega-limits (30 runs): worst skew residual {:.3e} <= 1e-5", worst));
  o.note(fmt::format("{} of 30 runs met the stationarity stop", stationary));
  return o;
}

OmegaLimitReport normalized_limit(const Mat& a0) {
  FlowSpec s;
  s.kind = FlowKind::Normalized;
  s.A0 = a0;
  s.t_end = 400;
  s.sample_stride = 0.1;
  return omega_limit(s);
}

Outcome criterion7() {
  Outcome o;
  const OmegaLimitReport real = normalized_limit(Mat::from_rows({{0, 2}, {1, 0}}));
  const bool soliton = real.verdict && real.verdict->accepted();
  const bool skew = real.A_inf && is_skew(*real.A_inf, 1e-6);
  o.check(real.converged && soliton && !skew,
          fmt::format("[[0,2],[1,0]]: B_inf soliton = {}, skew = {} (label {})", soliton, skew,
                      real.verdict ? to_string(real.verdict->label) : "none"));

  Rng rng(7001);
  std::uniform_real_distribution<double> eps(-0.3, 0.3);
  std::vector<Mat> starts = {Mat::from_rows({{0, 2}, {-1, 0}})};
  for (int k = 0; k < 6; ++k) starts.push_back(Mat::from_rows({{0, 1 + eps(rng)}, {-1 + eps(rng), 0}}));
  std::size_t skew_limits = 0;
  double worst = 0;
  for (const auto& a0 : starts) {
    const OmegaLimitReport r = normalized_limit(a0);
    const double res = r.A_inf ? frob_norm(sym_part(*r.A_inf)) / frob_norm(*r.A_inf) : INFINITY;
    worst = std::max(worst, res);
    if (r.converged && res <= 1e-6) ++skew_limits;
  }
  o.check(skew_limits == starts.size(),
          fmt::format("perturbed skew starts (imaginary spectrum): {} of {} limits skew, worst ||S(B_inf)|| {:.3e} <= 1e-6",
                      skew_limits, starts.size(), worst));
  return o;
}

Outcome criterion8() {
  Outcome o;
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(4, 1);
  const Eigen::VectorXd e3 = Eigen::VectorXd::Unit(4, 3);
  const std::vector<double> lambdas = {0.1, 0.2, 0.5, 1.0, 3.8};

  double printed_gap = 0, corrected_gap = 0;
  for (double lambda : lambdas) {
    const double c = ejsol_c(lambda);
    const double k = sectional_curvature(ejsol_algebra(lambda, ejsol_soliton_alpha(lambda)), e1, e3);
    printed_gap = std::max(printed_gap, std::abs(k - (0.25 - 3 * lambda / c)));
    corrected_gap = std::max(corrected_gap, std::abs(k - (0.25 - 3 * lambda / (2 * c))));
    o.note(fmt::format("lambda {}: tensor K(e1,e3) = {:.10f}, printed 1/4 - 3l/c = {:.10f}", lambda, k,
                       0.25 - 3 * lambda / c));
  }
  o.check(printed_gap <= 1e-10,
          fmt::format("tensor K(e1,e3) at soliton alpha vs 1/4 - 3 lambda/(lambda^2+(1-lambda)^2+1): max gap {:.3e} <= 1e-10",
                      printed_gap));
  o.note(fmt::format("same against 1/4 - 3 lambda/(2 c_lambda): max gap {:.3e}", corrected_gap));

  bool signs = true;
  const double lo = 2 - std::sqrt(3.0), hi = 2 + std::sqrt(3.0);
  for (double lambda : {0.05, 0.1, 0.2, 0.26, 0.27, 0.5, 1.0, 2.0, 3.7, 3.74, 3.75, 3.8, 5.0}) {
    const double k = sectional_curvature(ejsol_algebra(lambda, ejsol_soliton_alpha(lambda)), e1, e3);
    const bool expect_nonneg = lambda <= lo || lambda >= hi;
    signs = signs && ((k >= 0) == expect_nonneg);
  }
  o.check(signs, "sign of the tensor K(e1,e3) at soliton alpha flips exactly at 2 -+ sqrt(3) (13 lambdas)");

  double worst = 0;
  for (double lambda : lambdas)
    for (double alpha0 : {ejsol_soliton_alpha(lambda), 0.5, 2.0})
      for (const auto& st : ejsol_integrate(lambda, alpha0, 100.0)) {
        const EjsolState ex = ejsol_exact(st, st.t);
        worst = std::max({worst, std::abs(st.alpha - ex.alpha), std::abs(st.h - ex.h)});
      }
  o.check(worst <= 1e-8, fmt::format("exact alpha(t), h(t) vs numeric through t = 100: max abs err {:.3e} <= 1e-8", worst));

  bool crossings = true;
  for (double lambda : {0.05, 0.1, 0.2, lo})
    for (double alpha0 : {2.0, 3.0}) {
      const auto t0 = ejsol_curvature_crossing(lambda, alpha0);
      const double step = 0.01;
      const auto states = ejsol_integrate(lambda, alpha0, 60.0, step);
      std::optional<double> flip;
      for (std::size_t i = 1; i < states.size(); ++i) {
        const double kp = sectional_curvature(ejsol_algebra(lambda, states[i - 1].alpha, states[i - 1].h), e1, e3);
        const double kc = sectional_curvature(ejsol_algebra(lambda, states[i].alpha, states[i].h), e1, e3);
        if (kp < 0 && kc >= 0) {
          flip = states[i].t;
          break;
        }
      }
      bool ok;
      if (lambda == lo) {
        // At the endpoint the slope 2c - 12 lambda vanishes: K stays negative.
        ok = !t0 && !flip;
      } else if (t0 && *t0 == 0.0) {
        // Already non-negative at t = 0, so there is no sign change to find.
        const double k0 = sectional_curvature(ejsol_algebra(lambda, alpha0, 1.0), e1, e3);
        ok = k0 >= 0 && !flip;
      } else {
        ok = t0 && flip && *flip - step <= *t0 && *t0 <= *flip;
      }
      crossings = crossings && ok;
      o.note(fmt::format("lambda {:.6f}, alpha0 {}: t0 = {}, computed K changes sign at {}", lambda, alpha0,
                         t0 ? fmt::format("{:.6f}", *t0) : "never", flip ? fmt::format("{:.2f}", *flip) : "never"));
    }
  o.check(crossings, "crossing time t0 = (4 lambda - alpha0^-2)/(2 c - 12 lambda) within one sample step of the sign change");
  return o;
}

Outcome criterion9() {
  Outcome o;
  Rng rng(9001);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double ws = 0;
  for (int k = 0; k < 100; ++k) {
    const Phase2DPoint p{u(rng), u(rng)};
    const Phase2DPoint d = phase2d_rhs(p);
    const Mat rhs = bracket_rhs(phase2d_embed(p));
    ws = std::max({ws, std::abs(d.x - rhs(0, 1)), std::abs(d.y - rhs(1, 0)), std::abs(rhs(0, 0)), std::abs(rhs(1, 1))});
  }
  o.check(ws <= 1e-12, fmt::format("specialisation of the bracket flow to [[0,x],[y,0]]: max gap {:.3e} <= 1e-12", ws));

  const auto res = phase2d_sweep(phase2d_grid(41, -2, 2));
  double line = 0, diag = 0;
  std::size_t failures = 0, quadrant = 0;
  std::map<std::string, std::size_t> counts;
  for (const auto& r : res) {
    ++counts[to_string(r.cls)];
    if (r.cls == PhaseClass::StepFailure || r.cls == PhaseClass::Unresolved) ++failures;
    line = std::max(line, std::abs(r.limit.x + r.limit.y) / std::sqrt(2.0));
    if (r.start.x * r.start.y > 0) {
      ++quadrant;
      diag = std::max(diag, r.diagonal_distance.value_or(INFINITY));
    }
  }
  o.check(failures == 0 && line <= 1e-5,
          fmt::format("41x41 sweep: every limit within {:.3e} <= 1e-5 of y = -x ({} unresolved)", line, failures));
  o.check(diag <= 1e-4, fmt::format("x0 y0 > 0 ({} starts): normalised end point within {:.3e} <= 1e-4 of +-(1,1)/sqrt2",
                                    quadrant, diag));
  std::string summary;
  for (const auto& [k, v] : counts) summary += fmt::format("{} {}, ", k, v);
  o.note(summary.substr(0, summary.size() - 2));
  return o;
}

Outcome criterion10() {
  Outcome o;
  Rng rng(10001);
  double worst = 0, grad = 0;
  for (int k = 0; k < 10; ++k) {
    const Mat a0 = sample::traceless(rng, 2 + static_cast<std::size_t>(k % 3));
    const ReparamReport r = reparam_bridge(a0, 10.0);
    worst = std::max(worst, r.max_residual);
    grad = std::max(grad, r.gradient_residual);
  }
  o.check(worst <= 1e-4, fmt::format("A(t) = c(t) Abar(tau(t)) through t = 10 (10 traceless starts): max rel {:.3e} <= 1e-4", worst));
  o.note(fmt::format("co-integrated Abar vs independent gradient run: max rel {:.3e}", grad));
  return o;
}

Outcome criterion11() {
  Outcome o;
  const std::vector<std::pair<std::string, Mat>> starts = {
      {"diag(1,-1)", Mat::diagonal({1, -1})}, {"E12", Mat::unit(2, 0, 1)}, {"I", Mat::identity(2)}};
  for (const auto& [name, a0] : starts) {
    FlowSpec s;
    s.A0 = a0;
    s.t_end = 100;
    s.sample_stride = 0.1;
    const Type3Report rep = type3_monitor(integrate(s));
    // Running sup over [0.1, T] for T at the start and end of the last decade.
    auto sup_until = [&](double t_max) {
      double m = 0;
      for (const auto& x : rep.samples)
        if (x.t <= t_max + 1e-9) m = std::max(m, x.t_riem);
      return m;
    };
    const double at10 = sup_until(10), at90 = sup_until(90), at100 = sup_until(100);
    const double change = (at100 - at10) / at100;
    o.check(std::isfinite(rep.sup_tC), fmt::format("{}: sup t||Riem|| over [0.1,100] = {:.6f} is finite", name, rep.sup_tC));
    o.check(change < 0.01, fmt::format("{}: running sup varies by {:.3f}% over t in [10,100] (< 1%)", name, 100 * change));
    o.note(fmt::format("{}: over [90,100] it varies by {:.4f}%", name, 100 * (at100 - at90) / at100));
  }
  return o;
}

Outcome criterion12() {
  Outcome o;
  Rng rng(12001);
  std::size_t found = 0, persistent = 0, agrees = 0, drawn = 0;
  double latest = 0;
  while (drawn < 10) {
    const Mat a0 = sample::gaussian(rng, 2 + static_cast<std::size_t>(rng() % 3));
    if (!admits_negative_curvature(a0)) continue;
    ++drawn;
    const CurvatureWatchReport r = curvature_watch(a0, 100.0, 0.1, drawn, 300);
    if (r.first_negative_time) {
      ++found;
      latest = std::max(latest, *r.first_negative_time);
    }
    if (r.first_negative_time && r.persistent) ++persistent;
    if (r.sampler_agrees) ++agrees;
  }
  o.check(found == 10, fmt::format("finite first_negative_time for {} of 10 starts (latest {:.1f})", found, latest));
  o.check(persistent == 10, fmt::format("Heintze negativity persists to t = 100 at every later sample: {} of 10", persistent));
  o.note(fmt::format("plane sampler saw only negative planes where Heintze was negative: {} of 10", agrees));

  // Same starts on a long logarithmic horizon: negativity does arrive, late.
  Rng again(12001);
  std::size_t late = 0, tried = 0;
  double last = 0;
  while (tried < 10) {
    const Mat a0 = sample::gaussian(again, 2 + static_cast<std::size_t>(again() % 3));
    if (!admits_negative_curvature(a0)) continue;
    ++tried;
    FlowSpec spec;
    spec.A0 = a0;
    spec.t_end = 1e14;
    spec.samples_per_decade = 20;
    for (const auto& s : integrate(spec).samples)
      if (heintze_check(s.A).negative) {
        ++late;
        last = std::max(last, s.t);
        break;
      }
  }
  o.note(fmt::format("on [0, 1e14] with 20 samples per decade: Heintze-negative for {} of 10, latest first hit {:.3g}",
                     late, last));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"closed-form oracle", criterion1},       {"algebraic identities", criterion2},
      {"monotonicity", criterion3},              {"spectrum scaling", criterion4},
      {"Ricci cross-validation", criterion5},    {"flatness", criterion6},
      {"normalised-flow limits", criterion7},    {"4-d family numbers", criterion8},
      {"phase plane", criterion9},               {"reparameterisation bridge", criterion10},
      {"Type-III bound", criterion11},           {"curvature in finite time", criterion12},
  };
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.check(false, fmt::format("exception: {}", e.what()));
    }
    const auto known = kUnattainable.find(id);
    fmt::print("criterion {:2}: {} {}\n", id, out.passed ? "PASS" : "FAIL", criteria[i].first);
    for (const auto& l : out.lines) fmt::print("{}\n", l);
    if (known != kUnattainable.end()) {
      fmt::print("    [known] {}\n", known->second);
      if (out.passed) {
        fmt::print("    [known] listed as unattainable but passed; the list is stale\n");
        ++unexpected;
      }
    } else if (!out.passed) {
      ++unexpected;
    }
  }
  fmt::print("{} unexpected result(s)\n", unexpected);
  return unexpected == 0 ? 0 : 1;
}
