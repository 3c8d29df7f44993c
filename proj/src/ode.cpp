#include "solvflow/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace solvflow::ode {

namespace {

// Dormand & Prince (1980) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - 0.75 * kBeta;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 5.0;

}  // namespace

DormandPrince::DormandPrince(Rhs f, Options opts) : f_(std::move(f)), opts_(opts), h_(opts.init_step) {
  if (!(opts_.rel_tol > 0 && opts_.rel_tol < 1 && opts_.abs_tol > 0 && opts_.abs_tol < 1)) {
    throw std::invalid_argument("DormandPrince: tolerances must lie in (0, 1)");
  }
  if (!(opts_.init_step > 0) || !(opts_.max_step > 0)) {
    throw std::invalid_argument("DormandPrince: step sizes must be positive");
  }
  h_ = std::min(h_, opts_.max_step);
}

double DormandPrince::error_ratio(const State& err, const State& y, const State& y_new) const {
  auto block_ratio = [&](Eigen::Index start, Eigen::Index len) {
    const double sc = std::max(opts_.abs_tol, opts_.rel_tol * std::max(y.segment(start, len).norm(),
                                                                        y_new.segment(start, len).norm()));
    return err.segment(start, len).norm() / sc;
  };
  if (opts_.blocks.empty()) return block_ratio(0, err.size());
  double worst = 0.0;
  Eigen::Index start = 0;
  for (const auto len : opts_.blocks) {
    worst = std::max(worst, block_ratio(start, len));
    start += len;
  }
  if (start != err.size()) throw std::logic_error("DormandPrince: blocks do not cover the state");
  return worst;
}

Status DormandPrince::advance(double& t, State& y, double t_target, const AcceptHook& hook) {
  bool just_rejected = false;
  while (t < t_target) {
    const double scale_t = std::max(1.0, std::abs(t));
    if (h_ < opts_.min_step_ratio * scale_t) return Status::StepFailure;

    const double remaining = t_target - t;
    const bool clipped = h_ >= remaining;
    const double h = clipped ? remaining : h_;

    const State k1 = f_(t, y);
    const State k2 = f_(t + c2 * h, y + h * (a21 * k1));
    const State k3 = f_(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const State k4 = f_(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const State k5 = f_(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const State k6 =
        f_(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    State y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = f_(t + h, y_new);
    evals_ += 7;

    const State err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = error_ratio(err_vec, y, y_new);
    if (!std::isfinite(err) || !y_new.allFinite()) err = std::numeric_limits<double>::infinity();

    if (err > 1.0) {
      ++rejected_;
      const double fac =
          std::isfinite(err) ? std::max(kFacMin, kSafety * std::pow(err, -kAlpha)) : kFacMin;
      h_ = h * fac;
      just_rejected = true;
      continue;
    }

    StepVerdict verdict = StepVerdict::Accept;
    if (hook) verdict = hook(t + h, y_new);
    if (verdict == StepVerdict::Reject) {
      ++rejected_;
      h_ = 0.5 * h;
      just_rejected = true;
      continue;
    }

    ++accepted_;
    const double e = std::max(err, 1e-10);
    double fac = kSafety * std::pow(e, -kAlpha) * std::pow(err_prev_, kBeta);
    fac = std::clamp(fac, kFacMin, kFacMax);
    if (just_rejected) fac = std::min(fac, 1.0);
    err_prev_ = e;
    just_rejected = false;

    const double h_next = std::min(h * fac, opts_.max_step);
    // A clipped step says nothing about how large the controller would go,
    // so keep the larger of the old proposal and the new one.
    h_ = clipped ? std::min(std::max(h_next, h_), opts_.max_step) : h_next;

    t = clipped ? t_target : t + h;
    y = std::move(y_new);
    if (verdict == StepVerdict::Stop) return Status::Stopped;
  }
  return Status::Reached;
}

}  // namespace solvflow::ode
