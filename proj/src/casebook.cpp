#include "solvflow/casebook.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "solvflow/ode.hpp"

namespace solvflow {

using Eigen::VectorXd;

Phase2DPoint phase2d_rhs(Phase2DPoint p) {
  const double s = p.x + p.y;
  return {p.x * s * (-1.5 * p.x + 0.5 * p.y), p.y * s * (-1.5 * p.y + 0.5 * p.x)};
}

Mat phase2d_embed(Phase2DPoint p) { return Mat::from_rows({{0.0, p.x}, {p.y, 0.0}}); }

std::string to_string(PhaseClass c) {
  switch (c) {
    case PhaseClass::FixedLine: return "fixed_line";
    case PhaseClass::SkewLimit: return "skew_limit";
    case PhaseClass::OriginDiagonal: return "origin_diagonal";
    case PhaseClass::OriginAxis: return "origin_axis";
    case PhaseClass::StepFailure: return "step_failure";
    case PhaseClass::Unresolved: return "unresolved";
  }
  return "?";
}

std::vector<Phase2DPoint> phase2d_grid(std::size_t n, double lo, double hi) {
  if (n < 2) throw std::invalid_argument("phase2d_grid: need at least 2 points per side");
  std::vector<Phase2DPoint> grid;
  grid.reserve(n * n);
  const auto last = static_cast<double>(n - 1);
  // Weighted form so that for lo = -hi the coordinates i and n-1-i are exact
  // negatives; the lines x = 0 and y = -x are then hit without rounding.
  auto coord = [&](std::size_t i) {
    const auto k = static_cast<double>(i);
    return (lo * (last - k) + hi * k) / last;
  };
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) grid.push_back({coord(i), coord(j)});
  return grid;
}

namespace {

double line_distance(double x, double y) { return std::abs(x + y) / std::sqrt(2.0); }

double diagonal_distance(double x, double y) {
  const double r = std::hypot(x, y);
  const double bx = x / r;
  const double by = y / r;
  const double d = 1.0 / std::sqrt(2.0);
  return std::min(std::hypot(bx - d, by - d), std::hypot(bx + d, by + d));
}

PhaseResult integrate_point(std::size_t index, Phase2DPoint p0, const PhaseSweepOptions& opts) {
  PhaseResult res;
  res.index = index;
  res.start = p0;
  res.samples.push_back({0.0, p0.x, p0.y});
  const double r0 = std::hypot(p0.x, p0.y);

  if (p0.x + p0.y == 0.0) {
    res.cls = PhaseClass::FixedLine;
    res.limit = p0;
    return res;
  }

  ode::Options o;
  o.rel_tol = opts.rel_tol;
  o.abs_tol = opts.abs_tol;
  o.init_step = 1e-4;
  ode::DormandPrince stepper(
      [](double, const VectorXd& y) {
        const auto d = phase2d_rhs({y(0), y(1)});
        return VectorXd((VectorXd(2) << d.x, d.y).finished());
      },
      o);
  ode::AcceptHook hook = [&](double, VectorXd& y) {
    return line_distance(y(0), y(1)) <= opts.stop_distance ? ode::StepVerdict::Stop : ode::StepVerdict::Accept;
  };

  VectorXd y(2);
  y << p0.x, p0.y;
  double t = 0.0;
  ode::Status status = ode::Status::Reached;
  for (std::size_t k = 0; t < opts.t_end; ++k) {
    const double target =
        std::min(opts.t_end, opts.first_sample * std::pow(10.0, static_cast<double>(k) / opts.samples_per_decade));
    if (target <= t) continue;
    status = stepper.advance(t, y, target, hook);
    res.samples.push_back({t, y(0), y(1)});
    if (status != ode::Status::Reached) break;
  }

  res.limit = {y(0), y(1)};
  res.t_stationary = t;
  if (std::hypot(y(0), y(1)) > 0) res.diagonal_distance = diagonal_distance(y(0), y(1));

  if (status == ode::Status::StepFailure) {
    res.cls = PhaseClass::StepFailure;
  } else if (status != ode::Status::Stopped) {
    res.cls = PhaseClass::Unresolved;
  } else if (std::hypot(y(0), y(1)) > 1e-5 * std::max(1.0, r0)) {
    res.cls = PhaseClass::SkewLimit;
  } else if (p0.x == 0.0 || p0.y == 0.0) {
    res.cls = PhaseClass::OriginAxis;
  } else {
    res.cls = PhaseClass::OriginDiagonal;
  }
  return res;
}

}  // namespace

std::vector<PhaseResult> phase2d_sweep(const std::vector<Phase2DPoint>& grid, const PhaseSweepOptions& opts) {
  if (grid.empty()) throw std::invalid_argument("phase2d_sweep: empty grid");
  if (!(opts.t_end > 0) || !(opts.stop_distance > 0) || !(opts.samples_per_decade > 0) || !(opts.first_sample > 0)) {
    throw std::invalid_argument("phase2d_sweep: invalid options");
  }
  std::vector<PhaseResult> results(grid.size());
  unsigned workers = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, grid.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) results[i] = integrate_point(i, grid[i], opts);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return results;
}

double ejsol_c(double lambda) { return lambda * lambda + (1.0 - lambda) * (1.0 - lambda) + 1.0; }

double ejsol_soliton_alpha(double lambda) { return std::sqrt(3.0 / (2.0 * ejsol_c(lambda))); }

MetricLieAlgebra ejsol_algebra(double lambda, double alpha, double h) {
  return MetricLieAlgebra::from_entries(4, {{0, 1, 1, alpha * lambda},
                                            {0, 2, 2, alpha * (1.0 - lambda)},
                                            {0, 3, 3, alpha},
                                            {1, 2, 3, h}});
}

EjsolState ejsol_exact(const EjsolState& s, double t) {
  if (!(s.alpha0 > 0)) throw std::domain_error("ejsol_exact: alpha0 must be positive");
  if (t < 0) throw std::domain_error("ejsol_exact: t must be non-negative");
  EjsolState out = s;
  out.t = t;
  out.alpha = 1.0 / std::sqrt(2.0 * ejsol_c(s.lambda) * t + 1.0 / (s.alpha0 * s.alpha0));
  out.h = 1.0 / std::sqrt(3.0 * t + 1.0);
  return out;
}

std::vector<EjsolState> ejsol_integrate(double lambda, double alpha0, double t_end, double stride, double rel_tol,
                                        double abs_tol) {
  if (!(alpha0 > 0) || !(t_end > 0) || !(stride > 0)) {
    throw std::invalid_argument("ejsol_integrate: alpha0, t_end and stride must be positive");
  }
  const double c = ejsol_c(lambda);
  ode::Options o;
  o.rel_tol = rel_tol;
  o.abs_tol = abs_tol;
  ode::DormandPrince stepper(
      [c](double, const VectorXd& y) {
        VectorXd d(2);
        d << -c * y(0) * y(0) * y(0), -1.5 * y(1) * y(1) * y(1);
        return d;
      },
      o);
  VectorXd y(2);
  y << alpha0, 1.0;
  double t = 0.0;
  std::vector<EjsolState> out{{lambda, alpha0, alpha0, 1.0, 0.0}};
  for (std::size_t k = 1; t < t_end; ++k) {
    const double target = std::min(t_end, stride * static_cast<double>(k));
    if (stepper.advance(t, y, target) != ode::Status::Reached) {
      throw ConvergenceError(fmt::format("ejsol_integrate: step failure at t = {}", t));
    }
    out.push_back({lambda, alpha0, y(0), y(1), t});
  }
  return out;
}

double ejsol_k13(double lambda, double alpha, double h) { return h * h / 4.0 - lambda * alpha * alpha; }

std::optional<double> ejsol_curvature_crossing(double lambda, double alpha0) {
  const double upper = 2.0 - std::sqrt(3.0);
  if (!(lambda > 0 && lambda <= upper)) {
    throw std::domain_error(
        fmt::format("ejsol_curvature_crossing: lambda = {} outside (0, 2 - sqrt(3)]",
                    lambda));
  }
  if (!(alpha0 > 0)) throw std::domain_error("ejsol_curvature_crossing: alpha0 must be positive");
  const double slope = 2.0 * ejsol_c(lambda) - 12.0 * lambda;
  const double offset = 4.0 * lambda - 1.0 / (alpha0 * alpha0);
  if (offset <= 0) return 0.0;
  if (slope <= 0) return std::nullopt;
  return offset / slope;
}

CurvatureWatchReport curvature_watch(const Mat& a0, double t_end, double stride, std::uint64_t seed,
                                     std::size_t planes) {
  if (!admits_negative_curvature(a0)) {
    throw std::domain_error("curvature_watch: A0 has eigenvalues with real parts of both signs or is singular");
  }
  FlowSpec spec;
  spec.kind = FlowKind::Bracket;
  spec.A0 = a0;
  spec.t_end = t_end;
  spec.sample_stride = stride;
  const Trajectory traj = integrate(spec);

  CurvatureWatchReport rep;
  rep.terminal = traj.terminal;
  rep.samples = traj.samples.size();
  std::optional<std::size_t> first;
  bool persistent = true;
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const bool neg = heintze_check(traj.samples[k].A).negative;
    if (neg && !first) first = k;
    if (first && !neg) persistent = false;
  }
  if (!first) return rep;
  rep.first_negative_time = traj.samples[*first].t;
  rep.persistent = persistent;
  auto sampled_max = [&](const Mat& a) { return sample_sectional(RiemannTensor(mu_of_A(a)), seed, planes).max; };
  rep.sampled_max_first = sampled_max(traj.samples[*first].A);
  rep.sampled_max_end = sampled_max(traj.back().A);
  rep.sampler_agrees = *rep.sampled_max_first < 0 && (!persistent || *rep.sampled_max_end < 0);
  return rep;
}

}  // namespace solvflow
