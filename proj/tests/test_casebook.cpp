#include <cmath>

#include "catch_amalgamated.hpp"
#include "solvflow/casebook.hpp"

using namespace solvflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("antidiagonal right-hand side on hand points") {
  // (x, y) = (1, 1): x' = 1 * 2 * (-1) = -2.
  const Phase2DPoint a = phase2d_rhs({1, 1});
  CHECK(a.x == -2.0);
  CHECK(a.y == -2.0);
  // On y = -x everything is fixed.
  const Phase2DPoint b = phase2d_rhs({0.7, -0.7});
  CHECK(b.x == 0.0);
  CHECK(b.y == 0.0);
  // On the axis y = 0: x' = -3/2 x^3.
  CHECK(phase2d_rhs({2, 0}).x == -12.0);
  CHECK(phase2d_embed({3, -4}) == Mat::from_rows({{0, 3}, {-4, 0}}));
}

TEST_CASE("grid is symmetric and hits the special lines exactly") {
  const auto grid = phase2d_grid(41, -2, 2);
  REQUIRE(grid.size() == 41 * 41);
  CHECK(grid.front().x == -2.0);
  CHECK(grid.front().y == -2.0);
  CHECK(grid[1].x > grid[0].x);
  CHECK(grid[41].y > grid[0].y);
  std::size_t on_line = 0;
  std::size_t on_axis = 0;
  for (const auto& p : grid) {
    if (p.x + p.y == 0.0) ++on_line;
    if (p.x == 0.0 || p.y == 0.0) ++on_axis;
  }
  CHECK(on_line == 41);
  CHECK(on_axis == 81);
}

TEST_CASE("small sweep classifies every kind of start") {
  const std::vector<Phase2DPoint> starts = {{1, -1}, {1, 0.5}, {0, 1}, {1, 1}, {-1, -0.5}, {2, -0.5}};
  const auto res = phase2d_sweep(starts);
  REQUIRE(res.size() == starts.size());
  CHECK(res[0].cls == PhaseClass::FixedLine);
  CHECK(res[0].limit.x == 1.0);
  CHECK(res[1].cls == PhaseClass::OriginDiagonal);
  CHECK(res[2].cls == PhaseClass::OriginAxis);
  CHECK(res[3].cls == PhaseClass::OriginDiagonal);
  CHECK(res[4].cls == PhaseClass::OriginDiagonal);
  CHECK(res[5].cls == PhaseClass::SkewLimit);
  for (const auto& r : res) {
    CHECK(std::abs(r.limit.x + r.limit.y) <= 1e-5);
    CHECK(r.index < starts.size());
  }
  // x - y is conserved up to the factor exp(-3/2 int (x+y)^2), so x - y keeps
  // its sign and the skew limit of (2, -0.5) has x_inf in (0, 2).
  CHECK(res[5].limit.x > 0);
  CHECK(res[5].limit.x < 2);
  REQUIRE(res[1].diagonal_distance);
  CHECK(*res[1].diagonal_distance < 1e-4);
}

TEST_CASE("sweep output does not depend on the thread count") {
  const auto grid = phase2d_grid(7, -1.5, 1.5);
  PhaseSweepOptions one;
  one.threads = 1;
  PhaseSweepOptions three;
  three.threads = 3;
  const auto a = phase2d_sweep(grid, one);
  const auto b = phase2d_sweep(grid, three);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].cls == b[i].cls);
    CHECK(a[i].limit.x == b[i].limit.x);
    CHECK(a[i].samples.size() == b[i].samples.size());
  }
}

TEST_CASE("4-d family constants") {
  CHECK_THAT(ejsol_c(0.5), WithinAbs(1.5, 1e-15));
  CHECK_THAT(ejsol_soliton_alpha(0.5), WithinAbs(1.0, 1e-15));
  const MetricLieAlgebra g = ejsol_algebra(0.25, 2.0, 3.0);
  CHECK(g.c(0, 1, 1) == 0.5);
  CHECK(g.c(0, 2, 2) == 1.5);
  CHECK(g.c(0, 3, 3) == 2.0);
  CHECK(g.c(1, 2, 3) == 3.0);
  CHECK(g.c(2, 1, 3) == -3.0);
}

TEST_CASE("exact solution of the 4-d family solves its ODE") {
  const EjsolState s0{0.3, 0.8, 0.8, 1.0, 0.0};
  const double c = ejsol_c(0.3);
  const double h = 1e-5;
  for (double t : {0.5, 1.0, 10.0}) {
    const EjsolState a = ejsol_exact(s0, t);
    const EjsolState up = ejsol_exact(s0, t + h);
    const EjsolState dn = ejsol_exact(s0, t - h);
    const double span = up.t - dn.t;
    CHECK_THAT((up.alpha - dn.alpha) / span, WithinRel(-c * std::pow(a.alpha, 3), 1e-6));
    CHECK_THAT((up.h - dn.h) / span, WithinRel(-1.5 * std::pow(a.h, 3), 1e-6));
  }
  const auto numeric = ejsol_integrate(0.3, 0.8, 20.0);
  CHECK_THAT(numeric.back().t, WithinAbs(20.0, 1e-12));
  for (const auto& s : numeric) CHECK_THAT(s.alpha, WithinAbs(ejsol_exact(s0, s.t).alpha, 1e-9));
}

TEST_CASE("K(e1, e3) at the soliton alpha") {
  // h = 1 and alpha^2 = 3 / (2c): K = 1/4 - 3 lambda / (2c).
  for (double lambda : {0.1, 0.2, 0.5, 1.0, 3.8}) {
    const double c = ejsol_c(lambda);
    CHECK_THAT(ejsol_k13(lambda, ejsol_soliton_alpha(lambda), 1.0), WithinAbs(0.25 - 1.5 * lambda / c, 1e-14));
  }
  // Sign changes exactly at 2 -+ sqrt(3), where lambda^2 - 4 lambda + 1 = 0.
  const double lo = 2 - std::sqrt(3.0);
  const double hi = 2 + std::sqrt(3.0);
  CHECK_THAT(ejsol_k13(lo, ejsol_soliton_alpha(lo), 1.0), WithinAbs(0.0, 1e-14));
  CHECK_THAT(ejsol_k13(hi, ejsol_soliton_alpha(hi), 1.0), WithinAbs(0.0, 1e-14));
  CHECK(ejsol_k13(0.1, ejsol_soliton_alpha(0.1), 1.0) > 0);
  CHECK(ejsol_k13(1.0, ejsol_soliton_alpha(1.0), 1.0) < 0);
  CHECK(ejsol_k13(3.8, ejsol_soliton_alpha(3.8), 1.0) > 0);
}

TEST_CASE("curvature crossing time") {
  const double lambda = 0.1;
  // Start with lambda alpha0^2 > 1/4 so that K(e1, e3) < 0 at t = 0.
  const double alpha0 = 2.0;
  const auto t0 = ejsol_curvature_crossing(lambda, alpha0);
  REQUIRE(t0);
  const double expected = (4 * lambda - 1 / (alpha0 * alpha0)) / (2 * ejsol_c(lambda) - 12 * lambda);
  CHECK_THAT(*t0, WithinRel(expected, 1e-14));
  const EjsolState s0{lambda, alpha0, alpha0, 1.0, 0.0};
  const EjsolState before = ejsol_exact(s0, *t0 * (1 - 1e-6));
  const EjsolState after = ejsol_exact(s0, *t0 * (1 + 1e-6));
  CHECK(ejsol_k13(lambda, before.alpha, before.h) < 0);
  CHECK(ejsol_k13(lambda, after.alpha, after.h) > 0);

  CHECK(*ejsol_curvature_crossing(0.1, ejsol_soliton_alpha(0.1)) == 0.0);
  CHECK_THROWS_AS(ejsol_curvature_crossing(0.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(ejsol_curvature_crossing(0.1, -1.0), std::domain_error);
}

TEST_CASE("curvature watch on a Heintze-negative start") {
  const Mat a0 = Mat::from_rows({{1, 4}, {0, 1.5}});
  const CurvatureWatchReport r = curvature_watch(a0, 20.0, 0.5, 1, 200);
  REQUIRE(r.first_negative_time);
  CHECK(r.persistent);
  CHECK(r.sampler_agrees);
  REQUIRE(r.sampled_max_end);
  CHECK(*r.sampled_max_end < 0);
  CHECK_THROWS_AS(curvature_watch(Mat::diagonal({1, -1}), 1.0), std::domain_error);
}
