#include <cmath>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "solvflow/io.hpp"

using namespace solvflow;
using io::ConfigError;
using io::Json;

TEST_CASE("matrices round-trip through JSON") {
  const Mat a = Mat::from_rows({{0.1, -2.5e-17}, {3, 1.0 / 3.0}});
  const Mat b = io::mat_from_json(io::to_json(a));
  CHECK(a == b);
}

TEST_CASE("malformed matrices name the offending entry") {
  try {
    io::mat_from_json(Json::parse(R"([[1, 2], [3, "x"]])"), "flow.A0");
    FAIL("no exception");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "flow.A0[1][1]");
  }
  CHECK_THROWS_AS(io::mat_from_json(Json::parse("[[1, 2], [3]]")), ConfigError);
  CHECK_THROWS_AS(io::mat_from_json(Json::parse("[]")), ConfigError);
}

TEST_CASE("structure constants round-trip") {
  const MetricLieAlgebra g = MetricLieAlgebra::from_entries(3, {{0, 1, 2, 1.5}});
  const Json j = io::to_json(g);
  CHECK(j["dim"] == 3);
  const MetricLieAlgebra h = io::algebra_from_json(j);
  CHECK(h.constants() == g.constants());
  CHECK_THROWS_AS(io::algebra_from_json(Json::parse(R"({"dim": 3, "constants": [], "extra": 1})")), ConfigError);
}

TEST_CASE("flow spec parser is strict") {
  const FlowSpec s = io::flowspec_from_json(
      Json::parse(R"({"kind": "normalized", "A0": [[1, 0], [0, 2]], "t_end": 4, "samples_per_decade": 3})"));
  CHECK(s.kind == FlowKind::Normalized);
  CHECK(s.t_end == 4.0);
  REQUIRE(s.samples_per_decade);
  CHECK(*s.samples_per_decade == 3.0);
  try {
    io::flowspec_from_json(Json::parse(R"({"A0": [[1]], "t_edn": 4})"));
    FAIL("no exception");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "flow.t_edn");
    CHECK(std::string(e.what()).find("t_edn") != std::string::npos);
  }
  CHECK_THROWS_AS(io::flowspec_from_json(Json::parse(R"({"t_end": 4})")), ConfigError);
  CHECK_THROWS_AS(io::flowspec_from_json(Json::parse(R"({"A0": [[1]], "kind": "ricci"})")), ConfigError);
  const FlowSpec back = io::flowspec_from_json(io::to_json(s));
  CHECK(back.A0 == s.A0);
  CHECK(back.t_end == s.t_end);
}

TEST_CASE("doubles are written with 17 significant digits") {
  CHECK(io::format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("trajectory CSV layout") {
  FlowSpec s;
  s.A0 = Mat::diagonal({1, -1});
  s.t_end = 0.2;
  const std::string csv = io::trajectory_csv(integrate(s));
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,a11,a12,a21,a22,norm_sq,tr_A,tr_A2,tr_S2,F,rhs_norm");
  CHECK(csv.find('\r') == std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 3);
  CHECK(csv.substr(header.size() + 1, 10) == "0,1,0,0,-1");
}

TEST_CASE("diagnostics JSONL has one object per sample") {
  FlowSpec s;
  s.A0 = Mat::identity(2);
  s.t_end = 0.3;
  const std::string text = io::diagnostics_jsonl(integrate(s));
  std::istringstream in(text);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line); ++lines) {
    const Json j = Json::parse(line);
    CHECK(j.contains("t"));
    CHECK(j.contains("norm_sq"));
  }
  CHECK(lines == 4);
}

TEST_CASE("atlas outputs") {
  const auto res = phase2d_sweep({{1, -1}, {0, 1}});
  const std::string atlas = io::atlas_csv(res);
  CHECK(atlas.rfind("x0,y0,class,x_inf,y_inf,t_stationary\n", 0) == 0);
  CHECK(atlas.find("fixed_line") != std::string::npos);
  CHECK(atlas.find("origin_axis") != std::string::npos);
  CHECK(io::phase_trajectory_name(7) == "traj_00007.csv");
  const std::string gp = io::atlas_gnuplot(res);
  CHECK(gp.find("traj_%05d.csv") != std::string::npos);
  CHECK(io::phase_trajectory_csv(res[1]).rfind("t,x,y\n", 0) == 0);
}

TEST_CASE("4-d family CSV carries the exact solution") {
  const std::string csv = io::ejsol_csv(ejsol_integrate(0.1, 1.0, 1.0));
  CHECK(csv.rfind("t,alpha,h,alpha_exact,h_exact,K13,K13_tensor\n", 0) == 0);
}
