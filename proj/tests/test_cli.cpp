#include <cmath>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "catch_amalgamated.hpp"
#include "solvflow/casebook.hpp"
#include "solvflow/io.hpp"

namespace fs = std::filesystem;
using solvflow::io::Json;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Sandbox {
 public:
  Sandbox() {
    static int counter = 0;
    root_ = fs::temp_directory_path() / fmt::format("solvflow-cli-{}-{}", ::getpid(), counter++);
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  ~Sandbox() { fs::remove_all(root_); }

  fs::path path(const std::string& name) const { return root_ / name; }

  fs::path config(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  RunResult run(const std::string& args, const std::string& env = "") const {
    const fs::path out = path("stdout.txt");
    const fs::path err = path("stderr.txt");
    const std::string cmd =
        fmt::format("{} {} {} > {} 2> {}", env, SOLVFLOW_BINARY, args, out.string(), err.string());
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

 private:
  fs::path root_;
};

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("simulate diag(1,-1) matches the closed form") {
  Sandbox box;
  const auto cfg = box.config("c.json", R"({"flow": {"A0": [[1, 0], [0, -1]], "t_end": 10}})");
  const RunResult r = box.run(fmt::format("simulate --config {} --out {}", cfg.string(), box.path("o").string()));
  REQUIRE(r.code == 0);
  const auto rows = read_csv(box.path("o/trajectory.csv"));
  REQUIRE(rows.size() == 101);
  double worst = 0;
  for (const auto& row : rows) {
    const double x = 1 / std::sqrt(4 * row[0] + 1);
    worst = std::max({worst, std::abs(row[1] - x) / x, std::abs(row[4] + x) / x});
  }
  CHECK(worst < 1e-6);
  const Json monitor = Json::parse(slurp(box.path("o/monitor.json")));
  CHECK(monitor["violations"].empty());
  CHECK(monitor["type3"].is_object());
  CHECK(fs::exists(box.path("o/run.log")));
}

TEST_CASE("simulate a skew matrix: constant trajectory") {
  Sandbox box;
  const auto cfg = box.config("c.json", R"({"matrix": [[0, 2], [-2, 0]], "flow": {"t_end": 3}})");
  const RunResult r = box.run(fmt::format("simulate --config {} --out {}", cfg.string(), box.path("o").string()));
  REQUIRE(r.code == 0);
  for (const auto& row : read_csv(box.path("o/trajectory.csv"))) {
    CHECK(row[1] == 0.0);
    CHECK(row[2] == 2.0);
    CHECK(row[3] == -2.0);
  }
}

TEST_CASE("malformed config exits 2, names the key, writes nothing") {
  Sandbox box;
  const auto cfg = box.config("c.json", R"({"flow": {"A0": [[1, 0], [0, -1]], "t_ned": 10}})");
  const RunResult r = box.run(fmt::format("simulate --config {} --out {}", cfg.string(), box.path("o").string()));
  CHECK(r.code == 2);
  CHECK(r.err.find("flow.t_ned") != std::string::npos);
  CHECK_FALSE(fs::exists(box.path("o")));

  const auto bad_json = box.config("d.json", R"({"flow": )");
  CHECK(box.run(fmt::format("simulate --config {} --out {}", bad_json.string(), box.path("o").string())).code == 2);
  const auto top = box.config("e.json", R"({"matrx": [[1]]})");
  const RunResult t = box.run(fmt::format("classify --config {} --out {}", top.string(), box.path("o").string()));
  CHECK(t.code == 2);
  CHECK(t.err.find("matrx") != std::string::npos);
  CHECK(box.run(fmt::format("frobnicate --config {}", top.string())).code == 2);
  CHECK_FALSE(fs::exists(box.path("o")));
}

TEST_CASE("existing outputs are kept unless --force") {
  Sandbox box;
  const auto cfg = box.config("c.json", R"({"flow": {"A0": [[1, 0], [0, 2]], "t_end": 1}})");
  const std::string args = fmt::format("simulate --config {} --out {}", cfg.string(), box.path("o").string());
  REQUIRE(box.run(args).code == 0);
  std::ofstream(box.path("o/trajectory.csv")) << "sentinel";
  const RunResult again = box.run(args);
  CHECK(again.code == 2);
  CHECK(again.err.find("--force") != std::string::npos);
  CHECK(slurp(box.path("o/trajectory.csv")) == "sentinel");
  CHECK(box.run(args + " --force").code == 0);
  CHECK(slurp(box.path("o/trajectory.csv")) != "sentinel");
}

TEST_CASE("flags override the config") {
  Sandbox box;
  const auto cfg = box.config("c.json", R"({"flow": {"A0": [[1, 0], [0, 2]], "t_end": 1}, "output_dir": "unused"})");
  const RunResult r =
      box.run(fmt::format("simulate --config {} --t-end 2 --out {}", cfg.string(), box.path("o").string()));
  REQUIRE(r.code == 0);
  CHECK(read_csv(box.path("o/trajectory.csv")).back()[0] == 2.0);
  CHECK_FALSE(fs::exists(box.path("unused")));
}

TEST_CASE("identical runs give byte-identical files") {
  Sandbox box;
  const auto sim = box.config("s.json", R"({"flow": {"A0": [[0.3, 1, 0], [0, -1, 2], [1, 0, 0.5]], "t_end": 5}})");
  REQUIRE(box.run(fmt::format("simulate --config {} --out {}", sim.string(), box.path("a").string())).code == 0);
  REQUIRE(box.run(fmt::format("simulate --config {} --out {}", sim.string(), box.path("b").string())).code == 0);
  for (const char* f : {"trajectory.csv", "diagnostics.jsonl", "monitor.json"}) {
    CHECK(slurp(box.path("a") / f) == slurp(box.path("b") / f));
  }
  const auto val = box.config("v.json", R"({"validate": {"scale": 0.05}})");
  REQUIRE(box.run(fmt::format("validate --config {} --seed 7 --out {}", val.string(), box.path("va").string()))
              .code == 0);
  REQUIRE(box.run(fmt::format("validate --config {} --seed 7 --out {}", val.string(), box.path("vb").string()),
                  "SOLVFLOW_THREADS=1")
              .code == 0);
  CHECK(slurp(box.path("va/validate.json")) == slurp(box.path("vb/validate.json")));
}

TEST_CASE("classify reports soliton verdicts") {
  Sandbox box;
  const auto e12 = box.config("e.json", R"({"matrix": [[0, 1], [0, 0]]})");
  RunResult r = box.run(fmt::format("classify --config {} --out {}", e12.string(), box.path("o1").string()));
  REQUIRE(r.code == 0);
  Json j = Json::parse(r.out);
  CHECK(j["verdict"]["label"] == "NilpotentSoliton");
  CHECK(j["verdict"]["c"].get<double>() == Catch::Approx(-2.0).margin(1e-12));
  CHECK(slurp(box.path("o1/classify.json")) == r.out);

  const auto id = box.config("i.json", R"({"matrix": [[1, 0], [0, 1]]})");
  r = box.run(fmt::format("classify --config {} --out {}", id.string(), box.path("o2").string()));
  REQUIRE(r.code == 0);
  j = Json::parse(r.out);
  CHECK(j["verdict"]["label"] == "NormalSoliton");
  CHECK(j["curvature"]["heintze"]["negative"] == true);

  const double lambda = 0.2;
  const Json alg = solvflow::io::to_json(solvflow::ejsol_algebra(lambda, solvflow::ejsol_soliton_alpha(lambda)));
  const auto algfile = box.config("alg.json", alg.dump());
  const auto ac = box.config("a.json", fmt::format(R"({{"input": "{}"}})", algfile.string()));
  r = box.run(fmt::format("classify --config {} --out {}", ac.string(), box.path("o3").string()));
  REQUIRE(r.code == 0);
  j = Json::parse(r.out);
  CHECK(j["input"] == "algebra");
  CHECK(j["verdict"]["label"] == "NormalSoliton");

  const auto zero = box.config("z.json", R"({"matrix": [[0, 0], [0, 0]]})");
  CHECK(box.run(fmt::format("classify --config {} --out {}", zero.string(), box.path("o4").string())).code == 2);
}

TEST_CASE("phase-plane, ejsol and curvature commands emit their files") {
  Sandbox box;
  const auto pp = box.config("p.json", R"({"phase_plane": {"grid": 5}})");
  REQUIRE(box.run(fmt::format("phase-plane --config {} --out {}", pp.string(), box.path("pp").string())).code == 0);
  CHECK(fs::exists(box.path("pp/atlas.csv")));
  CHECK(fs::exists(box.path("pp/atlas.gp")));
  CHECK(fs::exists(box.path("pp/traj_00024.csv")));
  CHECK_FALSE(fs::exists(box.path("pp/traj_00025.csv")));

  const auto ej = box.config("j.json", R"({"ejsol": {"lambda": 0.1, "alpha0": 2.0, "t_end": 10}})");
  const RunResult r = box.run(fmt::format("ejsol --config {} --out {}", ej.string(), box.path("ej").string()));
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["crossing_time"].get<double>() > 0);
  CHECK(read_csv(box.path("ej/ejsol.csv")).back()[0] == 10.0);

  const auto cv = box.config("k.json", R"({"matrix": [[1, 3], [0, 2]], "curvature": {"planes": 50, "watch_t_end": 5}})");
  const RunResult c = box.run(fmt::format("curvature --config {} --out {}", cv.string(), box.path("cv").string()));
  REQUIRE(c.code == 0);
  CHECK(Json::parse(c.out)["watch"].is_object());
}

TEST_CASE("bad SOLVFLOW_THREADS is a config error") {
  Sandbox box;
  const auto cfg = box.config("v.json", R"({"validate": {"scale": 0.05}})");
  CHECK(box.run(fmt::format("validate --config {} --out {}", cfg.string(), box.path("o").string()),
                "SOLVFLOW_THREADS=abc")
            .code == 2);
}
