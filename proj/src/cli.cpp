#include "solvflow/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "CLI11.hpp"
#include "solvflow/soliton.hpp"
#include "solvflow/validate.hpp"

namespace solvflow::cli {

namespace fs = std::filesystem;
using io::ConfigError;
using io::Json;

namespace {

const Json* find(const Json& j, const char* key) { return j.contains(key) ? &j.at(key) : nullptr; }

double positive(const Json& j, const char* key, const std::string& path) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!(x > 0) || !std::isfinite(x)) throw ConfigError(path, "expected a positive finite number");
  return x;
}

double number(const Json& j, const char* key, const std::string& path) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

std::uint64_t unsigned_int(const Json& j, const char* key, const std::string& path) {
  const Json& v = j.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(path, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

Json read_json_file(const fs::path& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw ConfigError(key, fmt::format("cannot open '{}'", path.string()));
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(key, fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

void check_flow_spec(const FlowSpec& s) {
  auto need = [](bool ok, const char* key, const char* msg) {
    if (!ok) throw ConfigError(std::string("flow.") + key, msg);
  };
  need(s.t_end > 0 && std::isfinite(s.t_end), "t_end", "expected a positive finite number");
  need(s.rel_tol > 0, "rel_tol", "expected a positive number");
  need(s.abs_tol > 0, "abs_tol", "expected a positive number");
  need(s.max_step > 0, "max_step", "expected a positive number");
  need(s.init_step > 0, "init_step", "expected a positive number");
  need(s.sample_stride > 0, "sample_stride", "expected a positive number");
  need(!s.stop_when_stationary || *s.stop_when_stationary > 0, "stop_when_stationary", "expected a positive number");
  need(!s.samples_per_decade || *s.samples_per_decade > 0, "samples_per_decade", "expected a positive number");
}

void parse_phase_plane(const Json& j, PhasePlaneConfig& pp) {
  const std::string p = "phase_plane";
  io::require_keys(j, {"grid", "lo", "hi", "t_end", "stop_distance", "samples_per_decade"}, p);
  if (find(j, "grid")) {
    pp.grid = unsigned_int(j, "grid", p + ".grid");
    if (pp.grid < 2) throw ConfigError(p + ".grid", "expected at least 2");
  }
  if (find(j, "lo")) pp.lo = number(j, "lo", p + ".lo");
  if (find(j, "hi")) pp.hi = number(j, "hi", p + ".hi");
  if (!(pp.lo < pp.hi)) throw ConfigError(p + ".hi", "expected lo < hi");
  if (find(j, "t_end")) pp.sweep.t_end = positive(j, "t_end", p + ".t_end");
  if (find(j, "stop_distance")) pp.sweep.stop_distance = positive(j, "stop_distance", p + ".stop_distance");
  if (find(j, "samples_per_decade")) {
    pp.sweep.samples_per_decade = positive(j, "samples_per_decade", p + ".samples_per_decade");
  }
}

void parse_ejsol(const Json& j, EjsolConfig& e) {
  const std::string p = "ejsol";
  io::require_keys(j, {"lambda", "alpha0", "t_end", "stride"}, p);
  if (find(j, "lambda")) e.lambda = number(j, "lambda", p + ".lambda");
  if (find(j, "alpha0")) e.alpha0 = positive(j, "alpha0", p + ".alpha0");
  if (find(j, "t_end")) e.t_end = positive(j, "t_end", p + ".t_end");
  if (find(j, "stride")) e.stride = positive(j, "stride", p + ".stride");
}

/// A matrix is a JSON array of rows; anything else must be an algebra.
void assign_input(RunConfig& cfg, const Json& j, const std::string& key) {
  if (j.is_array()) {
    cfg.matrix = io::mat_from_json(j, key);
  } else {
    cfg.algebra = io::algebra_from_json(j, key);
  }
}

std::string timestamp() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                   std::chrono::system_clock::now())));
}

/// Files a command will emit, checked before any work so that a refused
/// overwrite leaves the directory untouched.
class Outputs {
 public:
  Outputs(const RunConfig& cfg, std::vector<std::string> names) : cfg_(cfg), names_(std::move(names)) {
    if (cfg.force) return;
    for (const auto& n : names_) {
      const fs::path p = cfg.output_dir / n;
      if (fs::exists(p)) {
        throw ConfigError("output_dir", fmt::format("'{}' exists; pass --force to overwrite", p.string()));
      }
    }
  }

  void write(const std::string& name, const std::string& content) const {
    if (std::find(names_.begin(), names_.end(), name) == names_.end()) {
      throw std::logic_error("unplanned output file " + name);
    }
    fs::create_directories(cfg_.output_dir);
    const fs::path p = cfg_.output_dir / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << content;
    if (!f) throw std::runtime_error(fmt::format("failed writing '{}'", p.string()));
  }

 private:
  const RunConfig& cfg_;
  std::vector<std::string> names_;
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

const Mat& require_matrix(const RunConfig& cfg) {
  if (!cfg.matrix) throw ConfigError("input", fmt::format("{} needs a matrix input", cfg.command));
  return *cfg.matrix;
}

void append_log(const RunConfig& cfg, const std::string& line) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  std::ofstream log(cfg.output_dir / "run.log", std::ios::app);
  log << timestamp() << ' ' << line << '\n';
}

}  // namespace

unsigned threads_from_env() {
  const char* v = std::getenv("SOLVFLOW_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0' || n == 0 || n > 4096) {
    throw ConfigError("SOLVFLOW_THREADS", fmt::format("expected a positive integer, got '{}'", v));
  }
  return static_cast<unsigned>(n);
}

RunConfig parse_config(const std::string& command, const Json& j, const Overrides& ov, const fs::path& base_dir) {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    throw ConfigError("command", fmt::format("unknown command '{}'", command));
  }
  io::require_keys(j,
                   {"command", "input", "matrix", "algebra", "flow", "output_dir", "seed", "phase_plane", "ejsol",
                    "curvature", "classify", "validate"},
                   "");
  RunConfig cfg;
  cfg.command = command;

  if (const Json* c = find(j, "command")) {
    if (!c->is_string() || c->get<std::string>() != command) {
      throw ConfigError("command", fmt::format("config is for a different command than '{}'", command));
    }
  }

  int sources = 0;
  if (const Json* f = find(j, "flow")) {
    cfg.flow = io::flowspec_from_json(*f, "flow", false);
    if (f->contains("A0")) {
      cfg.matrix = cfg.flow.A0;
      ++sources;
    }
  }
  if (const Json* m = find(j, "matrix")) {
    cfg.matrix = io::mat_from_json(*m, "matrix");
    ++sources;
  }
  if (const Json* a = find(j, "algebra")) {
    cfg.algebra = io::algebra_from_json(*a, "algebra");
    ++sources;
  }
  if (const Json* in = find(j, "input")) {
    if (!in->is_string()) throw ConfigError("input", "expected a path string");
    fs::path p = in->get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    assign_input(cfg, read_json_file(p, "input"), "input");
    ++sources;
  }
  if (sources > 1) throw ConfigError("input", "give only one of input, matrix, algebra, flow.A0");

  if (const Json* o = find(j, "output_dir")) {
    if (!o->is_string() || o->get<std::string>().empty()) throw ConfigError("output_dir", "expected a path string");
    cfg.output_dir = o->get<std::string>();
  }
  if (find(j, "seed")) cfg.seed = unsigned_int(j, "seed", "seed");
  if (const Json* p = find(j, "phase_plane")) parse_phase_plane(*p, cfg.phase_plane);
  if (const Json* e = find(j, "ejsol")) parse_ejsol(*e, cfg.ejsol);
  if (const Json* c = find(j, "curvature")) {
    io::require_keys(*c, {"planes", "watch_t_end"}, "curvature");
    if (find(*c, "planes")) {
      cfg.planes = unsigned_int(*c, "planes", "curvature.planes");
      if (cfg.planes == 0) throw ConfigError("curvature.planes", "expected at least 1");
    }
    if (find(*c, "watch_t_end")) cfg.watch_t_end = positive(*c, "watch_t_end", "curvature.watch_t_end");
  }
  if (const Json* c = find(j, "classify")) {
    io::require_keys(*c, {"tol"}, "classify");
    if (find(*c, "tol")) cfg.classify_tol = positive(*c, "tol", "classify.tol");
  }
  if (const Json* v = find(j, "validate")) {
    io::require_keys(*v, {"scale"}, "validate");
    if (find(*v, "scale")) cfg.validate_scale = positive(*v, "scale", "validate.scale");
  }

  // Command-line values win over the file.
  if (ov.t_end) {
    if (!(*ov.t_end > 0) || !std::isfinite(*ov.t_end)) throw ConfigError("--t-end", "expected a positive number");
    cfg.flow.t_end = *ov.t_end;
    cfg.phase_plane.sweep.t_end = *ov.t_end;
    cfg.ejsol.t_end = *ov.t_end;
    cfg.watch_t_end = *ov.t_end;
  }
  if (ov.tol) {
    if (!(*ov.tol > 0)) throw ConfigError("--tol", "expected a positive number");
    cfg.flow.rel_tol = *ov.tol;
    cfg.classify_tol = *ov.tol;
    cfg.phase_plane.sweep.rel_tol = *ov.tol;
  }
  if (ov.out) cfg.output_dir = *ov.out;
  if (ov.seed) cfg.seed = *ov.seed;
  cfg.force = ov.force;
  cfg.threads = threads_from_env();

  check_flow_spec(cfg.flow);
  if (cfg.matrix) cfg.flow.A0 = *cfg.matrix;
  if (command == "simulate") require_matrix(cfg);
  if ((command == "classify" || command == "curvature") && !cfg.matrix && !cfg.algebra) {
    throw ConfigError("input", fmt::format("{} needs a matrix or structure-constant input", command));
  }
  return cfg;
}

RunConfig load_config(const std::string& command, const fs::path& path, const Overrides& ov) {
  const Json j = read_json_file(path, "--config");
  return parse_config(command, j, ov, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Outputs files(cfg, {"trajectory.csv", "diagnostics.jsonl", "monitor.json"});
  const Trajectory traj = integrate(cfg.flow);
  const auto violations = monitor_suite(traj);

  Json monitor;
  monitor["flow"] = io::to_json(cfg.flow);
  monitor["terminal"] = to_string(traj.terminal);
  monitor["t_final"] = traj.back().t;
  monitor["samples"] = traj.samples.size();
  monitor["accepted_steps"] = traj.accepted_steps;
  monitor["rejected_steps"] = traj.rejected_steps;
  monitor["violations"] = io::to_json(violations);
  monitor["type3"] = nullptr;
  if (cfg.flow.kind == FlowKind::Bracket) {
    try {
      monitor["type3"] = io::to_json(type3_monitor(traj));
    } catch (const std::domain_error& e) {
      monitor["type3_skipped"] = e.what();
    }
  }

  files.write("trajectory.csv", io::trajectory_csv(traj));
  files.write("diagnostics.jsonl", io::diagnostics_jsonl(traj));
  files.write("monitor.json", dump(monitor));

  out << fmt::format("{} flow: {} samples to t = {}, terminal {}, {} monitor violations\n", to_string(cfg.flow.kind),
                     traj.samples.size(), io::format_double(traj.back().t), to_string(traj.terminal),
                     violations.size());
  if (traj.terminal == Terminal::StepFailure) {
    err << "step size underflow; trajectory truncated\n";
    return kExitStepFailure;
  }
  for (const auto& v : violations) {
    err << fmt::format("violation {} at t = {} (magnitude {})\n", v.rule, io::format_double(v.t),
                       io::format_double(v.magnitude));
  }
  return violations.empty() ? kExitOk : kExitCheckFailed;
}

int cmd_classify(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Outputs files(cfg, {"classify.json"});
  Json report;
  if (cfg.matrix) {
    const Mat& a = *cfg.matrix;
    report["input"] = "matrix";
    report["matrix"] = io::to_json(a);
    report["matrix_class"] = to_string(classify_matrix(a, cfg.classify_tol));
    report["verdict"] = io::to_json(classify_soliton(a, cfg.classify_tol));
    report["admits_negative_curvature"] = admits_negative_curvature(a);
    report["curvature"] = io::to_json(curvature_report(a, cfg.seed, cfg.planes));
  } else {
    const MetricLieAlgebra& g = *cfg.algebra;
    report["input"] = "algebra";
    report["algebra"] = io::to_json(g);
    report["jacobi_residual"] = g.jacobi_residual();
    report["verdict"] = io::to_json(certify_algebraic_soliton(g, cfg.classify_tol));
    report["curvature"] = io::to_json(curvature_report(g, cfg.seed, cfg.planes));
  }
  const std::string text = dump(report);
  files.write("classify.json", text);
  out << text;
  return kExitOk;
}

int cmd_curvature(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Outputs files(cfg, {"curvature.json"});
  Json report;
  if (cfg.matrix) {
    report["curvature"] = io::to_json(curvature_report(*cfg.matrix, cfg.seed, cfg.planes));
    report["watch"] = nullptr;
    if (cfg.watch_t_end && admits_negative_curvature(*cfg.matrix)) {
      report["watch"] = io::to_json(curvature_watch(*cfg.matrix, *cfg.watch_t_end, 0.1, cfg.seed, cfg.planes));
    }
  } else {
    report["curvature"] = io::to_json(curvature_report(*cfg.algebra, cfg.seed, cfg.planes));
  }
  const std::string text = dump(report);
  files.write("curvature.json", text);
  out << text;
  return kExitOk;
}

int cmd_phase_plane(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto grid = phase2d_grid(cfg.phase_plane.grid, cfg.phase_plane.lo, cfg.phase_plane.hi);
  std::vector<std::string> names = {"atlas.csv", "atlas.gp"};
  for (std::size_t i = 0; i < grid.size(); ++i) names.push_back(io::phase_trajectory_name(i));
  const Outputs files(cfg, names);

  PhaseSweepOptions opts = cfg.phase_plane.sweep;
  opts.threads = cfg.threads;
  const auto results = phase2d_sweep(grid, opts);

  for (const auto& r : results) files.write(io::phase_trajectory_name(r.index), io::phase_trajectory_csv(r));
  files.write("atlas.csv", io::atlas_csv(results));
  files.write("atlas.gp", io::atlas_gnuplot(results));

  std::map<std::string, std::size_t> counts;
  for (const auto& r : results) ++counts[to_string(r.cls)];
  for (const auto& [cls, n] : counts) out << fmt::format("{}: {}\n", cls, n);
  const bool failed = counts.count(to_string(PhaseClass::StepFailure)) > 0;
  if (failed) err << "some grid points ended in a step failure\n";
  return failed ? kExitStepFailure : kExitOk;
}

int cmd_ejsol(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Outputs files(cfg, {"ejsol.csv", "ejsol.json"});
  const EjsolConfig& e = cfg.ejsol;
  const double c = ejsol_c(e.lambda);
  const double soliton_alpha = ejsol_soliton_alpha(e.lambda);
  const double alpha0 = e.alpha0.value_or(soliton_alpha);
  const auto states = ejsol_integrate(e.lambda, alpha0, e.t_end, e.stride);

  Json report;
  report["lambda"] = e.lambda;
  report["c"] = c;
  report["alpha0"] = alpha0;
  report["soliton_alpha"] = soliton_alpha;
  report["k13_at_soliton"] = ejsol_k13(e.lambda, soliton_alpha, 1.0);
  report["k13_at_start"] = ejsol_k13(e.lambda, alpha0, 1.0);
  try {
    const auto t0 = ejsol_curvature_crossing(e.lambda, alpha0);
    report["crossing_time"] = t0 ? Json(*t0) : Json(nullptr);
  } catch (const std::domain_error& ex) {
    report["crossing_time"] = nullptr;
    report["crossing_note"] = ex.what();
  }
  files.write("ejsol.csv", io::ejsol_csv(states));
  const std::string text = dump(report);
  files.write("ejsol.json", text);
  out << text;
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Outputs files(cfg, {"validate.json"});
  ValidateOptions opts;
  opts.seed = cfg.seed;
  opts.scale = cfg.validate_scale;
  opts.threads = cfg.threads;
  const ValidateReport rep = run_validation(opts);
  files.write("validate.json", dump(to_json(rep)));
  for (const auto& c : rep.checks) {
    out << fmt::format("{} {} worst={} tol={}\n", c.passed ? "PASS" : "FAIL", c.name, io::format_double(c.worst),
                       io::format_double(c.tolerance));
    if (!c.passed) err << fmt::format("failed: {} worst residual {} ({})\n", c.name, c.worst, c.detail);
  }
  return rep.all_passed() ? kExitOk : kExitCheckFailed;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Numerical lab for the bracket flow of metric solvable Lie algebras", "solvflow");
  std::string command;
  std::string config;
  Overrides ov;
  double t_end = 0;
  double tol = 0;
  std::string out_dir;
  std::uint64_t seed = 0;
  app.add_option("command", command, "simulate | classify | curvature | phase-plane | ejsol | validate")
      ->required()
      ->check(CLI::IsMember(kCommands));
  app.add_option("--config", config, "JSON configuration file")->required();
  auto* t_end_opt = app.add_option("--t-end", t_end, "final time (overrides the config)");
  auto* tol_opt = app.add_option("--tol", tol, "relative tolerance (integration, or classification)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "seed for plane sampling and validation");
  app.add_flag("--force", ov.force, "overwrite existing output files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (*t_end_opt) ov.t_end = t_end;
  if (*tol_opt) ov.tol = tol;
  if (*out_opt) ov.out = out_dir;
  if (*seed_opt) ov.seed = seed;

  RunConfig cfg;
  try {
    cfg = load_config(command, config, ov);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  int code = 1;
  try {
    if (command == "simulate") code = cmd_simulate(cfg, out, err);
    else if (command == "classify") code = cmd_classify(cfg, out, err);
    else if (command == "curvature") code = cmd_curvature(cfg, out, err);
    else if (command == "phase-plane") code = cmd_phase_plane(cfg, out, err);
    else if (command == "ejsol") code = cmd_ejsol(cfg, out, err);
    else code = cmd_validate(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "bad input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    err << "bad input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::ostringstream line;
  for (int i = 0; i < argc; ++i) line << (i ? " " : "") << argv[i];
  line << " -> exit " << code;
  append_log(cfg, line.str());
  return code;
}

}  // namespace solvflow::cli
