#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "solvflow/casebook.hpp"
#include "solvflow/flow.hpp"
#include "solvflow/geometry.hpp"
#include "solvflow/io.hpp"

namespace solvflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitStepFailure = 3;
inline constexpr int kExitCheckFailed = 4;

inline const std::vector<std::string> kCommands = {"simulate", "classify",  "curvature",
                                                   "phase-plane", "ejsol", "validate"};

/// Command-line values; each one that is set replaces the config entry.
struct Overrides {
  std::optional<double> t_end;
  std::optional<double> tol;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

struct PhasePlaneConfig {
  std::size_t grid = 41;
  double lo = -2.0;
  double hi = 2.0;
  PhaseSweepOptions sweep;
};

struct EjsolConfig {
  double lambda = 0.1;
  /// Defaults to the soliton value sqrt(3 / (2 c_lambda)).
  std::optional<double> alpha0;
  double t_end = 100.0;
  double stride = 0.5;
};

struct RunConfig {
  std::string command;
  /// Exactly one of matrix / algebra is set for commands that take an input.
  std::optional<Mat> matrix;
  std::optional<MetricLieAlgebra> algebra;
  FlowSpec flow;
  std::filesystem::path output_dir = "solvflow-out";
  std::uint64_t seed = 20240611;
  bool force = false;
  unsigned threads = 0;

  double classify_tol = kDefaultTol;
  std::size_t planes = 1000;
  /// When set and the input admits negative curvature, curvature also runs
  /// the finite-time watch up to this time.
  std::optional<double> watch_t_end;
  PhasePlaneConfig phase_plane;
  EjsolConfig ejsol;
  double validate_scale = 1.0;
};

/// Parses and validates the JSON config. Relative "input" paths resolve
/// against base_dir. Throws io::ConfigError naming the offending key.
RunConfig parse_config(const std::string& command, const io::Json& j, const Overrides& ov,
                       const std::filesystem::path& base_dir = ".");

/// Reads the file, then parse_config.
RunConfig load_config(const std::string& command, const std::filesystem::path& path, const Overrides& ov);

/// Worker cap from SOLVFLOW_THREADS (0 when unset). Throws io::ConfigError on
/// a malformed value.
unsigned threads_from_env();

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_classify(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_curvature(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_phase_plane(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_ejsol(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Entry point used by the solvflow binary.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace solvflow::cli
