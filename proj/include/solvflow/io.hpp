#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "solvflow/casebook.hpp"
#include "solvflow/flow.hpp"
#include "solvflow/geometry.hpp"
#include "solvflow/soliton.hpp"

namespace solvflow::io {

using Json = nlohmann::ordered_json;

/// Malformed input; key() is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : "'" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Rejects any key of obj not in allowed, naming it with prefix.
void require_keys(const Json& obj, const std::vector<std::string>& allowed, const std::string& prefix);

/// Arrays of rows; numbers are written in shortest round-trip form.
Json to_json(const Mat& m);
Mat mat_from_json(const Json& j, const std::string& key = "matrix");

/// {"dim": m, "constants": [[i, j, k, value], ...]} with i < j.
Json to_json(const MetricLieAlgebra& g);
MetricLieAlgebra algebra_from_json(const Json& j, const std::string& key = "algebra");

/// Strict FlowSpec schema: kind, A0, t_end, rel_tol, abs_tol, max_step,
/// init_step, sample_stride, stop_when_stationary, samples_per_decade. A0 may
/// be absent when the caller supplies it (require_matrix = false).
FlowSpec flowspec_from_json(const Json& j, const std::string& key = "flow", bool require_matrix = true);
Json to_json(const FlowSpec& s);

Json to_json(const Spectrum& s);
Json to_json(const SolitonVerdict& v);
Json to_json(const HeintzeResult& h);
Json to_json(const CurvatureReport& r);
Json to_json(const OmegaLimitReport& r);
Json to_json(const Type3Report& r);
Json to_json(const std::vector<Violation>& v);
Json to_json(const CurvatureWatchReport& r);

/// 17 significant digits.
std::string format_double(double x);

/// Header t,a11,...,ann,norm_sq,tr_A,tr_A2,tr_S2,F,rhs_norm; LF endings.
std::string trajectory_csv(const Trajectory& traj);
/// One JSON object per sample and line: t and every DiagnosticRow field.
std::string diagnostics_jsonl(const Trajectory& traj);

/// Header t,x,y.
std::string phase_trajectory_csv(const PhaseResult& r);
/// Header x0,y0,class,x_inf,y_inf,t_stationary, one row per grid point.
std::string atlas_csv(const std::vector<PhaseResult>& results);
/// File name of trajectory i in an atlas directory.
std::string phase_trajectory_name(std::size_t index);
/// gnuplot script drawing every trajectory file, the line y = -x, the
/// diagonal and the axes.
std::string atlas_gnuplot(const std::vector<PhaseResult>& results);

/// Header t,alpha,h,alpha_exact,h_exact,K13,K13_tensor.
std::string ejsol_csv(const std::vector<EjsolState>& numeric);

}  // namespace solvflow::io
