#include "solvflow/io.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace solvflow::io {

namespace {

std::string join_key(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

double number_at(const Json& obj, const std::string& name, const std::string& prefix) {
  const Json& v = obj.at(name);
  if (!v.is_number()) throw ConfigError(join_key(prefix, name), "expected a number");
  return v.get<double>();
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

void require_keys(const Json& obj, const std::vector<std::string>& allowed, const std::string& prefix) {
  if (!obj.is_object()) throw ConfigError(prefix, "expected a JSON object");
  for (const auto& [k, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError(join_key(prefix, k), "unknown key");
    }
  }
}

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const Json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw ConfigError(key, "expected a non-empty array of rows");
  const std::size_t n = j.size();
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Json& r = j[i];
    const std::string rk = fmt::format("{}[{}]", key, i);
    if (!r.is_array() || r.size() != n) throw ConfigError(rk, fmt::format("expected a row of {} numbers", n));
    std::vector<double> row;
    for (std::size_t c = 0; c < n; ++c) {
      if (!r[c].is_number()) throw ConfigError(fmt::format("{}[{}]", rk, c), "expected a number");
      row.push_back(r[c].get<double>());
    }
    rows.push_back(std::move(row));
  }
  try {
    return Mat::from_rows(rows);
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

Json to_json(const MetricLieAlgebra& g) {
  Json consts = Json::array();
  for (const auto& e : g.entries()) consts.push_back(Json::array({e.i, e.j, e.k, e.value}));
  Json out;
  out["dim"] = g.dim();
  out["constants"] = std::move(consts);
  return out;
}

MetricLieAlgebra algebra_from_json(const Json& j, const std::string& key) {
  require_keys(j, {"dim", "constants"}, key);
  if (!j.contains("dim") || !j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0) {
    throw ConfigError(join_key(key, "dim"), "expected a positive integer");
  }
  const auto dim = j["dim"].get<std::size_t>();
  if (!j.contains("constants") || !j["constants"].is_array()) {
    throw ConfigError(join_key(key, "constants"), "expected an array of [i, j, k, value]");
  }
  std::vector<StructureEntry> entries;
  const Json& cs = j["constants"];
  for (std::size_t n = 0; n < cs.size(); ++n) {
    const std::string ek = fmt::format("{}.constants[{}]", key, n);
    const Json& e = cs[n];
    if (!e.is_array() || e.size() != 4 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned() ||
        !e[2].is_number_unsigned() || !e[3].is_number()) {
      throw ConfigError(ek, "expected [i, j, k, value] with non-negative integer indices");
    }
    entries.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<std::size_t>(), e[3].get<double>()});
  }
  try {
    return MetricLieAlgebra::from_entries(dim, entries);
  } catch (const std::exception& e) {
    throw ConfigError(join_key(key, "constants"), e.what());
  }
}

FlowSpec flowspec_from_json(const Json& j, const std::string& key, bool require_matrix) {
  require_keys(j,
               {"kind", "A0", "t_end", "rel_tol", "abs_tol", "max_step", "init_step", "sample_stride",
                "stop_when_stationary", "samples_per_decade"},
               key);
  FlowSpec s;
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw ConfigError(join_key(key, "kind"), "expected a string");
    try {
      s.kind = flow_kind_from_string(j["kind"].get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(join_key(key, "kind"), e.what());
    }
  }
  if (j.contains("A0")) {
    s.A0 = mat_from_json(j["A0"], join_key(key, "A0"));
  } else if (require_matrix) {
    throw ConfigError(join_key(key, "A0"), "missing initial matrix");
  }
  auto num = [&](const char* name, double& field) {
    if (j.contains(name)) field = number_at(j, name, key);
  };
  num("t_end", s.t_end);
  num("rel_tol", s.rel_tol);
  num("abs_tol", s.abs_tol);
  // null is how an unbounded max_step is written out.
  if (j.contains("max_step") && !j["max_step"].is_null()) s.max_step = number_at(j, "max_step", key);
  num("init_step", s.init_step);
  num("sample_stride", s.sample_stride);
  if (j.contains("stop_when_stationary") && !j["stop_when_stationary"].is_null()) {
    s.stop_when_stationary = number_at(j, "stop_when_stationary", key);
  }
  if (j.contains("samples_per_decade") && !j["samples_per_decade"].is_null()) {
    s.samples_per_decade = number_at(j, "samples_per_decade", key);
  }
  return s;
}

Json to_json(const FlowSpec& s) {
  Json out;
  out["kind"] = to_string(s.kind);
  out["A0"] = to_json(s.A0);
  out["t_end"] = s.t_end;
  out["rel_tol"] = s.rel_tol;
  out["abs_tol"] = s.abs_tol;
  out["max_step"] = std::isfinite(s.max_step) ? Json(s.max_step) : Json(nullptr);
  out["init_step"] = s.init_step;
  out["sample_stride"] = s.sample_stride;
  out["stop_when_stationary"] = optional_number(s.stop_when_stationary);
  out["samples_per_decade"] = optional_number(s.samples_per_decade);
  return out;
}

Json to_json(const Spectrum& s) {
  Json out = Json::array();
  for (const auto& v : s.values()) out.push_back(Json::array({v.real(), v.imag()}));
  return out;
}

Json to_json(const SolitonVerdict& v) {
  Json out;
  out["label"] = to_string(v.label);
  out["c"] = optional_number(v.c);
  out["soliton_constant"] = optional_number(v.soliton_constant);
  out["derivation"] = v.derivation ? to_json(*v.derivation) : Json(nullptr);
  out["residuals"] = {{"normality", v.residuals.normality},
                      {"eigen_relation", v.residuals.eigen_relation},
                      {"ric_decomposition", v.residuals.ric_decomposition},
                      {"derivation", v.residuals.derivation}};
  return out;
}

Json to_json(const HeintzeResult& h) {
  return {{"condA", h.condA}, {"condB", h.condB},   {"condC", h.condC},
          {"negative", h.negative}, {"sign", h.sign}, {"marginal", h.marginal}};
}

Json to_json(const CurvatureReport& r) {
  Json out;
  out["ricci_op"] = to_json(r.ricci_op);
  out["scalar"] = r.scalar;
  out["riem_norm"] = r.riem_norm;
  out["sectional_min"] = r.sectional_min;
  out["sectional_max"] = r.sectional_max;
  out["flat"] = r.flat;
  out["seed"] = r.seed;
  out["planes"] = r.planes;
  out["heintze"] = r.heintze ? to_json(*r.heintze) : Json(nullptr);
  return out;
}

Json to_json(const OmegaLimitReport& r) {
  Json out;
  out["converged"] = r.converged;
  out["terminal"] = to_string(r.terminal);
  out["t_final"] = r.t_final;
  out["A_inf"] = r.A_inf ? to_json(*r.A_inf) : Json(nullptr);
  out["skew_residual"] = r.skew_residual;
  out["spectra_agree"] = r.spectra_agree;
  out["late_spread"] = r.late_spread;
  out["normality_residuals"] = r.normality_residuals;
  Json late = Json::array();
  for (const auto& m : r.late_samples) late.push_back(to_json(m));
  out["late_samples"] = std::move(late);
  out["verdict"] = r.verdict ? to_json(*r.verdict) : Json(nullptr);
  return out;
}

Json to_json(const Type3Report& r) {
  Json samples = Json::array();
  for (const auto& s : r.samples) samples.push_back({{"t", s.t}, {"riem_norm", s.riem_norm}, {"t_riem", s.t_riem}});
  return {{"sup_tC", r.sup_tC}, {"samples", std::move(samples)}};
}

Json to_json(const std::vector<Violation>& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back({{"t", x.t}, {"rule", x.rule}, {"magnitude", x.magnitude}});
  return out;
}

Json to_json(const CurvatureWatchReport& r) {
  Json out;
  out["first_negative_time"] = optional_number(r.first_negative_time);
  out["persistent"] = r.persistent;
  out["samples"] = r.samples;
  out["sampled_max_first"] = optional_number(r.sampled_max_first);
  out["sampled_max_end"] = optional_number(r.sampled_max_end);
  out["sampler_agrees"] = r.sampler_agrees;
  out["terminal"] = to_string(r.terminal);
  return out;
}

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  const std::size_t n = traj.samples.empty() ? traj.spec.A0.dim() : traj.front().A.dim();
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= n; ++j) out += fmt::format(",a{}{}", i, j);
  out += ",norm_sq,tr_A,tr_A2,tr_S2,F,rhs_norm\n";
  for (const auto& s : traj.samples) {
    out += format_double(s.t);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out += "," + format_double(s.A(i, j));
    const auto& d = s.diag;
    for (double v : {d.norm_sq, d.tr_A, d.tr_A2, d.tr_S2, d.F, d.rhs_norm}) out += "," + format_double(v);
    out += '\n';
  }
  return out;
}

std::string diagnostics_jsonl(const Trajectory& traj) {
  std::string out;
  for (const auto& s : traj.samples) {
    Json row;
    row["t"] = s.t;
    row["norm_sq"] = s.diag.norm_sq;
    row["tr_A"] = s.diag.tr_A;
    row["tr_A2"] = s.diag.tr_A2;
    row["tr_S2"] = s.diag.tr_S2;
    row["F"] = s.diag.F;
    row["rhs_norm"] = s.diag.rhs_norm;
    row["a_of_t"] = optional_number(s.diag.a_of_t);
    row["spectrum"] = to_json(s.diag.spectrum);
    out += row.dump();
    out += '\n';
  }
  return out;
}

std::string phase_trajectory_csv(const PhaseResult& r) {
  std::string out = "t,x,y\n";
  for (const auto& p : r.samples) out += fmt::format("{},{},{}\n", format_double(p.t), format_double(p.x), format_double(p.y));
  return out;
}

std::string atlas_csv(const std::vector<PhaseResult>& results) {
  std::string out = "x0,y0,class,x_inf,y_inf,t_stationary\n";
  for (const auto& r : results) {
    out += fmt::format("{},{},{},{},{},{}\n", format_double(r.start.x), format_double(r.start.y), to_string(r.cls),
                       format_double(r.limit.x), format_double(r.limit.y), format_double(r.t_stationary));
  }
  return out;
}

std::string phase_trajectory_name(std::size_t index) { return fmt::format("traj_{:05d}.csv", index); }

std::string atlas_gnuplot(const std::vector<PhaseResult>& results) {
  double lo = 0;
  double hi = 0;
  for (const auto& r : results) lo = std::min({lo, r.start.x, r.start.y}), hi = std::max({hi, r.start.x, r.start.y});
  const double pad = 0.05 * std::max(1e-12, hi - lo);
  std::string out;
  out += "# Phase plane of x' = x(x+y)(-3x/2+y/2), y' = y(x+y)(-3y/2+x/2).\n";
  out += "set datafile separator ','\n";
  out += "set size square\n";
  out += "set key off\n";
  out += "set xlabel 'x'\nset ylabel 'y'\n";
  out += fmt::format("set xrange [{}:{}]\nset yrange [{}:{}]\n", format_double(lo - pad), format_double(hi + pad),
                     format_double(lo - pad), format_double(hi + pad));
  out += "set xzeroaxis lt -1\nset yzeroaxis lt -1\n";
  out += fmt::format("N = {}\n", results.size());
  out += "plot for [i=0:N-1] sprintf('traj_%05d.csv', i) skip 1 using 2:3 with lines lc rgb '#4060a0' lw 0.6, \\\n";
  out += "     -x with lines lc rgb '#c03030' lw 2 title 'y = -x', \\\n";
  out += "     x with lines lc rgb '#30a030' dt 2 lw 1.5 title 'y = x'\n";
  return out;
}

std::string ejsol_csv(const std::vector<EjsolState>& numeric) {
  std::string out = "t,alpha,h,alpha_exact,h_exact,K13,K13_tensor\n";
  for (const auto& s : numeric) {
    const EjsolState ex = ejsol_exact(s, s.t);
    const double k_closed = ejsol_k13(s.lambda, s.alpha, s.h);
    const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(4, 1);
    const Eigen::VectorXd e3 = Eigen::VectorXd::Unit(4, 3);
    const double k_tensor = sectional_curvature(ejsol_algebra(s.lambda, s.alpha, s.h), e1, e3);
    out += fmt::format("{},{},{},{},{},{},{}\n", format_double(s.t), format_double(s.alpha), format_double(s.h),
                       format_double(ex.alpha), format_double(ex.h), format_double(k_closed), format_double(k_tensor));
  }
  return out;
}

}  // namespace solvflow::io
