#include "rtreg/json_io.hpp"

#include <fstream>

#include "rtreg/errors.hpp"

namespace rtreg {
namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json with_sparse(const Eigen::VectorXd& v) {
  json out;
  out["dense"] = vector_to_json(v);
  json sparse = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) sparse.push_back(json::array({i, v[i]}));
  }
  out["sparse"] = sparse;
  return out;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const char* where) {
  if (!j.is_object()) {
    throw ConfigError(std::string(where) + ": expected a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError(std::string(where) + ": unknown field '" + key + "'");
    }
  }
}

template <typename T>
T field(const json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  return j.at(name).get<T>();
}

std::vector<double> dvec(const json& j, const char* name, std::vector<double> fallback) {
  if (!j.contains(name)) return fallback;
  return j.at(name).get<std::vector<double>>();
}

}  // namespace

json to_json(const SparseCoefficients& c) { return with_sparse(c.values); }

json to_json(const CorruptionVector& c) { return with_sparse(c.values); }

json to_json(const NoiseScaleEstimate& s) {
  return json{{"sigma_hat", s.sigma_hat}, {"method", s.method}};
}

json to_json(const EdslTrace& t) {
  json rounds = json::array();
  for (const auto& r : t.rounds) {
    rounds.push_back(json{{"round", r.round},
                          {"lambda", r.lambda},
                          {"l1_change", r.l1_change},
                          {"grad_correction_inf", r.grad_correction_inf},
                          {"surrogate_gap", r.surrogate_gap}});
  }
  return json{{"rounds", rounds},
              {"lambda0", t.lambda0},
              {"lambda_floor", t.lambda_floor},
              {"s_hint_used", t.s_hint_used},
              {"anchor", t.anchor},
              {"stop_reason", t.stop_reason}};
}

json to_json(const SelectionResult& s) {
  json table = json::array();
  for (const auto& e : s.shift_table) {
    json row{{"source_index", e.source_index}, {"h_hat", e.h_hat}, {"failed", e.failed}};
    if (e.failed) row["error"] = e.error;
    if (e.merged_fit.size() > 0) row["merged_fit"] = to_json(e.merged_fit);
    if (e.solo_fit.size() > 0) row["solo_fit"] = to_json(e.solo_fit);
    table.push_back(std::move(row));
  }
  return json{{"selected", s.selected},
              {"validation_index", s.validation_index},
              {"shift_table", table}};
}

json to_json(const AhtDecision& d) {
  json scores = json::array();
  for (const auto& s : d.score_table) {
    scores.push_back(json{{"lambda_delta", s.lambda_delta},
                          {"lambda_e", s.lambda_e},
                          {"score", s.score},
                          {"delta_l1", s.delta_l1},
                          {"feasible", s.feasible}});
  }
  return json{{"corruption_count_estimate", d.corruption_count_estimate},
              {"branch", d.branch == AhtBranch::validation_based ? "validation_based"
                                                                 : "cross_validation"},
              {"lambda_delta", d.lambda_delta},
              {"lambda_e", d.lambda_e},
              {"c_tilde_used", d.c_tilde_used},
              {"feasibility_fallback", d.feasibility_fallback},
              {"score_table", scores}};
}

json to_json(const TransferFit& t) {
  return json{{"beta_source", to_json(t.beta_source)},
              {"delta", to_json(t.delta)},
              {"corruption", to_json(t.corruption)},
              {"beta_final", to_json(t.beta_final)},
              {"beta_thresholded", to_json(t.beta_thresholded)},
              {"threshold_used", t.threshold_used},
              {"lambda_delta", t.lambda_delta},
              {"lambda_e", t.lambda_e}};
}

json to_json(const PilotFit& p) {
  return json{{"beta", to_json(p.beta)},
              {"e", to_json(p.e)},
              {"sigma", to_json(p.sigma)},
              {"lambda_beta", p.lambda_beta},
              {"lambda_e", p.lambda_e},
              {"corruption_count", p.corruption_count},
              {"iterations", p.iterations}};
}

json to_json(const SolverSettings& s) {
  return json{{"max_iters", s.max_iters}, {"tol", s.tol}, {"active_set", s.active_set}};
}

json to_json(const EdslConfig& c) {
  const char* policy = c.anchor_policy == AnchorPolicy::first ? "first"
                       : c.anchor_policy == AnchorPolicy::min_shift
                           ? "min_shift"
                           : "explicit";
  return json{{"c_lambda_1", c.c_lambda_1}, {"c_lambda_2", c.c_lambda_2},
              {"s_hint", c.s_hint},         {"max_rounds", c.max_rounds},
              {"anchor_policy", policy},    {"anchor_index", c.anchor_index},
              {"weight_by_n", c.weight_by_n}};
}

json to_json(const TuningGrid& g) {
  return json{{"delta_multipliers", g.delta_multipliers},
              {"e_multipliers", g.e_multipliers},
              {"delta_values", g.delta_values},
              {"e_values", g.e_values}};
}

json to_json(const AhtParams& a) {
  return json{{"c_h", a.c_h}, {"c_tilde", a.c_tilde}, {"C_tilde", a.C_tilde}, {"k0", a.k0}};
}

json to_json(const ShiftPenalties& p) {
  return json{{"lambda_beta", p.lambda_beta},
              {"lambda_e", p.lambda_e},
              {"lambda_solo", p.lambda_solo}};
}

json to_json(const PipelineConfig& c) {
  return json{{"h", c.h},
              {"A_cap", c.A_cap},
              {"aht", to_json(c.aht)},
              {"gamma1", c.gamma1},
              {"grid", to_json(c.grid)},
              {"edsl", to_json(c.edsl)},
              {"solver", to_json(c.solver)},
              {"shift_penalties", to_json(c.shift_penalties)},
              {"standardize", c.standardize},
              {"seed", c.seed}};
}

json to_json(const SimDesign& d) {
  return json{{"p", d.p},
              {"n_target", d.n_target},
              {"n_source", d.n_source},
              {"L", d.L},
              {"target_sparsity", d.target_sparsity},
              {"corruption_fraction", d.corruption_fraction},
              {"corruption_lo", d.corruption_lo},
              {"corruption_hi", d.corruption_hi},
              {"corruption_sign_flip", d.corruption_sign_flip},
              {"noise_sd", d.noise_sd},
              {"source_sparsity_alt", d.source_sparsity_alt},
              {"shared_support_size", d.shared_support_size},
              {"shift_lo", d.shift_lo},
              {"shift_hi", d.shift_hi},
              {"cs_unit_scaling", d.cs_unit_scaling},
              {"seed", d.seed}};
}

json to_json(const FitReport& r) {
  json timings{{"pilot_s", r.timings.pilot_s},   {"sds_s", r.timings.sds_s},
               {"edsl_s", r.timings.edsl_s},     {"aht_s", r.timings.aht_s},
               {"transfer_s", r.timings.transfer_s}, {"total_s", r.timings.total_s}};
  return json{{"schema_version", r.schema_version},
              {"mode", to_string(r.mode)},
              {"selection", to_json(r.selection)},
              {"edsl_beta", to_json(r.edsl_beta)},
              {"edsl_trace", to_json(r.edsl_trace)},
              {"tuning", to_json(r.tuning)},
              {"transfer", to_json(r.transfer)},
              {"sigma", to_json(r.sigma)},
              {"pilot", to_json(r.pilot)},
              {"standardization",
               json{{"column_means", vector_to_json(r.record.column_means)},
                    {"column_scales", vector_to_json(r.record.column_scales)}}},
              {"timings", timings},
              {"config", to_json(r.config)}};
}

json to_json(const BenchmarkCell& c) {
  return json{{"design", to_json(c.design)},
              {"method", c.method},
              {"reps", c.reps},
              {"completed", c.completed},
              {"mean_ser_db", c.mean_ser_db},
              {"se_ser_db", c.se_ser_db},
              {"sign_rate", c.sign_rate},
              {"failures", c.failures},
              {"first_error", c.first_error}};
}

SolverSettings solver_settings_from_json(const json& j) {
  reject_unknown(j, {"max_iters", "tol", "active_set"}, "solver");
  SolverSettings s;
  s.max_iters = field(j, "max_iters", s.max_iters);
  s.tol = field(j, "tol", s.tol);
  s.active_set = field(j, "active_set", s.active_set);
  if (s.max_iters < 1) throw ConfigError("solver.max_iters must be positive");
  if (!(s.tol > 0)) throw ConfigError("solver.tol must be positive");
  return s;
}

EdslConfig edsl_config_from_json(const json& j) {
  reject_unknown(j,
                 {"c_lambda_1", "c_lambda_2", "s_hint", "max_rounds", "anchor_policy",
                  "anchor_index", "weight_by_n"},
                 "edsl");
  EdslConfig c;
  c.c_lambda_1 = field(j, "c_lambda_1", c.c_lambda_1);
  c.c_lambda_2 = field(j, "c_lambda_2", c.c_lambda_2);
  c.s_hint = field(j, "s_hint", c.s_hint);
  c.max_rounds = field(j, "max_rounds", c.max_rounds);
  c.anchor_index = field<Eigen::Index>(j, "anchor_index", c.anchor_index);
  c.weight_by_n = field(j, "weight_by_n", c.weight_by_n);
  const std::string policy = field<std::string>(j, "anchor_policy", "min_shift");
  if (policy == "first") {
    c.anchor_policy = AnchorPolicy::first;
  } else if (policy == "min_shift") {
    c.anchor_policy = AnchorPolicy::min_shift;
  } else if (policy == "explicit") {
    c.anchor_policy = AnchorPolicy::explicit_index;
  } else {
    throw ConfigError("edsl.anchor_policy must be first|min_shift|explicit");
  }
  if (!(c.c_lambda_1 > 0) || !(c.c_lambda_2 > 0)) {
    throw ConfigError("edsl schedule constants must be positive");
  }
  if (c.max_rounds < 1) throw ConfigError("edsl.max_rounds must be positive");
  return c;
}

TuningGrid tuning_grid_from_json(const json& j) {
  reject_unknown(j, {"delta_multipliers", "e_multipliers", "delta_values", "e_values"},
                 "grid");
  TuningGrid g;
  g.delta_multipliers = dvec(j, "delta_multipliers", g.delta_multipliers);
  g.e_multipliers = dvec(j, "e_multipliers", g.e_multipliers);
  g.delta_values = dvec(j, "delta_values", g.delta_values);
  g.e_values = dvec(j, "e_values", g.e_values);
  return g;
}

AhtParams aht_params_from_json(const json& j) {
  reject_unknown(j, {"c_h", "c_tilde", "C_tilde", "k0"}, "aht");
  AhtParams a;
  a.c_h = field(j, "c_h", a.c_h);
  a.c_tilde = field(j, "c_tilde", a.c_tilde);
  a.C_tilde = field(j, "C_tilde", a.C_tilde);
  a.k0 = field(j, "k0", a.k0);
  if (a.k0 < 2) throw ConfigError("aht.k0 must be >= 2");
  return a;
}

ShiftPenalties shift_penalties_from_json(const json& j) {
  reject_unknown(j, {"lambda_beta", "lambda_e", "lambda_solo"}, "shift_penalties");
  ShiftPenalties p;
  p.lambda_beta = field(j, "lambda_beta", p.lambda_beta);
  p.lambda_e = field(j, "lambda_e", p.lambda_e);
  p.lambda_solo = field(j, "lambda_solo", p.lambda_solo);
  return p;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  reject_unknown(j,
                 {"h", "A_cap", "aht", "gamma1", "grid", "edsl", "solver",
                  "shift_penalties", "standardize", "seed"},
                 "pipeline");
  PipelineConfig c;
  c.h = field(j, "h", c.h);
  c.A_cap = field<Eigen::Index>(j, "A_cap", c.A_cap);
  if (j.contains("aht")) c.aht = aht_params_from_json(j.at("aht"));
  c.gamma1 = field(j, "gamma1", c.gamma1);
  if (j.contains("grid")) c.grid = tuning_grid_from_json(j.at("grid"));
  if (j.contains("edsl")) c.edsl = edsl_config_from_json(j.at("edsl"));
  if (j.contains("solver")) c.solver = solver_settings_from_json(j.at("solver"));
  if (j.contains("shift_penalties")) {
    c.shift_penalties = shift_penalties_from_json(j.at("shift_penalties"));
  }
  c.standardize = field(j, "standardize", c.standardize);
  c.seed = field(j, "seed", c.seed);
  if (c.h < 0) throw ConfigError("pipeline.h must be >= 0");
  return c;
}

SimDesign sim_design_from_json(const json& j) {
  reject_unknown(j,
                 {"p", "n_target", "n_source", "L", "target_sparsity",
                  "corruption_fraction", "corruption_lo", "corruption_hi",
                  "corruption_sign_flip", "noise_sd", "source_sparsity_alt",
                  "shared_support_size", "shift_lo", "shift_hi", "cs_unit_scaling",
                  "seed"},
                 "sim");
  SimDesign d;
  d.p = field<Eigen::Index>(j, "p", d.p);
  d.n_target = field<Eigen::Index>(j, "n_target", d.n_target);
  d.n_source = field<Eigen::Index>(j, "n_source", d.n_source);
  d.L = field(j, "L", d.L);
  d.target_sparsity = field(j, "target_sparsity", d.target_sparsity);
  d.corruption_fraction = field(j, "corruption_fraction", d.corruption_fraction);
  d.corruption_lo = field(j, "corruption_lo", d.corruption_lo);
  d.corruption_hi = field(j, "corruption_hi", d.corruption_hi);
  d.corruption_sign_flip = field(j, "corruption_sign_flip", d.corruption_sign_flip);
  d.noise_sd = field(j, "noise_sd", d.noise_sd);
  d.source_sparsity_alt = field(j, "source_sparsity_alt", d.source_sparsity_alt);
  d.shared_support_size = field(j, "shared_support_size", d.shared_support_size);
  d.shift_lo = field(j, "shift_lo", d.shift_lo);
  d.shift_hi = field(j, "shift_hi", d.shift_hi);
  d.cs_unit_scaling = field(j, "cs_unit_scaling", d.cs_unit_scaling);
  d.seed = field(j, "seed", d.seed);
  d.validate();
  return d;
}

BenchmarkCell benchmark_cell_from_json(const json& j) {
  BenchmarkCell c;
  c.design = sim_design_from_json(j.at("design"));
  c.method = j.at("method").get<std::string>();
  c.reps = j.at("reps").get<int>();
  c.completed = field(j, "completed", 0);
  c.mean_ser_db = field(j, "mean_ser_db", 0.0);
  c.se_ser_db = field(j, "se_ser_db", 0.0);
  c.sign_rate = field(j, "sign_rate", 0.0);
  c.failures = field(j, "failures", 0);
  c.first_error = field<std::string>(j, "first_error", "");
  return c;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw ConfigError("'" + path.string() + "': " + ex.what());
  }
}

}  // namespace rtreg
