// rtreg — robust transfer regression CLI.
//
// Subcommands: simulate, fit, select, oracle, bench. Configuration comes
// from a single JSON document (--config); every field has a default, so all
// commands run with no config at all. Exit codes: 0 success, 2 config,
// 3 ingestion, 4 solver, 5 io.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtreg/bench.hpp"
#include "rtreg/csv.hpp"
#include "rtreg/diagnostics.hpp"
#include "rtreg/errors.hpp"
#include "rtreg/json_io.hpp"
#include "rtreg/version.hpp"

namespace fs = std::filesystem;
using rtreg::json;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out_dir = ".";
  std::string method;
  bool verbose = false;
};

int classify_exit(const std::exception& ex) {
  if (dynamic_cast<const rtreg::ConfigError*>(&ex)) return 2;
  if (dynamic_cast<const rtreg::IngestError*>(&ex) ||
      dynamic_cast<const rtreg::DimensionMismatch*>(&ex) ||
      dynamic_cast<const rtreg::InvalidDesign*>(&ex) ||
      dynamic_cast<const rtreg::ZeroVarianceColumn*>(&ex) ||
      dynamic_cast<const rtreg::EmptyDataset*>(&ex)) {
    return 3;
  }
  if (const auto* stage = dynamic_cast<const rtreg::StageError*>(&ex)) {
    return stage->stage() == "prepare" ? 3 : 4;
  }
  if (dynamic_cast<const rtreg::IoError*>(&ex)) return 5;
  if (dynamic_cast<const rtreg::Error*>(&ex)) return 4;  // solver and friends
  return 1;
}

json load_config(const GlobalOptions& opts) {
  if (opts.config_path.empty()) return json::object();
  const json j = rtreg::read_json_file(opts.config_path);
  for (const auto& [key, value] : j.items()) {
    if (key != "sim" && key != "pipeline" && key != "bench") {
      throw rtreg::ConfigError("config: unknown section '" + key +
                               "' (expected sim|pipeline|bench)");
    }
  }
  return j;
}

rtreg::SimDesign sim_design(const json& config, const GlobalOptions& opts) {
  rtreg::SimDesign design = config.contains("sim")
                                ? rtreg::sim_design_from_json(config.at("sim"))
                                : rtreg::SimDesign{};
  if (opts.seed) design.seed = *opts.seed;
  return design;
}

rtreg::PipelineConfig pipeline_config(const json& config, const GlobalOptions& opts) {
  rtreg::PipelineConfig pc = config.contains("pipeline")
                                 ? rtreg::pipeline_config_from_json(config.at("pipeline"))
                                 : rtreg::PipelineConfig{};
  if (opts.seed) pc.seed = *opts.seed;
  return pc;
}

fs::path ensure_out_dir(const GlobalOptions& opts) {
  fs::path dir(opts.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) {
    throw rtreg::IoError("cannot create output directory '" + dir.string() + "'");
  }
  return dir;
}

struct DataArgs {
  std::string target_path;
  std::string target_response;
  std::vector<std::string> source_paths;
  std::vector<std::string> source_responses;

  rtreg::LabeledDataset load_target() const {
    std::optional<fs::path> resp;
    if (!target_response.empty()) resp = target_response;
    return rtreg::load_dataset_csv(target_path, target_response.empty(), resp, "target",
                                   rtreg::DatasetKind::target);
  }

  std::vector<rtreg::LabeledDataset> load_sources() const {
    if (!source_responses.empty() && source_responses.size() != source_paths.size()) {
      throw rtreg::ConfigError("--source-response count must match --source count");
    }
    std::vector<rtreg::LabeledDataset> out;
    for (size_t i = 0; i < source_paths.size(); ++i) {
      std::optional<fs::path> resp;
      if (!source_responses.empty()) resp = source_responses[i];
      out.push_back(rtreg::load_dataset_csv(source_paths[i], source_responses.empty(),
                                            resp, "source_" + std::to_string(i + 1),
                                            rtreg::DatasetKind::source));
    }
    return out;
  }
};

void add_data_options(CLI::App* cmd, DataArgs& args, bool sources_required) {
  cmd->add_option("--target", args.target_path, "target CSV (response in last column)")
      ->required();
  cmd->add_option("--target-response", args.target_response,
                  "separate single-column response CSV for the target");
  auto* src = cmd->add_option("--source", args.source_paths,
                              "source CSV (repeatable, response in last column)");
  if (sources_required) src->required();
  cmd->add_option("--source-response", args.source_responses,
                  "separate response CSVs matching --source order");
}

int cmd_simulate(const GlobalOptions& opts, const json& config) {
  const rtreg::SimDesign design = sim_design(config, opts);
  const rtreg::SimInstance inst = rtreg::generate(design);
  const fs::path dir = ensure_out_dir(opts);

  rtreg::save_dataset_csv(dir / "target.csv", inst.target);
  for (size_t j = 0; j < inst.sources.size(); ++j) {
    rtreg::save_dataset_csv(dir / ("source_" + std::to_string(j + 1) + ".csv"),
                            inst.sources[j]);
  }

  json truth;
  truth["schema_version"] = 1;
  truth["design"] = rtreg::to_json(design);
  truth["seed"] = design.seed;
  truth["beta"] = rtreg::to_json(inst.truth_beta);
  truth["e"] = rtreg::to_json(inst.truth_e);
  json shifts = json::array();
  for (size_t j = 0; j < inst.sources.size(); ++j) {
    shifts.push_back(inst.true_shift_l1(j));
  }
  truth["source_shift_l1"] = shifts;
  json source_betas = json::array();
  for (const auto& b : inst.truth_source_betas) source_betas.push_back(rtreg::to_json(b));
  truth["source_betas"] = source_betas;
  rtreg::write_json_file(dir / "truth.json", truth);

  std::cout << "simulate: wrote target.csv, " << inst.sources.size()
            << " source files and truth.json to " << dir.string() << "\n";
  return 0;
}

int cmd_fit(const GlobalOptions& opts, const json& config, const DataArgs& data,
            bool oracle, const std::vector<long long>& known_a_1based) {
  const rtreg::LabeledDataset target = data.load_target();
  const std::vector<rtreg::LabeledDataset> sources = data.load_sources();
  const rtreg::PipelineConfig pc = pipeline_config(config, opts);

  rtreg::FitReport report;
  if (oracle) {
    std::vector<Eigen::Index> known;
    for (long long v : known_a_1based) {
      if (v < 1 || static_cast<size_t>(v) > sources.size()) {
        throw rtreg::ConfigError("--known-a index " + std::to_string(v) +
                                 " out of range 1.." + std::to_string(sources.size()));
      }
      known.push_back(static_cast<Eigen::Index>(v - 1));
    }
    report = rtreg::run_oracle(target, sources, known, pc);
  } else {
    report = rtreg::run_rtl(target, sources, pc);
  }

  const fs::path dir = ensure_out_dir(opts);
  rtreg::write_json_file(dir / "report.json", rtreg::to_json(report));

  std::cout << "fit: mode=" << rtreg::to_string(report.mode)
            << " selected=" << report.selection.selected.size()
            << " sigma_hat=" << report.sigma.sigma_hat
            << " threshold=" << report.transfer.threshold_used
            << " nnz=" << report.transfer.beta_thresholded.nnz() << "\n";
  std::cout << "fit: wrote " << (dir / "report.json").string() << "\n";
  return 0;
}

int cmd_select(const GlobalOptions& opts, const json& config, const DataArgs& data) {
  const rtreg::LabeledDataset target = data.load_target();
  const std::vector<rtreg::LabeledDataset> sources = data.load_sources();
  const rtreg::PipelineConfig pc = pipeline_config(config, opts);

  rtreg::validate_panel(target, sources);
  auto [std_target, record] = rtreg::standardize(target);
  std::vector<rtreg::LabeledDataset> std_sources;
  for (const auto& s : sources) std_sources.push_back(rtreg::standardize_with(s, record));

  const rtreg::PilotFit pilot =
      rtreg::pilot_robust_fit(std_target, pc.solver, pc.aht.C_tilde);
  rtreg::ShiftPenalties pen = pc.shift_penalties;
  pen.sigma_hat = pilot.sigma.sigma_hat;
  const auto table = rtreg::estimate_shifts(std_target, std_sources, pen, pc.solver);
  const Eigen::Index cap =
      pc.A_cap < 0 ? static_cast<Eigen::Index>(sources.size()) : pc.A_cap;
  const rtreg::SelectionResult sel = rtreg::sds_select(table, pc.h, cap);

  json out = rtreg::to_json(sel);
  out["schema_version"] = 1;
  out["sigma_hat"] = pilot.sigma.sigma_hat;
  out["corruption_count"] = pilot.corruption_count;
  json mmd = json::array();
  for (const auto& s : sources) {
    const double bw = rtreg::mmd_median_bandwidth(target.design, s.design);
    mmd.push_back(json{{"source_id", s.id},
                       {"bandwidth", bw},
                       {"mmd", rtreg::mmd_rbf(target.design, s.design, bw)}});
  }
  out["mmd"] = mmd;

  const fs::path dir = ensure_out_dir(opts);
  rtreg::write_json_file(dir / "selection.json", out);
  std::cout << "select: " << sel.selected.size() << " of " << sources.size()
            << " sources admitted; validation=" << sel.validation_index + 1 << "\n";
  std::cout << "select: wrote " << (dir / "selection.json").string() << "\n";
  return 0;
}

struct BenchSpec {
  std::vector<rtreg::SimDesign> designs;
  std::vector<std::string> methods{"lasso", "rlasso", "rtl"};
  int reps = 1000;
};

BenchSpec bench_spec(const json& config, const GlobalOptions& opts) {
  BenchSpec spec;
  json bench = config.contains("bench") ? config.at("bench") : json::object();
  for (const auto& [key, value] : bench.items()) {
    if (key != "r_grid" && key != "designs" && key != "methods" && key != "reps") {
      throw rtreg::ConfigError("bench: unknown field '" + key + "'");
    }
  }
  spec.reps = bench.value("reps", spec.reps);
  if (spec.reps < 1) throw rtreg::ConfigError("bench.reps must be >= 1");
  if (bench.contains("methods")) {
    spec.methods = bench.at("methods").get<std::vector<std::string>>();
  }
  if (!opts.method.empty()) spec.methods = {opts.method};

  if (bench.contains("designs")) {
    for (const auto& dj : bench.at("designs")) {
      spec.designs.push_back(rtreg::sim_design_from_json(dj));
      if (opts.seed) spec.designs.back().seed = *opts.seed;
    }
  } else {
    rtreg::SimDesign base = sim_design(config, opts);
    std::vector<double> r_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    if (bench.contains("r_grid")) r_grid = bench.at("r_grid").get<std::vector<double>>();
    for (double r : r_grid) {
      rtreg::SimDesign d = base;
      d.corruption_fraction = r;
      spec.designs.push_back(d);
    }
  }
  if (spec.designs.empty()) throw rtreg::ConfigError("bench: no designs to run");
  return spec;
}

// The manifest marks completed cells so an interrupted run resumes instead
// of recomputing.
json bench_fingerprint(const BenchSpec& spec, const rtreg::PipelineConfig& pc) {
  json designs = json::array();
  for (const auto& d : spec.designs) designs.push_back(rtreg::to_json(d));
  return json{{"designs", designs},
              {"methods", spec.methods},
              {"reps", spec.reps},
              {"pipeline", rtreg::to_json(pc)}};
}

void write_manifest_atomic(const fs::path& path, const json& manifest) {
  const fs::path tmp = path.string() + ".tmp";
  rtreg::write_json_file(tmp, manifest);
  fs::rename(tmp, path);
}

int cmd_bench(const GlobalOptions& opts, const json& config) {
  const BenchSpec spec = bench_spec(config, opts);
  const rtreg::PipelineConfig pc = pipeline_config(config, opts);
  const fs::path dir = ensure_out_dir(opts);
  const fs::path manifest_path = dir / "manifest.json";
  const json fingerprint = bench_fingerprint(spec, pc);

  // Cells completed by a previous interrupted run with the same spec.
  std::map<std::string, rtreg::BenchmarkCell> done;
  if (fs::exists(manifest_path)) {
    try {
      const json prev = rtreg::read_json_file(manifest_path);
      if (prev.value("status", "") != "complete" && prev.contains("fingerprint") &&
          prev.at("fingerprint") == fingerprint) {
        for (const auto& cj : prev.at("cells")) {
          rtreg::BenchmarkCell cell = rtreg::benchmark_cell_from_json(cj);
          done[cj.at("key").get<std::string>()] = cell;
        }
        if (!done.empty() && opts.verbose) {
          std::cerr << "bench: resuming, " << done.size() << " cells already done\n";
        }
      }
    } catch (const std::exception&) {
      // Unreadable manifest: start over.
      done.clear();
    }
  }

  auto cell_key = [](size_t design_idx, const std::string& method) {
    return std::to_string(design_idx) + ":" + method;
  };

  json manifest{{"schema_version", 1},
                {"rtreg_version", rtreg::kVersion},
                {"fingerprint", fingerprint},
                {"status", "running"},
                {"cells", json::array()}};
  std::map<std::string, json> cell_json;
  for (const auto& [key, cell] : done) {
    json cj = rtreg::to_json(cell);
    cj["key"] = key;
    cell_json[key] = cj;
  }

  auto flush_manifest = [&] {
    manifest["cells"] = json::array();
    for (const auto& [key, cj] : cell_json) manifest["cells"].push_back(cj);
    write_manifest_atomic(manifest_path, manifest);
  };
  flush_manifest();

  const rtreg::BenchmarkTable table = rtreg::sweep(
      spec.designs, spec.methods, spec.reps, pc, opts.jobs,
      [&](size_t design_idx, const rtreg::BenchmarkCell& cell) {
        const std::string key = cell_key(design_idx, cell.method);
        json cj = rtreg::to_json(cell);
        cj["key"] = key;
        cell_json[key] = cj;
        flush_manifest();
      },
      [&](size_t design_idx, const std::string& method, rtreg::BenchmarkCell& cell) {
        const auto it = done.find(cell_key(design_idx, method));
        if (it == done.end()) return false;
        cell = it->second;
        cell.design = spec.designs[design_idx];
        cell.method = method;
        return true;
      });

  std::ofstream csv(dir / "results.csv");
  if (!csv) throw rtreg::IoError("cannot write results.csv");
  csv << table.to_csv();
  csv.close();

  manifest["status"] = "complete";
  flush_manifest();

  std::cout << "bench: " << table.cells.size() << " cells, " << spec.reps
            << " reps each; wrote " << (dir / "results.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust transfer regression toolkit"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "JSON config file");
  app.add_option("--seed", opts.seed, "override the config seed");
  app.add_option("--jobs", opts.jobs, "worker threads for bench")->check(CLI::PositiveNumber);
  app.add_option("--out", opts.out_dir, "output directory (default .)");
  app.add_option("--method", opts.method, "restrict bench to one method tag");
  app.add_flag("--verbose", opts.verbose, "chatty progress on stderr");

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic corrupted panel");
  DataArgs fit_args, oracle_args, select_args;
  auto* fit = app.add_subcommand("fit", "run the full pipeline with source screening");
  add_data_options(fit, fit_args, false);
  auto* select = app.add_subcommand("select", "source screening only");
  add_data_options(select, select_args, true);
  auto* oracle = app.add_subcommand("oracle", "run the pipeline with a known source set");
  add_data_options(oracle, oracle_args, true);
  std::vector<long long> known_a;
  oracle->add_option("--known-a", known_a, "1-based indices of the known good sources")
      ->required();
  auto* bench = app.add_subcommand("bench", "Monte-Carlo sweep to CSV");
  for (auto* sub : {simulate, fit, select, oracle, bench}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const json config = load_config(opts);
    if (simulate->parsed()) return cmd_simulate(opts, config);
    if (fit->parsed()) return cmd_fit(opts, config, fit_args, false, {});
    if (select->parsed()) return cmd_select(opts, config, select_args);
    if (oracle->parsed()) return cmd_fit(opts, config, oracle_args, true, known_a);
    if (bench->parsed()) return cmd_bench(opts, config);
  } catch (const std::exception& ex) {
    std::cerr << "rtreg: error: " << ex.what() << "\n";
    return classify_exit(ex);
  }
  return 0;
}
