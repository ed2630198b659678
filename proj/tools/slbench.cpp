// Benchmark harness CLI: scenario sweep, oracle table, plot aggregation.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sl/sl.hpp"

namespace {

constexpr const char* kVersion = "slkit 0.1.0";

// Exit codes: 0 success, 1 config error, 2 I/O error.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

struct Overrides {
  std::vector<std::pair<std::string, std::string>> kv;

  void add_if(const std::string& key, const std::string& value) {
    if (!value.empty()) kv.emplace_back(key, value);
  }
};

void add_scenario_flags(CLI::App* cmd, Overrides& ov) {
  static thread_local std::map<std::string, std::string> storage;
  for (const char* key : {"n", "p", "relationship", "strength", "correlation", "outcome",
                          "estimators", "screen_sets", "replicates", "master_seed", "test_size",
                          "oracle_test_size", "workers", "timing", "out"}) {
    cmd->add_option_function<std::string>(
        "--" + std::string(key),
        [&ov, key = std::string(key)](const std::string& v) { ov.add_if(key, v); },
        "override config key '" + std::string(key) + "'");
  }
}

sl::RunConfig build_config(const std::string& config_path, const Overrides& ov) {
  sl::RunConfig cfg;
  if (!config_path.empty()) cfg = sl::load_run_config(config_path);
  for (const auto& [key, value] : ov.kv) sl::apply_config_key(cfg, key, value);
  return cfg;
}

bool is_io_error(const std::string& what) {
  return what.find("cannot open") != std::string::npos ||
         what.find("cannot write") != std::string::npos ||
         what.find("write to") != std::string::npos;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Super Learner screening benchmark harness"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;

  CLI::App* simulate = app.add_subcommand("simulate", "run the benchmark sweep");
  simulate->add_option("--config", config_path, "INI config file");
  add_scenario_flags(simulate, overrides);

  CLI::App* oracle = app.add_subcommand("oracle", "compute best-possible performance");
  oracle->add_option("--config", config_path, "INI config file");
  add_scenario_flags(oracle, overrides);

  std::string in_path, out_path;
  CLI::App* plot = app.add_subcommand("plot-data", "aggregate results for plotting");
  plot->add_option("--in", in_path, "results CSV from 'simulate'")->required();
  plot->add_option("--out", out_path, "summary CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) {
      const sl::RunConfig cfg = build_config(config_path, overrides);
      sl::validate(cfg);
      const std::string out = cfg.out.empty() ? "results.csv" : cfg.out;
      std::fprintf(stderr, "scenarios=%zu arms=%zu replicates=%d workers=%d\n",
                   cfg.cells().size(), cfg.arms().size(), cfg.replicates,
                   cfg.effective_workers());
      const std::vector<sl::BenchRecord> records = sl::run_benchmark(cfg, stderr);
      sl::write_records_csv(out, records);
      std::fprintf(stderr, "wrote %zu records to %s\n", records.size(), out.c_str());
      return kExitOk;
    }
    if (oracle->parsed()) {
      const sl::RunConfig cfg = build_config(config_path, overrides);
      sl::validate(cfg);
      const std::string out = cfg.out.empty() ? "oracles.csv" : cfg.out;
      const std::vector<sl::OracleRow> rows = sl::compute_oracles(cfg);
      sl::write_oracles_csv(out, rows);
      std::fprintf(stderr, "wrote %zu oracle rows to %s\n", rows.size(), out.c_str());
      return kExitOk;
    }
    if (plot->parsed()) {
      const std::vector<sl::BenchRecord> records = sl::read_records_csv(in_path);
      const std::vector<sl::SummaryRow> rows = sl::aggregate_plot_data(records);
      sl::write_summary_csv(out_path, rows);
      std::fprintf(stderr, "wrote %zu summary rows to %s\n", rows.size(), out_path.c_str());
      return kExitOk;
    }
  } catch (const sl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_io_error(e.what()) ? kExitIo : kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
