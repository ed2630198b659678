#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "sl/common.hpp"
#include "sl/csv.hpp"
#include "sl/lasso.hpp"
#include "sl/metrics.hpp"
#include "sl/screens.hpp"
#include "sl/simulate.hpp"
#include "sl/superlearner.hpp"

namespace sl {

enum class EstimatorKind { LassoAlone, SL, SLMinusLasso };

inline std::string to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::LassoAlone:
      return "lasso";
    case EstimatorKind::SL:
      return "sl";
    case EstimatorKind::SLMinusLasso:
      return "sl-minus-lasso";
  }
  return "";
}

inline EstimatorKind parse_estimator(std::string_view s) {
  if (s == "lasso") return EstimatorKind::LassoAlone;
  if (s == "sl") return EstimatorKind::SL;
  if (s == "sl-minus-lasso") return EstimatorKind::SLMinusLasso;
  throw Error("unknown estimator '" + std::string(s) + "' (expected lasso, sl, sl-minus-lasso)");
}

// One estimator arm of the factorial design. The screen set is meaningless
// for the plain lasso, recorded as "na".
struct EstimatorArm {
  EstimatorKind kind = EstimatorKind::LassoAlone;
  ScreenSetName screen_set = ScreenSetName::NoScreens;

  std::string estimator_name() const { return to_string(kind); }
  std::string screen_set_label() const {
    return kind == EstimatorKind::LassoAlone ? "na" : to_string(screen_set);
  }
};

struct BenchRecord {
  std::size_t n = 0, p = 0;
  Relationship relationship = Relationship::Linear;
  Strength strength = Strength::Strong;
  Correlation correlation = Correlation::Uncorrelated;
  OutcomeKind outcome = OutcomeKind::Continuous;
  std::string estimator;
  std::string screen_set;
  int rep = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  double seconds = 0.0;
  std::string error;

  auto sort_key() const {
    return std::make_tuple(n, p, to_string(relationship), to_string(strength),
                           to_string(correlation), to_string(outcome), estimator, screen_set,
                           rep);
  }
};

struct RunConfig {
  std::vector<std::size_t> ns{200, 500, 1000};
  std::vector<std::size_t> ps{10, 50};
  std::vector<Relationship> relationships{Relationship::Linear};
  std::vector<Strength> strengths{Strength::Strong};
  std::vector<Correlation> correlations{Correlation::Uncorrelated};
  std::vector<OutcomeKind> outcomes{OutcomeKind::Continuous};
  std::vector<EstimatorKind> estimators{EstimatorKind::LassoAlone, EstimatorKind::SL,
                                        EstimatorKind::SLMinusLasso};
  std::vector<ScreenSetName> screen_sets{ScreenSetName::NoScreens, ScreenSetName::LassoOnly,
                                         ScreenSetName::All, ScreenSetName::AllMinusLasso};
  int replicates = 50;
  std::uint64_t master_seed = 20260811;
  std::size_t test_size = 10000;
  std::size_t oracle_test_size = 1000000;
  int workers = 0;  // 0: SLBENCH_WORKERS env var, then hardware concurrency
  bool timing = true;
  std::string out;

  std::vector<EstimatorArm> arms() const {
    std::vector<EstimatorArm> out_arms;
    for (EstimatorKind e : estimators) {
      if (e == EstimatorKind::LassoAlone) {
        out_arms.push_back({e, ScreenSetName::NoScreens});
      } else {
        for (ScreenSetName s : screen_sets) out_arms.push_back({e, s});
      }
    }
    return out_arms;
  }

  std::vector<ScenarioConfig> cells() const {
    std::vector<ScenarioConfig> out_cells;
    for (std::size_t n : ns)
      for (std::size_t p : ps)
        for (Relationship r : relationships)
          for (Strength s : strengths)
            for (Correlation c : correlations)
              for (OutcomeKind o : outcomes)
                out_cells.push_back({n, p, r, s, c, o, 0});
    return out_cells;
  }

  int effective_workers() const {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("SLBENCH_WORKERS")) {
      const int v = std::atoi(env);
      if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
  }
};

inline void validate(const RunConfig& c) {
  require(c.replicates >= 1, "config: replicates must be at least 1");
  require(!c.ns.empty() && !c.ps.empty(), "config: n and p lists must not be empty");
  require(!c.estimators.empty(), "config: estimator list must not be empty");
  require(!c.screen_sets.empty(), "config: screen set list must not be empty");
  require(c.test_size >= 10, "config: test_size too small");
  for (std::size_t p : c.ps) require(p >= 6, "config: p must be at least 6");
  for (std::size_t n : c.ns) require(n >= 2, "config: n must be at least 2");
}

namespace bench_detail {

inline std::string sanitize_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

inline std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", s);
  return buf;
}

inline Relationship parse_relationship(std::string_view s) {
  if (s == "linear") return Relationship::Linear;
  if (s == "nonlinear") return Relationship::Nonlinear;
  throw Error("unknown relationship '" + std::string(s) + "'");
}

inline Strength parse_strength(std::string_view s) {
  if (s == "weak") return Strength::Weak;
  if (s == "strong") return Strength::Strong;
  throw Error("unknown strength '" + std::string(s) + "'");
}

inline Correlation parse_correlation(std::string_view s) {
  if (s == "uncorrelated") return Correlation::Uncorrelated;
  if (s == "correlated") return Correlation::Correlated;
  throw Error("unknown correlation '" + std::string(s) + "'");
}

inline OutcomeKind parse_outcome(std::string_view s) {
  if (s == "continuous") return OutcomeKind::Continuous;
  if (s == "binary") return OutcomeKind::Binary;
  throw Error("unknown outcome '" + std::string(s) + "'");
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!cur.empty()) out.push_back(std::exchange(cur, {}));
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace bench_detail

// Apply one "key = values" setting; shared by the config file parser and
// the CLI flag overrides.
inline void apply_config_key(RunConfig& cfg, const std::string& key,
                             const std::string& value) {
  using namespace bench_detail;
  const std::vector<std::string> vals = split_ws(value);
  require(!vals.empty(), "config: empty value for key '" + key + "'");
  const auto as_sizes = [&] {
    std::vector<std::size_t> out;
    for (const std::string& v : vals)
      out.push_back(static_cast<std::size_t>(detail::parse_int(v, key)));
    return out;
  };
  if (key == "n") {
    cfg.ns = as_sizes();
  } else if (key == "p") {
    cfg.ps = as_sizes();
  } else if (key == "relationship") {
    cfg.relationships.clear();
    for (const auto& v : vals) cfg.relationships.push_back(parse_relationship(v));
  } else if (key == "strength") {
    cfg.strengths.clear();
    for (const auto& v : vals) cfg.strengths.push_back(parse_strength(v));
  } else if (key == "correlation") {
    cfg.correlations.clear();
    for (const auto& v : vals) cfg.correlations.push_back(parse_correlation(v));
  } else if (key == "outcome") {
    cfg.outcomes.clear();
    for (const auto& v : vals) cfg.outcomes.push_back(parse_outcome(v));
  } else if (key == "estimators") {
    cfg.estimators.clear();
    for (const auto& v : vals) cfg.estimators.push_back(parse_estimator(v));
  } else if (key == "screen_sets") {
    cfg.screen_sets.clear();
    for (const auto& v : vals) cfg.screen_sets.push_back(parse_screen_set(v));
  } else if (key == "replicates") {
    cfg.replicates = detail::parse_int(vals[0], key);
  } else if (key == "master_seed") {
    unsigned long long seed = 0;
    auto [p, ec] = std::from_chars(vals[0].data(), vals[0].data() + vals[0].size(), seed);
    require(ec == std::errc{} && p == vals[0].data() + vals[0].size(),
            "config: cannot parse master_seed");
    cfg.master_seed = seed;
  } else if (key == "test_size") {
    cfg.test_size = static_cast<std::size_t>(detail::parse_int(vals[0], key));
  } else if (key == "oracle_test_size") {
    cfg.oracle_test_size = static_cast<std::size_t>(detail::parse_int(vals[0], key));
  } else if (key == "workers") {
    cfg.workers = detail::parse_int(vals[0], key);
  } else if (key == "timing") {
    if (vals[0] == "on")
      cfg.timing = true;
    else if (vals[0] == "off")
      cfg.timing = false;
    else
      throw Error("config: timing must be 'on' or 'off'");
  } else if (key == "out") {
    cfg.out = vals[0];
  } else {
    throw Error("config: unknown key '" + key + "'");
  }
}

// Flat INI config: [scenarios] holds the design factors, [run] the
// execution settings. '#' and ';' start comments.
inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open file '" + path + "'");
  RunConfig cfg;
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      require(line.back() == ']', "config: malformed section at line " + std::to_string(line_no));
      section = line.substr(1, line.size() - 2);
      require(section == "scenarios" || section == "run",
              "config: unknown section '" + section + "'");
      continue;
    }
    const std::size_t eq = line.find('=');
    require(eq != std::string::npos, "config: expected 'key = value' at line " +
                                         std::to_string(line_no));
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    apply_config_key(cfg, key, value);
  }
  return cfg;
}

// Fit one estimator arm on a training draw and score it on an independent
// test draw. All randomness derives from the task seed.
inline BenchRecord run_one(const ScenarioConfig& cell, const EstimatorArm& arm, int rep,
                           const RunConfig& cfg) {
  BenchRecord rec;
  rec.n = cell.n;
  rec.p = cell.p;
  rec.relationship = cell.relationship;
  rec.strength = cell.strength;
  rec.correlation = cell.correlation;
  rec.outcome = cell.outcome_kind;
  rec.estimator = arm.estimator_name();
  rec.screen_set = arm.screen_set_label();
  rec.rep = rep;
  rec.metric = cell.outcome_kind == OutcomeKind::Continuous ? "r_squared" : "auc";

  const std::string canonical = cell.canonical() + "|" + rec.estimator + "|" + rec.screen_set +
                                "|" + std::to_string(rep) + "|" +
                                std::to_string(cfg.master_seed);
  rec.seed = fnv1a64(canonical);

  const auto start = std::chrono::steady_clock::now();
  try {
    ScenarioConfig train_cfg = cell;
    train_cfg.seed = derive_seed(rec.seed, "train");
    const Dataset train = generate_dataset(train_cfg);

    ScenarioConfig test_cfg = cell;
    test_cfg.n = cfg.test_size;
    test_cfg.seed = derive_seed(rec.seed, "test");
    const Dataset test = generate_dataset(test_cfg);

    std::vector<double> pred;
    if (arm.kind == EstimatorKind::LassoAlone) {
      const LassoModel model = fit_lasso(train, 10, Rng(derive_seed(rec.seed, "fit")));
      pred = model.predict(test.x);
    } else {
      const std::vector<ScreenSpec> screens = expand_screen_set(arm.screen_set, cell.p);
      const std::vector<LearnerSpec> learners = learner_grid(arm.kind == EstimatorKind::SL);
      const SLModel model =
          fit_superlearner(train, screens, learners, 5, Rng(derive_seed(rec.seed, "fit")));
      pred = predict_sl(model, test.x);
    }
    rec.value = cell.outcome_kind == OutcomeKind::Continuous
                    ? r_squared(pred, {test.y.data(), test.y.size()})
                    : auc(pred, {test.y.data(), test.y.size()});
  } catch (const std::exception& e) {
    rec.value = std::numeric_limits<double>::quiet_NaN();
    rec.error = bench_detail::sanitize_field(e.what());
  }
  if (cfg.timing) {
    const auto elapsed = std::chrono::steady_clock::now() - start;
    rec.seconds = std::chrono::duration<double>(elapsed).count();
  }
  return rec;
}

// Runs the scenario x estimator x replicate sweep on a worker pool. Records
// carry full keys, so results are independent of worker count and
// completion order; per-replicate failures become NaN rows, never aborts.
inline std::vector<BenchRecord> run_benchmark(const RunConfig& cfg,
                                              std::FILE* progress = nullptr) {
  validate(cfg);
  const std::vector<ScenarioConfig> cells = cfg.cells();
  const std::vector<EstimatorArm> arms = cfg.arms();

  struct Task {
    const ScenarioConfig* cell;
    const EstimatorArm* arm;
    int rep;
  };
  std::vector<Task> tasks;
  for (const ScenarioConfig& cell : cells)
    for (const EstimatorArm& arm : arms)
      for (int rep = 0; rep < cfg.replicates; ++rep) tasks.push_back({&cell, &arm, rep});

  std::vector<BenchRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  const int workers = std::max(1, std::min<int>(cfg.effective_workers(),
                                                static_cast<int>(tasks.size())));

  const auto worker = [&] {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) break;
      const Task& t = tasks[idx];
      records[idx] = run_one(*t.cell, *t.arm, t.rep, cfg);
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress && (d % 10 == 0 || d == tasks.size())) {
        std::fprintf(progress, "\r%zu/%zu tasks", d, tasks.size());
        std::fflush(progress);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  if (progress) std::fprintf(progress, "\n");

  std::sort(records.begin(), records.end(),
            [](const BenchRecord& a, const BenchRecord& b) { return a.sort_key() < b.sort_key(); });
  return records;
}

inline const char* kRecordHeader =
    "n,p,relationship,strength,correlation,outcome,estimator,screen_set,rep,seed,metric,value,"
    "seconds,error";

inline void write_records_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << kRecordHeader << '\n';
  for (const BenchRecord& r : records) {
    out << r.n << ',' << r.p << ',' << to_string(r.relationship) << ',' << to_string(r.strength)
        << ',' << to_string(r.correlation) << ',' << to_string(r.outcome) << ',' << r.estimator
        << ',' << r.screen_set << ',' << r.rep << ',' << r.seed << ',' << r.metric << ','
        << format_double(r.value) << ',' << bench_detail::format_seconds(r.seconds) << ','
        << r.error << '\n';
  }
}

inline void write_records_csv(const std::string& path, const std::vector<BenchRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write results file '" + path + "'");
  write_records_csv(out, records);
  if (!out) throw Error("write to '" + path + "' failed");
}

inline std::vector<BenchRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open results file '" + path + "'");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "results file '" + path + "' is empty");
  std::vector<BenchRecord> records;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    require(cells.size() == 14, "results file: expected 14 columns, got " +
                                    std::to_string(cells.size()));
    BenchRecord r;
    r.n = static_cast<std::size_t>(detail::parse_int(cells[0], "n"));
    r.p = static_cast<std::size_t>(detail::parse_int(cells[1], "p"));
    r.relationship = bench_detail::parse_relationship(cells[2]);
    r.strength = bench_detail::parse_strength(cells[3]);
    r.correlation = bench_detail::parse_correlation(cells[4]);
    r.outcome = bench_detail::parse_outcome(cells[5]);
    r.estimator = cells[6];
    r.screen_set = cells[7];
    r.rep = detail::parse_int(cells[8], "rep");
    {
      unsigned long long seed = 0;
      auto [p, ec] = std::from_chars(cells[9].data(), cells[9].data() + cells[9].size(), seed);
      require(ec == std::errc{}, "results file: bad seed");
      (void)p;
      r.seed = seed;
    }
    r.metric = cells[10];
    r.value = cells[11] == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                 : detail::parse_real(cells[11], "value");
    r.seconds = detail::parse_real(cells[12], "seconds");
    r.error = cells[13];
    records.push_back(std::move(r));
  }
  require(!records.empty(), "results file '" + path + "' has no data rows");
  return records;
}

// One summary row per (scenario-minus-n, estimator, screen set, n): mean
// metric over non-failed replicates, Monte Carlo standard error, counts.
struct SummaryRow {
  std::size_t p = 0;
  std::string relationship, strength, correlation, outcome, estimator, screen_set;
  std::size_t n = 0;
  std::string metric;
  double mean_value = 0.0;
  double se = 0.0;
  std::size_t replicates = 0;
  std::size_t errors = 0;
  bool single_replicate = false;

  auto sort_key() const {
    return std::make_tuple(p, relationship, strength, correlation, outcome, estimator,
                           screen_set, n);
  }
};

inline std::vector<SummaryRow> aggregate_plot_data(const std::vector<BenchRecord>& records) {
  require(!records.empty(), "aggregate: no records");
  std::map<std::string, SummaryRow> groups;
  std::map<std::string, std::vector<double>> values;
  for (const BenchRecord& r : records) {
    const std::string key = std::to_string(r.p) + "|" + to_string(r.relationship) + "|" +
                            to_string(r.strength) + "|" + to_string(r.correlation) + "|" +
                            to_string(r.outcome) + "|" + r.estimator + "|" + r.screen_set +
                            "|" + std::to_string(r.n) + "|" + r.metric;
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) {
      it->second.p = r.p;
      it->second.relationship = to_string(r.relationship);
      it->second.strength = to_string(r.strength);
      it->second.correlation = to_string(r.correlation);
      it->second.outcome = to_string(r.outcome);
      it->second.estimator = r.estimator;
      it->second.screen_set = r.screen_set;
      it->second.n = r.n;
      it->second.metric = r.metric;
    }
    if (std::isnan(r.value)) {
      ++it->second.errors;
    } else {
      values[key].push_back(r.value);
    }
  }
  std::vector<SummaryRow> rows;
  for (auto& [key, row] : groups) {
    const std::vector<double>& v = values[key];
    row.replicates = v.size();
    if (!v.empty()) {
      row.mean_value = mean_of(v);
      if (v.size() == 1) {
        row.se = 0.0;
        row.single_replicate = true;
      } else {
        double ss = 0.0;
        for (double x : v) ss += (x - row.mean_value) * (x - row.mean_value);
        row.se = std::sqrt(ss / static_cast<double>(v.size() - 1)) /
                 std::sqrt(static_cast<double>(v.size()));
      }
    } else {
      row.mean_value = std::numeric_limits<double>::quiet_NaN();
      row.single_replicate = true;
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(),
            [](const SummaryRow& a, const SummaryRow& b) { return a.sort_key() < b.sort_key(); });
  return rows;
}

inline void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write summary file '" + path + "'");
  out << "p,relationship,strength,correlation,outcome,estimator,screen_set,n,metric,"
         "mean_value,se,replicates,errors,single_replicate\n";
  for (const SummaryRow& r : rows) {
    out << r.p << ',' << r.relationship << ',' << r.strength << ',' << r.correlation << ','
        << r.outcome << ',' << r.estimator << ',' << r.screen_set << ',' << r.n << ','
        << r.metric << ',' << format_double(r.mean_value) << ',' << format_double(r.se) << ','
        << r.replicates << ',' << r.errors << ',' << (r.single_replicate ? 1 : 0) << '\n';
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

// Best-possible performance per scenario panel (the n axis collapses: the
// oracle does not depend on the training sample size).
struct OracleRow {
  std::size_t p = 0;
  std::string relationship, strength, correlation, outcome;
  std::string metric;
  double value = 0.0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
};

inline std::vector<OracleRow> compute_oracles(const RunConfig& cfg) {
  validate(cfg);
  std::vector<OracleRow> rows;
  for (std::size_t p : cfg.ps)
    for (Relationship r : cfg.relationships)
      for (Strength s : cfg.strengths)
        for (Correlation c : cfg.correlations)
          for (OutcomeKind o : cfg.outcomes) {
            ScenarioConfig cell{2, p, r, s, c, o, 0};
            const std::string canonical = "oracle|" + cell.canonical() + "|" +
                                          std::to_string(cfg.master_seed);
            cell.seed = fnv1a64(canonical);
            const MetricValue m = oracle_performance(cell, cfg.oracle_test_size);
            OracleRow row;
            row.p = p;
            row.relationship = to_string(r);
            row.strength = to_string(s);
            row.correlation = to_string(c);
            row.outcome = to_string(o);
            row.metric = to_string(m.name);
            row.value = m.value;
            row.n_test = cfg.oracle_test_size;
            row.seed = cell.seed;
            rows.push_back(std::move(row));
          }
  return rows;
}

inline void write_oracles_csv(const std::string& path, const std::vector<OracleRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write oracle file '" + path + "'");
  out << "p,relationship,strength,correlation,outcome,metric,value,n_test,seed\n";
  for (const OracleRow& r : rows) {
    out << r.p << ',' << r.relationship << ',' << r.strength << ',' << r.correlation << ','
        << r.outcome << ',' << r.metric << ',' << format_double(r.value) << ',' << r.n_test
        << ',' << r.seed << '\n';
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace sl
