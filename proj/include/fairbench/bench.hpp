#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fairbench/bundle.hpp"
#include "fairbench/metrics.hpp"
#include "fairbench/models.hpp"
#include "fairbench/selection.hpp"

namespace fairbench {

// Hyperparameter grid axes. Each combination is one grid point. Depth is a
// separate axis per model kind: `layers` for the MLP head count, and
// `gcn_layers` for the GCN (conv layers + head; 3 means two convolutions).
struct GridAxes {
  std::vector<int> layers = {2};
  std::vector<int> gcn_layers = {3};
  std::vector<int> hidden = {16};
  std::vector<double> lr = {1e-2};
  std::vector<double> weight_decay = {1e-5};
  std::vector<double> dropout = {0.5};
  int epochs = 300;

  nlohmann::json to_json() const {
    return nlohmann::json{{"layers", layers},   {"gcn_layers", gcn_layers},
                          {"hidden", hidden},   {"lr", lr},
                          {"weight_decay", weight_decay},
                          {"dropout", dropout}, {"epochs", epochs}};
  }

  static GridAxes from_json(const nlohmann::json& j) {
    GridAxes g;
    if (j.contains("layers")) g.layers = j["layers"].get<std::vector<int>>();
    if (j.contains("gcn_layers")) g.gcn_layers = j["gcn_layers"].get<std::vector<int>>();
    if (j.contains("hidden")) g.hidden = j["hidden"].get<std::vector<int>>();
    if (j.contains("lr")) g.lr = j["lr"].get<std::vector<double>>();
    if (j.contains("weight_decay")) g.weight_decay = j["weight_decay"].get<std::vector<double>>();
    if (j.contains("dropout")) g.dropout = j["dropout"].get<std::vector<double>>();
    g.epochs = j.value("epochs", g.epochs);
    return g;
  }

  // Materialized configs in axis order (layers, hidden, lr, weight_decay,
  // dropout), each axis sorted ascending, so "first best" tie-breaking picks
  // the lexicographically smallest point.
  std::vector<ModelConfig> points(ModelKind kind) const {
    GridAxes sorted = *this;
    std::sort(sorted.layers.begin(), sorted.layers.end());
    std::sort(sorted.gcn_layers.begin(), sorted.gcn_layers.end());
    std::sort(sorted.hidden.begin(), sorted.hidden.end());
    std::sort(sorted.lr.begin(), sorted.lr.end());
    std::sort(sorted.weight_decay.begin(), sorted.weight_decay.end());
    std::sort(sorted.dropout.begin(), sorted.dropout.end());
    std::vector<ModelConfig> pts;
    const auto& depth_axis = kind == ModelKind::gcn ? sorted.gcn_layers : sorted.layers;
    for (int layers : depth_axis)
      for (int hidden : sorted.hidden)
        for (double lr : sorted.lr)
          for (double wd : sorted.weight_decay)
            for (double dr : sorted.dropout) {
              ModelConfig c;
              c.kind = kind;
              c.layers = layers;
              c.hidden = hidden;
              c.lr = lr;
              c.weight_decay = wd;
              c.dropout = dr;
              c.epochs = sorted.epochs;
              pts.push_back(c);
            }
    return pts;
  }
};

struct PlanDataset {
  std::string name;
  std::filesystem::path bundle;
};

struct BenchPlan {
  std::vector<PlanDataset> datasets;
  std::vector<ModelKind> methods;
  GridAxes grid;
  std::vector<std::uint64_t> seeds;
  SelectionPolicy selection;

  void validate() const {
    if (datasets.empty()) throw std::invalid_argument("plan: no datasets");
    if (methods.empty()) throw std::invalid_argument("plan: no methods");
    if (seeds.size() < 2) throw std::invalid_argument("plan: at least 2 seeds required");
  }

  static BenchPlan from_json(const nlohmann::json& j) {
    BenchPlan p;
    for (const auto& d : j.at("datasets"))
      p.datasets.push_back({d.at("name").get<std::string>(),
                            std::filesystem::path(d.at("bundle").get<std::string>())});
    for (const auto& m : j.at("methods"))
      p.methods.push_back(parse_model_kind(m.get<std::string>()));
    if (j.contains("grid")) p.grid = GridAxes::from_json(j["grid"]);
    p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("selection")) {
      const auto& s = j["selection"];
      p.selection.strategy = parse_strategy(s.value("strategy", std::string("unified")));
      p.selection.early_exit = s.value("early_exit", false);
      p.selection.acc_floor = s.value("acc_floor", 0.65);
      p.selection.roc_floor = s.value("roc_floor", 0.65);
    }
    p.validate();
    return p;
  }

  static BenchPlan from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open plan file");
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

// Test metrics of one (grid point, seed) run, after selection.
struct RunResult {
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double sel_val_acc = 0.0;  // validation accuracy of the selected epoch
  MetricBundle test;
};

struct AggStat {
  double mean = 0.0;
  double stddev = 0.0;  // n-1 denominator
};

inline AggStat aggregate(const std::vector<double>& xs) {
  AggStat a;
  const auto n = static_cast<double>(xs.size());
  for (double x : xs) a.mean += x;
  a.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.stddev = std::sqrt(ss / (n - 1.0));
  }
  return a;
}

// One (dataset, method) cell of the report.
struct CellResult {
  std::string dataset;
  std::string method;
  bool ok = false;
  std::string diagnostic;
  ModelConfig chosen_config;
  std::vector<RunResult> runs;  // at the chosen grid point
  AggStat acc, auc, f1, dsp, deo;
  std::map<Group, AggStat> group_acc;
};

struct BenchReport {
  std::vector<CellResult> cells;

  nlohmann::json to_json() const {
    nlohmann::json cells_j = nlohmann::json::array();
    for (const auto& c : cells) {
      nlohmann::json cj;
      cj["dataset"] = c.dataset;
      cj["method"] = c.method;
      cj["ok"] = c.ok;
      if (!c.ok) {
        cj["diagnostic"] = c.diagnostic;
        cells_j.push_back(cj);
        continue;
      }
      cj["chosen_config"] = c.chosen_config.to_json();
      auto agg = [](const AggStat& a) {
        return nlohmann::json{{"mean", a.mean}, {"std", a.stddev}};
      };
      cj["acc"] = agg(c.acc);
      cj["auc"] = agg(c.auc);
      cj["f1"] = agg(c.f1);
      cj["delta_sp"] = agg(c.dsp);
      cj["delta_eo"] = agg(c.deo);
      nlohmann::json ga;
      for (const auto& [grp, a] : c.group_acc) ga[to_string(grp)] = agg(a);
      cj["group_acc"] = ga;
      nlohmann::json runs_j = nlohmann::json::array();
      for (const auto& r : c.runs) {
        runs_j.push_back(nlohmann::json{{"seed", r.seed},
                                        {"best_epoch", r.best_epoch},
                                        {"sel_val_acc", r.sel_val_acc},
                                        {"test", r.test.to_json()}});
      }
      cj["runs"] = runs_j;
      cells_j.push_back(cj);
    }
    return nlohmann::json{{"cells", cells_j}};
  }

  // Percentage-point table in the usual benchmark layout.
  std::string to_markdown() const {
    std::ostringstream os;
    os << "| Dataset | Method | ACC | AUC | F1 | dSP | dEO |\n";
    os << "|---|---|---|---|---|---|---|\n";
    auto cell = [](const AggStat& a) {
      std::ostringstream c;
      c.setf(std::ios::fixed);
      c.precision(2);
      c << 100.0 * a.mean << " \xc2\xb1 " << 100.0 * a.stddev;
      return c.str();
    };
    for (const auto& c : cells) {
      if (!c.ok) {
        os << "| " << c.dataset << " | " << c.method << " | failed: " << c.diagnostic
           << " | | | | |\n";
        continue;
      }
      os << "| " << c.dataset << " | " << c.method << " | " << cell(c.acc) << " | "
         << cell(c.auc) << " | " << cell(c.f1) << " | " << cell(c.dsp) << " | " << cell(c.deo)
         << " |\n";
    }
    return os.str();
  }
};

namespace detail {

struct RunTask {
  std::size_t dataset_idx;
  std::size_t method_idx;
  std::size_t grid_idx;
  std::size_t seed_idx;
};

struct RunOutcome {
  bool ok = false;
  std::string error;
  RunResult result;
};

inline std::string run_artifact_stem(const std::string& dataset, ModelKind method,
                                     std::size_t grid_idx, std::uint64_t seed) {
  std::ostringstream os;
  os << dataset << "__" << to_string(method) << "__g" << grid_idx << "__seed" << seed;
  return os.str();
}

inline void write_predictions_csv(const std::filesystem::path& path,
                                  const std::vector<double>& logits) {
  std::ofstream out(path);
  out << "id,score\n";
  for (std::size_t i = 0; i < logits.size(); ++i)
    out << i << ',' << format_double(logits[i]) << '\n';
}

}  // namespace detail

// Runs the full plan: every (dataset, method, grid point, seed) run is an
// independent fit+select, scheduled across a small worker pool. Per-run
// epoch logs (JSONL) and selected-epoch prediction CSVs land in out/runs/;
// report.json and report.md summarize each (dataset, method) cell as
// mean +/- std over seeds at the grid point with the best mean validation
// accuracy. A failing run aborts only its own cell.
inline BenchReport run_benchmark(const BenchPlan& plan, const std::filesystem::path& out_dir,
                                 unsigned max_workers = std::thread::hardware_concurrency()) {
  plan.validate();
  std::filesystem::create_directories(out_dir / "runs");

  // Load every bundle once; a bad bundle fails all of its cells.
  std::vector<std::optional<AttributedGraph>> graphs(plan.datasets.size());
  std::vector<std::string> graph_errors(plan.datasets.size());
  for (std::size_t i = 0; i < plan.datasets.size(); ++i) {
    try {
      graphs[i] = load_bundle(plan.datasets[i].bundle);
    } catch (const std::exception& e) {
      graph_errors[i] = e.what();
    }
  }

  std::vector<std::vector<ModelConfig>> grids(plan.methods.size());
  for (std::size_t m = 0; m < plan.methods.size(); ++m) grids[m] = plan.grid.points(plan.methods[m]);

  std::vector<detail::RunTask> tasks;
  for (std::size_t d = 0; d < plan.datasets.size(); ++d)
    for (std::size_t m = 0; m < plan.methods.size(); ++m)
      for (std::size_t gi = 0; gi < grids[m].size(); ++gi)
        for (std::size_t si = 0; si < plan.seeds.size(); ++si) tasks.push_back({d, m, gi, si});

  std::vector<detail::RunOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t ti = next.fetch_add(1);
      if (ti >= tasks.size()) return;
      const auto& t = tasks[ti];
      auto& oc = outcomes[ti];
      if (!graphs[t.dataset_idx]) {
        oc.error = graph_errors[t.dataset_idx];
        continue;
      }
      const AttributedGraph& g = *graphs[t.dataset_idx];
      ModelConfig cfg = grids[t.method_idx][t.grid_idx];
      cfg.seed = plan.seeds[t.seed_idx];
      try {
        const FitResult fr = fit(cfg, g);
        const SelectionResult sel = plan.selection.apply(fr.log);
        const ModelParams& chosen =
            *fr.log[static_cast<std::size_t>(sel.best_epoch - 1)].params;
        const std::vector<double> logits = predict_logits(cfg, chosen, g);
        const PredictionSet test_ps = prediction_set_for_split(g, logits, Split::test);

        RunResult r;
        r.seed = cfg.seed;
        r.best_epoch = sel.best_epoch;
        r.sel_val_acc = sel.chosen.val_acc;
        r.test = evaluate_all(test_ps);
        oc.result = std::move(r);
        oc.ok = true;

        const std::string stem = detail::run_artifact_stem(
            plan.datasets[t.dataset_idx].name, plan.methods[t.method_idx], t.grid_idx, cfg.seed);
        save_epoch_log(fr.log, out_dir / "runs" / (stem + ".jsonl"));
        detail::write_predictions_csv(out_dir / "runs" / (stem + ".csv"), logits);
      } catch (const std::exception& e) {
        oc.error = e.what();
      }
    }
  };

  const unsigned n_workers = std::max(1u, std::min<unsigned>(max_workers, 8u));
  {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Index outcomes for aggregation.
  auto outcome_at = [&](std::size_t d, std::size_t m, std::size_t gi,
                        std::size_t si) -> const detail::RunOutcome& {
    std::size_t base = 0;
    for (std::size_t dd = 0; dd < d; ++dd)
      for (std::size_t mm = 0; mm < plan.methods.size(); ++mm)
        base += grids[mm].size() * plan.seeds.size();
    for (std::size_t mm = 0; mm < m; ++mm) base += grids[mm].size() * plan.seeds.size();
    return outcomes[base + gi * plan.seeds.size() + si];
  };

  BenchReport report;
  for (std::size_t d = 0; d < plan.datasets.size(); ++d) {
    for (std::size_t m = 0; m < plan.methods.size(); ++m) {
      CellResult cell;
      cell.dataset = plan.datasets[d].name;
      cell.method = to_string(plan.methods[m]);

      std::string first_error;
      double best_val = -1.0;
      std::size_t best_gi = 0;
      bool have_grid_point = false;
      for (std::size_t gi = 0; gi < grids[m].size(); ++gi) {
        double val_sum = 0.0;
        bool all_ok = true;
        for (std::size_t si = 0; si < plan.seeds.size(); ++si) {
          const auto& oc = outcome_at(d, m, gi, si);
          if (!oc.ok) {
            all_ok = false;
            if (first_error.empty()) first_error = oc.error;
            break;
          }
          val_sum += oc.result.sel_val_acc;
        }
        if (!all_ok) continue;
        const double mean_val = val_sum / static_cast<double>(plan.seeds.size());
        if (!have_grid_point || mean_val > best_val) {
          best_val = mean_val;
          best_gi = gi;
          have_grid_point = true;
        }
      }

      if (!have_grid_point) {
        cell.diagnostic = first_error.empty() ? "no successful grid point" : first_error;
        report.cells.push_back(std::move(cell));
        continue;
      }

      cell.ok = true;
      cell.chosen_config = grids[m][best_gi];
      std::vector<double> acc, auc, f1, dsp, deo;
      std::map<Group, std::vector<double>> gacc;
      for (std::size_t si = 0; si < plan.seeds.size(); ++si) {
        const auto& r = outcome_at(d, m, best_gi, si).result;
        cell.runs.push_back(r);
        acc.push_back(r.test.acc);
        auc.push_back(r.test.auc);
        f1.push_back(r.test.f1);
        dsp.push_back(r.test.delta_sp);
        deo.push_back(r.test.delta_eo);
        for (const auto& [grp, v] : r.test.group_acc) gacc[grp].push_back(v);
      }
      cell.acc = aggregate(acc);
      cell.auc = aggregate(auc);
      cell.f1 = aggregate(f1);
      cell.dsp = aggregate(dsp);
      cell.deo = aggregate(deo);
      for (const auto& [grp, vs] : gacc) {
        if (vs.size() == plan.seeds.size()) cell.group_acc[grp] = aggregate(vs);
      }
      report.cells.push_back(std::move(cell));
    }
  }

  {
    std::ofstream out(out_dir / "report.json");
    out << report.to_json().dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir / "report.md");
    out << report.to_markdown();
  }
  return report;
}

}  // namespace fairbench
