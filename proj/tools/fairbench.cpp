// fairbench: generate, audit, rebalance, train on, and benchmark
// attributed graphs with binary labels and a binary sensitive attribute.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairbench/bench.hpp"
#include "fairbench/bundle.hpp"
#include "fairbench/graph.hpp"
#include "fairbench/metrics.hpp"
#include "fairbench/models.hpp"
#include "fairbench/rebalance.hpp"
#include "fairbench/selection.hpp"
#include "fairbench/syngen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void print_stats_table(const fairbench::GraphStats& st) {
  std::cout << "group sizes:\n";
  for (int g = 0; g < fairbench::kNumGroups; ++g)
    std::cout << "  " << fairbench::to_string(static_cast<fairbench::Group>(g)) << "  "
              << st.group_sizes[static_cast<std::size_t>(g)] << "\n";
  std::cout << "edges: " << st.total_edges() << "  average degree: " << std::fixed
            << std::setprecision(2) << st.average_degree << "\n";
  std::cout << "edge types (count / proportion):\n";
  for (int t = 0; t < fairbench::kNumEdgeTypes; ++t) {
    std::cout << "  " << std::setw(3) << fairbench::to_string(static_cast<fairbench::EdgeType>(t))
              << "  " << std::setw(9) << st.edge_type_counts[static_cast<std::size_t>(t)] << "  "
              << std::setprecision(4) << st.edge_type_proportions[static_cast<std::size_t>(t)]
              << "\n";
  }
  if (!st.has_edges) std::cout << "  (graph has no edges)\n";
}

json stats_to_json(const fairbench::GraphStats& st) {
  json groups, counts, props;
  for (int g = 0; g < fairbench::kNumGroups; ++g)
    groups[fairbench::to_string(static_cast<fairbench::Group>(g))] =
        st.group_sizes[static_cast<std::size_t>(g)];
  for (int t = 0; t < fairbench::kNumEdgeTypes; ++t) {
    const char* name = fairbench::to_string(static_cast<fairbench::EdgeType>(t));
    counts[name] = st.edge_type_counts[static_cast<std::size_t>(t)];
    props[name] = st.edge_type_proportions[static_cast<std::size_t>(t)];
  }
  return json{{"group_sizes", groups},
              {"edge_type_counts", counts},
              {"edge_type_proportions", props},
              {"average_degree", st.average_degree},
              {"has_edges", st.has_edges},
              {"total_edges", st.total_edges()}};
}

void print_metric_table(const fairbench::MetricBundle& b) {
  std::cout << std::fixed << std::setprecision(2);
  std::cout << "ACC    " << 100.0 * b.acc << "\n";
  std::cout << "AUC    " << 100.0 * b.auc << "\n";
  std::cout << "F1     " << 100.0 * b.f1 << (b.f1_degenerate ? "  (degenerate: no positives)" : "")
            << "\n";
  std::cout << "dSP    " << 100.0 * b.delta_sp << "\n";
  std::cout << "dEO    " << 100.0 * b.delta_eo << "\n";
  for (const auto& [grp, v] : b.group_acc)
    std::cout << "ACC[" << fairbench::to_string(grp) << "]  " << 100.0 * v << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair graph learning benchmark toolchain"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset bundle");
  std::string gen_preset, gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--preset", gen_preset, "preset name: syn1 or syn2");
  gen->add_option("--config", gen_config, "SynConfig JSON file");
  gen->add_option("--seed", gen_seed, "override the config seed");
  gen->add_option("--out", gen_out, "output bundle directory");

  // stats
  auto* stats = app.add_subcommand("stats", "group/edge-type statistics of a bundle");
  std::string stats_dir;
  bool stats_json = false;
  stats->add_option("bundle", stats_dir, "bundle directory")->required();
  stats->add_flag("--json", stats_json, "emit JSON instead of a table");

  // rebalance
  auto* reb = app.add_subcommand("rebalance", "edge-type surgery on a bundle");
  std::string reb_dir, reb_recipe, reb_spec, reb_out;
  std::optional<std::uint64_t> reb_seed;
  reb->add_option("bundle", reb_dir, "input bundle directory")->required();
  reb->add_option("--recipe", reb_recipe, "builtin recipe: new-german|new-bail|new-credit");
  reb->add_option("--spec", reb_spec, "RebalanceSpec JSON file");
  reb->add_option("--seed", reb_seed, "override the spec seed");
  reb->add_option("--out", reb_out, "output bundle directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train a reference model, logging per-epoch metrics");
  std::string train_bundle, train_model, train_config, train_log, train_pred;
  train->add_option("--bundle", train_bundle, "bundle directory")->required();
  train->add_option("--model", train_model, "mlp or gcn")->required();
  train->add_option("--config", train_config, "ModelConfig JSON file (optional)");
  train->add_option("--log", train_log, "output epoch log (JSONL)")->required();
  train->add_option("--pred", train_pred, "output final-epoch predictions CSV")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a prediction CSV against a bundle split");
  std::string eval_pred, eval_bundle, eval_split = "test";
  eval->add_option("--pred", eval_pred, "prediction CSV with header id,score")->required();
  eval->add_option("--bundle", eval_bundle, "bundle directory")->required();
  eval->add_option("--split", eval_split, "split to evaluate: train|val|test");

  // select
  auto* sel = app.add_subcommand("select", "apply a model-selection strategy to an epoch log");
  std::string sel_log, sel_strategy = "unified";
  bool sel_early = false;
  double sel_acc_floor = 0.65, sel_roc_floor = 0.65;
  sel->add_option("--log", sel_log, "epoch log (JSONL)")->required();
  sel->add_option("--strategy", sel_strategy, "unified|s1|s2|s3");
  sel->add_flag("--early-exit", sel_early, "unified: stop at the first qualifying ratio");
  sel->add_option("--acc-floor", sel_acc_floor, "s1: accuracy floor");
  sel->add_option("--roc-floor", sel_roc_floor, "s1: AUC floor");

  // bench
  auto* bench = app.add_subcommand("bench", "run a multi-seed benchmark plan");
  std::string bench_plan, bench_out;
  bench->add_option("--plan", bench_plan, "plan JSON file")->required();
  bench->add_option("--out", bench_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (gen_preset.empty() == gen_config.empty())
        throw std::invalid_argument("generate: give exactly one of --preset or --config");
      fairbench::SynConfig cfg;
      std::string name;
      if (!gen_preset.empty()) {
        cfg = fairbench::preset_by_name(gen_preset);
        name = gen_preset;
      } else {
        std::ifstream in(gen_config);
        if (!in) throw std::runtime_error(gen_config + ": cannot open config");
        json j;
        in >> j;
        cfg = fairbench::SynConfig::from_json(j);
        name = fs::path(gen_config).stem().string();
      }
      if (gen_seed) cfg.seed = *gen_seed;
      cfg.validate();
      const fs::path out = gen_out.empty() ? fs::path(name) : fs::path(gen_out);
      const fairbench::AttributedGraph g = fairbench::generate(cfg);
      fairbench::BundleMeta meta;
      meta.name = name;
      meta.seed = static_cast<std::int64_t>(cfg.seed);
      meta.generator = cfg.to_json();
      fairbench::save_bundle(g, out, meta);
      std::cout << "wrote " << out.string() << " (" << g.n << " nodes, " << g.edges.size()
                << " edges)\n";
    } else if (*stats) {
      const auto g = fairbench::load_bundle(stats_dir);
      const auto st = fairbench::compute_stats(g);
      if (stats_json)
        std::cout << stats_to_json(st).dump(2) << "\n";
      else
        print_stats_table(st);
    } else if (*reb) {
      if (reb_recipe.empty() == reb_spec.empty())
        throw std::invalid_argument("rebalance: give exactly one of --recipe or --spec");
      fairbench::RebalanceSpec spec;
      if (!reb_recipe.empty()) {
        const auto recipes = fairbench::builtin_recipes();
        const auto it = recipes.find(reb_recipe);
        if (it == recipes.end())
          throw std::invalid_argument("unknown recipe '" + reb_recipe + "'");
        spec = it->second;
      } else {
        std::ifstream in(reb_spec);
        if (!in) throw std::runtime_error(reb_spec + ": cannot open spec");
        json j;
        in >> j;
        spec = fairbench::RebalanceSpec::from_json(j);
      }
      if (reb_seed) spec.seed = *reb_seed;
      fairbench::BundleMeta meta;
      const auto g = fairbench::load_bundle(reb_dir, &meta);
      const auto out_g = fairbench::apply_rebalance(g, spec);
      meta.name = reb_recipe.empty() ? meta.name + "-rebalanced" : reb_recipe;
      fairbench::save_bundle(out_g, reb_out, meta);
      std::cout << "wrote " << reb_out << " (" << out_g.edges.size() << " edges, was "
                << g.edges.size() << ")\n";
    } else if (*train) {
      const auto kind = fairbench::parse_model_kind(train_model);
      fairbench::ModelConfig cfg = fairbench::ModelConfig::defaults_for(kind);
      if (!train_config.empty()) {
        std::ifstream in(train_config);
        if (!in) throw std::runtime_error(train_config + ": cannot open config");
        json j;
        in >> j;
        if (!j.contains("kind")) j["kind"] = fairbench::to_string(kind);
        cfg = fairbench::ModelConfig::from_json(j);
      }
      cfg.kind = kind;
      cfg.validate();
      const auto g = fairbench::load_bundle(train_bundle);
      const auto res = fairbench::fit(cfg, g);
      fairbench::save_epoch_log(res.log, fs::path(train_log));
      const auto logits = fairbench::predict_logits(cfg, res.params, g);
      std::ofstream pred(train_pred);
      pred << "id,score\n";
      for (std::size_t i = 0; i < logits.size(); ++i)
        pred << i << ',' << fairbench::format_double(logits[i]) << '\n';
      std::cout << "trained " << train_model << " for " << cfg.epochs << " epochs; log -> "
                << train_log << ", predictions -> " << train_pred << "\n";
    } else if (*eval) {
      const auto g = fairbench::load_bundle(eval_bundle);
      const fairbench::Split split = fairbench::parse_split(eval_split);
      std::vector<double> logits(static_cast<std::size_t>(g.n), 0.0);
      std::vector<bool> seen(static_cast<std::size_t>(g.n), false);
      {
        fairbench::CsvReader rd(eval_pred);
        std::string line;
        std::vector<std::string_view> f;
        if (!rd.next_line(line) || line != "id,score") rd.fail("expected header 'id,score'");
        while (rd.next_line(line)) {
          fairbench::split_fields(line, ',', f);
          if (f.size() != 2) rd.fail("expected 2 fields");
          const std::int64_t id = rd.require_i64(f[0]);
          if (id < 0 || id >= g.n) rd.fail("id out of range");
          if (seen[static_cast<std::size_t>(id)]) rd.fail("duplicate id " + std::to_string(id));
          seen[static_cast<std::size_t>(id)] = true;
          logits[static_cast<std::size_t>(id)] = rd.require_double(f[1]);
        }
      }
      for (std::int64_t i = 0; i < g.n; ++i) {
        if (g.split[static_cast<std::size_t>(i)] == split && !seen[static_cast<std::size_t>(i)])
          throw std::runtime_error("prediction file misses node " + std::to_string(i) +
                                   " of split " + eval_split);
      }
      const auto ps = fairbench::prediction_set_for_split(g, logits, split);
      const auto b = fairbench::evaluate_all(ps);
      std::cout << b.to_json().dump(2) << "\n";
      print_metric_table(b);
    } else if (*sel) {
      const auto log = fairbench::load_epoch_log(fs::path(sel_log));
      fairbench::SelectionPolicy policy;
      policy.strategy = fairbench::parse_strategy(sel_strategy);
      policy.early_exit = sel_early;
      policy.acc_floor = sel_acc_floor;
      policy.roc_floor = sel_roc_floor;
      const auto result = policy.apply(log);
      std::cout << result.to_json().dump(2) << "\n";
    } else if (*bench) {
      const auto plan = fairbench::BenchPlan::from_file(bench_plan);
      const auto report = fairbench::run_benchmark(plan, bench_out);
      std::cout << report.to_markdown();
      std::cout << "report -> " << (fs::path(bench_out) / "report.json").string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
