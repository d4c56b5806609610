// Acceptance suite: one pass/fail line per criterion, non-zero exit if any
// criterion fails. Criteria 1-2 check the generator against closed-form
// expectations, 3-4 check metrics and gradients against independent oracles,
// 5 reproduces the directional benchmark gaps, 6 checks the unified selector
// against brute force, 7 checks rebalance count exactness, 8 determinism.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "fairbench/bench.hpp"
#include "fairbench/bundle.hpp"
#include "fairbench/metrics.hpp"
#include "fairbench/models.hpp"
#include "fairbench/rebalance.hpp"
#include "fairbench/selection.hpp"
#include "fairbench/syngen.hpp"
#include "oracles.hpp"

using namespace fairbench;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Fixed group assignment with the pinned sizes (1218,1244,1239,1299).
void pinned_groups(std::vector<std::int8_t>& labels, std::vector<std::int8_t>& sens) {
  const std::int64_t sizes[4] = {1218, 1244, 1239, 1299};
  labels.clear();
  sens.clear();
  for (int grp = 0; grp < 4; ++grp)
    for (std::int64_t i = 0; i < sizes[grp]; ++i) {
      sens.push_back(static_cast<std::int8_t>(grp >> 1));
      labels.push_back(static_cast<std::int8_t>(grp & 1));
    }
}

// ---- criteria 1 and 2: generator expectation match ----

void criterion_1_and_2() {
  const auto t0 = Clock::now();
  const std::array<std::int64_t, 4> sizes = {1218, 1244, 1239, 1299};
  auto cfg = syn1_preset();
  const auto expected = expected_edge_counts(cfg, sizes);
  const auto pairs = pair_counts(sizes);

  double expected_total = 0.0, var_total = 0.0;
  for (int t = 0; t < kNumEdgeTypes; ++t) {
    const double p = cfg.edge_probs[static_cast<std::size_t>(t)];
    expected_total += expected[static_cast<std::size_t>(t)];
    var_total += pairs[static_cast<std::size_t>(t)] * p * (1.0 - p);
  }
  const double sigma_total = std::sqrt(var_total);  // ~185

  // bucket definitions: E1-E4, E5-E6, E7-E8, E9-E10
  const std::vector<std::vector<int>> buckets = {{0, 1, 2, 3}, {4, 5}, {6, 7}, {8, 9}};
  const double bucket_expected[4] = {17147.878, 6250.116, 6249.306, 4705.680};
  double bucket_sigma[4];
  for (int b = 0; b < 4; ++b) {
    double v = 0.0;
    for (int t : buckets[static_cast<std::size_t>(b)]) {
      const double p = cfg.edge_probs[static_cast<std::size_t>(t)];
      v += pairs[static_cast<std::size_t>(t)] * p * (1.0 - p);
    }
    bucket_sigma[b] = std::sqrt(v);
  }

  std::vector<std::int8_t> labels, sens;
  pinned_groups(labels, sens);

  int total_ok = 0;
  int buckets_ok = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.seed = seed;
    Rng erng(cfg.seed, stream::kEdges);
    const auto edges = sample_edges(cfg, labels, sens, erng);

    std::array<std::int64_t, kNumEdgeTypes> counts{};
    for (const auto& e : edges) {
      const int gu = 2 * sens[static_cast<std::size_t>(e.first)] +
                     labels[static_cast<std::size_t>(e.first)];
      const int gv = 2 * sens[static_cast<std::size_t>(e.second)] +
                     labels[static_cast<std::size_t>(e.second)];
      ++counts[static_cast<std::size_t>(detail::kEdgeTypeTable[gu][gv])];
    }

    const auto total = static_cast<double>(edges.size());
    if (std::abs(total - expected_total) <= 4.0 * sigma_total) ++total_ok;

    bool all_buckets = true;
    for (int b = 0; b < 4; ++b) {
      double c = 0.0;
      for (int t : buckets[static_cast<std::size_t>(b)])
        c += static_cast<double>(counts[static_cast<std::size_t>(t)]);
      if (std::abs(c - bucket_expected[b]) > 4.0 * bucket_sigma[b]) all_buckets = false;
    }
    if (all_buckets) ++buckets_ok;
  }

  const double elapsed = seconds_since(t0);
  {
    std::ostringstream d;
    d << "generator expectation: expected total " << expected_total << " (paper 34,363), "
      << total_ok << "/20 seeds within 4 sigma (sigma " << sigma_total << "), " << elapsed
      << " s";
    report(1, std::abs(expected_total - 34352.0) <= 2.0 && total_ok >= 19 && elapsed < 30.0,
           d.str());
  }
  {
    std::ostringstream d;
    d << "per-bucket expectation (17,148 / 6,250 / 6,249 / 4,706): " << buckets_ok
      << "/20 seeds with all four buckets within 4 sigma";
    report(2, buckets_ok >= 19, d.str());
  }
}

// ---- criterion 3: metric oracle equivalence ----

void criterion_3() {
  const auto t0 = Clock::now();
  Rng rng(424242, 0);
  int instances = 0;
  double worst = 0.0;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };

  while (instances < 1000) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform_below(199));
    std::vector<double> scores(m);
    std::vector<std::int8_t> truth(m), sens(m);
    for (std::size_t i = 0; i < m; ++i) {
      scores[i] = (rng.uniform() < 0.25) ? std::floor(rng.uniform() * 7.0) - 3.0
                                         : 6.0 * rng.uniform() - 3.0;
      truth[i] = static_cast<std::int8_t>(rng.next_u64() & 1);
      sens[i] = static_cast<std::int8_t>(rng.next_u64() & 1);
    }
    const auto p = PredictionSet::from_scores(scores, truth, sens);

    bool both_classes = false, both_groups = false, eo_ok = false;
    {
      bool c0 = false, c1 = false, s0 = false, s1 = false, p0 = false, p1 = false;
      for (std::size_t i = 0; i < m; ++i) {
        (truth[i] ? c1 : c0) = true;
        (sens[i] ? s1 : s0) = true;
        if (truth[i] == 1) (sens[i] ? p1 : p0) = true;
      }
      both_classes = c0 && c1;
      both_groups = s0 && s1;
      eo_ok = p0 && p1;
    }

    track(accuracy(p), oracle::accuracy(p));
    track(binary_f1(p), oracle::f1(p));
    if (both_classes) track(roc_auc(p), oracle::auc(p));
    if (both_groups) track(delta_sp(p), oracle::delta_sp(p));
    if (eo_ok) track(delta_eo(p), oracle::delta_eo(p));
    const auto ga = group_accuracy(p);
    for (const auto& [g, v] : oracle::group_accuracy(p)) track(ga.at(g), v);
    ++instances;
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream d;
  d << "metric oracle equivalence on 1000 instances (m<=200): worst |diff| " << worst << ", "
    << elapsed << " s";
  report(3, worst <= 1e-12 && elapsed < 10.0, d.str());
}

// ---- criterion 4: gradient correctness ----

// Returns the worst mixed absolute/relative error, or a negative value when
// the instance sits too close to a ReLU kink for central differences to be
// meaningful (a probe of size h can flip a unit, which is genuine
// non-differentiability). Such instances are skipped and redrawn.
double gradcheck_instance(ModelKind kind, std::uint64_t seed) {
  Rng rng(seed, 0);
  const std::int64_t n = 5 + static_cast<std::int64_t>(rng.uniform_below(16));  // <= 20
  const std::int64_t d = 2 + static_cast<std::int64_t>(rng.uniform_below(7));   // <= 8

  AttributedGraph g;
  g.n = n;
  g.d = d;
  for (std::int64_t i = 0; i < n; ++i) {
    g.labels.push_back(static_cast<std::int8_t>(rng.next_u64() & 1));
    g.sens.push_back(static_cast<std::int8_t>(rng.next_u64() & 1));
  }
  for (std::int32_t u = 0; u < n; ++u)
    for (std::int32_t v = u + 1; v < n; ++v)
      if (rng.uniform() < 0.3) g.edges.emplace_back(u, v);
  g.split.assign(static_cast<std::size_t>(n), Split::none);
  g.features.resize(static_cast<std::size_t>(n * d));
  for (double& x : g.features) x = rng.normal();
  g.validate();

  ModelConfig cfg;
  cfg.kind = kind;
  cfg.layers = kind == ModelKind::mlp ? 2 + static_cast<int>(rng.uniform_below(4))
                                      : 2 + static_cast<int>(rng.uniform_below(3));
  cfg.hidden = 2 + static_cast<int>(rng.uniform_below(7));
  cfg.weight_decay = (seed % 2) ? 1e-3 : 0.0;
  cfg.dropout = 0.0;
  cfg.seed = seed;

  const NormalizedAdjacency adj = normalize_adjacency(g);
  const NormalizedAdjacency* adj_ptr = kind == ModelKind::gcn ? &adj : nullptr;
  DenseMatrix x(g.n, g.d);
  x.data = g.features;
  std::vector<std::int64_t> mask;
  for (std::int64_t i = 0; i < n; ++i)
    if (rng.uniform() < 0.7) mask.push_back(i);
  if (mask.empty()) mask.push_back(0);

  Rng init_rng(cfg.seed, stream::kParamInit);
  ModelParams params = init_params(cfg, g.d, init_rng);
  {
    ForwardCache cache;
    forward(cfg, params, adj_ptr, x, &cache);
    for (const auto& pre : cache.preact)
      for (const double z : pre.data)
        if (std::abs(z) < 1e-3) return -1.0;
  }
  const LossGrads lg = loss_and_grads(cfg, params, adj_ptr, x, g.labels, mask);

  auto loss_at = [&]() {
    const auto logits = forward(cfg, params, adj_ptr, x);
    double s = 0.0;
    for (auto i : mask)
      s += bce_with_logits(logits[static_cast<std::size_t>(i)], g.labels[static_cast<std::size_t>(i)]);
    s /= static_cast<double>(mask.size());
    for (const auto& w : params.W) {
      double sq = 0.0;
      for (double v : w.data) sq += v * v;
      s += 0.5 * cfg.weight_decay * sq;
    }
    return s;
  };

  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](double& theta, double analytic) {
    const double orig = theta;
    theta = orig + h;
    const double fp = loss_at();
    theta = orig - h;
    const double fm = loss_at();
    theta = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic - numeric) /
                                std::max({1.0, std::abs(analytic), std::abs(numeric)}));
  };
  for (std::size_t l = 0; l < params.W.size(); ++l) {
    for (std::size_t k = 0; k < params.W[l].data.size(); ++k)
      probe(params.W[l].data[k], lg.grads.W[l].data[k]);
    for (std::size_t k = 0; k < params.b[l].size(); ++k)
      probe(params.b[l][k], lg.grads.b[l][k]);
  }
  return worst;
}

void criterion_4() {
  double worst = 0.0;
  int skipped = 0;
  for (const ModelKind kind : {ModelKind::mlp, ModelKind::gcn}) {
    int done = 0;
    std::uint64_t seed = 1000;
    while (done < 50) {
      const double err = gradcheck_instance(kind, seed++);
      if (err < 0.0) {
        ++skipped;
        continue;
      }
      worst = std::max(worst, err);
      ++done;
    }
  }
  std::ostringstream d;
  d << "gradient check, 50 instances per model kind (h=1e-5): worst relative error " << worst
    << " (" << skipped << " kink-adjacent instances redrawn)";
  report(4, worst < 1e-6, d.str());
}

// ---- criterion 5: directional benchmark reproduction ----

void criterion_5() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / "fairbench_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  const auto syn1 = generate(syn1_preset(1));
  save_bundle(syn1, root / "syn1", {"syn1", 1, syn1_preset(1).to_json()});
  const auto syn2 = generate(syn2_preset(1));
  save_bundle(syn2, root / "syn2", {"syn2", 1, syn2_preset(1).to_json()});

  BenchPlan plan;
  plan.datasets = {{"syn1", root / "syn1"}, {"syn2", root / "syn2"}};
  plan.methods = {ModelKind::mlp, ModelKind::gcn};
  plan.seeds = {1, 2, 3, 4, 5};
  // grid defaults: single point, the default ModelConfig

  const auto rep = run_benchmark(plan, root / "bench");
  auto cell = [&](const std::string& ds, const std::string& m) -> const CellResult& {
    for (const auto& c : rep.cells)
      if (c.dataset == ds && c.method == m) return c;
    throw std::runtime_error("missing cell " + ds + "/" + m);
  };
  const auto& s1_mlp = cell("syn1", "mlp");
  const auto& s1_gcn = cell("syn1", "gcn");
  const auto& s2_mlp = cell("syn2", "mlp");
  const auto& s2_gcn = cell("syn2", "gcn");
  const double elapsed = seconds_since(t0);

  bool ok = s1_mlp.ok && s1_gcn.ok && s2_mlp.ok && s2_gcn.ok;
  std::ostringstream d;
  if (ok) {
    const double acc_gap = s1_gcn.acc.mean - s1_mlp.acc.mean;
    const double sp_gap = s1_gcn.dsp.mean - s1_mlp.dsp.mean;
    const bool syn2_dir = s2_gcn.dsp.mean > s2_mlp.dsp.mean;
    ok = acc_gap >= 0.04 && sp_gap >= 0.03 && syn2_dir && elapsed < 600.0;
    d << "directional benchmark: syn1 ACC gcn-mlp " << 100 * s1_gcn.acc.mean << "-"
      << 100 * s1_mlp.acc.mean << " = " << 100 * acc_gap << " pts (need >= 4), dSP gap "
      << 100 * sp_gap << " pts (need >= 3); syn2 dSP gcn " << 100 * s2_gcn.dsp.mean << " vs mlp "
      << 100 * s2_mlp.dsp.mean << "; mlp syn1 ACC " << 100 * s1_mlp.acc.mean
      << " (paper 78.84), std " << 100 * s1_mlp.acc.stddev << "; " << elapsed << " s";
  } else {
    d << "directional benchmark: a cell failed: ";
    for (const auto& c : rep.cells)
      if (!c.ok) d << c.dataset << "/" << c.method << ": " << c.diagnostic << "; ";
  }
  report(5, ok, d.str());
}

// ---- criterion 6: Algorithm 1 equivalence ----

void criterion_6() {
  Rng rng(987654321, 0);
  int literal_match = 0, early_match = 0, total = 0, nontrivial = 0;
  while (total < 500) {
    // training-curve-like logs: per-log base levels plus per-epoch jitter,
    // so the threshold band usually holds several competing epochs
    const int len = 1 + static_cast<int>(rng.uniform_below(60));
    const double base_acc = 0.5 + 0.4 * rng.uniform();
    const double base_roc = 0.5 + 0.4 * rng.uniform();
    const double base_f1 = 0.5 + 0.4 * rng.uniform();
    EpochLog log;
    for (int e = 1; e <= len; ++e) {
      auto jitter = [&](double base) {
        return std::min(1.0, std::max(0.0, base + 0.1 * (rng.uniform() - 0.5)));
      };
      EpochRecord r;
      r.epoch = e;
      r.val_acc = jitter(base_acc);
      r.val_roc = jitter(base_roc);
      r.val_f1 = jitter(base_f1);
      r.val_parity = 0.4 * rng.uniform();
      r.val_equality = 0.4 * rng.uniform();
      r.val_loss = rng.uniform();
      log.push_back(r);
    }
    ++total;
    int got = -1, want = -1;  // -1 encodes "nothing qualifies"
    try {
      got = select_unified(log).best_epoch;
    } catch (const std::runtime_error&) {
    }
    try {
      want = oracle::unified_literal(log);
    } catch (const std::runtime_error&) {
    }
    if (got == want) ++literal_match;
    if (got >= 0) ++nontrivial;

    got = want = -1;
    try {
      got = select_unified(log, true).best_epoch;
    } catch (const std::runtime_error&) {
    }
    try {
      want = oracle::unified_early_exit(log);
    } catch (const std::runtime_error&) {
    }
    if (got == want) ++early_match;
  }
  std::ostringstream d;
  d << "Algorithm 1 equivalence on 500 random logs: literal " << literal_match
    << "/500, early-exit " << early_match << "/500 exact matches (" << nontrivial
    << " logs had a qualifying epoch)";
  report(6, literal_match == 500 && early_match == 500 && nontrivial >= 400, d.str());
}

// ---- criterion 7: rebalance exactness ----

void criterion_7() {
  // Host graph with enough headroom for every builtin recipe: equal groups
  // of ~2500 give ~6.2M pairs per bucket; the densities below leave all
  // three recipes feasible (E5 ~50k for -40k, E7 ~37k for -30k).
  SynConfig cfg = syn1_preset(4242);
  cfg.n = 10000;
  cfg.d1 = 2;
  cfg.mu_y.assign(2, 0.5);
  cfg.mu_s.assign(2, 0.5);
  cfg.edge_probs = {0.004, 0.004, 0.004, 0.004, 0.008, 0.002, 0.006, 0.002, 0.002, 0.002};
  const auto host = generate(cfg);
  const auto before = compute_stats(host);

  bool all_ok = true;
  std::ostringstream d;
  d << "rebalance exactness: ";
  for (const auto& [name, recipe_const] : builtin_recipes()) {
    RebalanceSpec recipe = recipe_const;
    recipe.seed = 7;
    const auto out = apply_rebalance(host, recipe);
    const auto after = compute_stats(out);
    std::int64_t total_delta = 0;
    for (int t = 0; t < kNumEdgeTypes; ++t) {
      const auto got = after.edge_type_counts[static_cast<std::size_t>(t)] -
                       before.edge_type_counts[static_cast<std::size_t>(t)];
      if (got != recipe.deltas[static_cast<std::size_t>(t)]) all_ok = false;
      total_delta += got;
    }
    if (name == "new-german" && total_delta != -1500) all_ok = false;
    d << name << " total delta " << total_delta << "; ";
  }
  d << "(new-german must be -1500, matching 21,742 -> 20,242)";
  report(7, all_ok, d.str());
}

// ---- criterion 8: determinism ----

void criterion_8() {
  const fs::path root = fs::temp_directory_path() / "fairbench_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);

  auto cfg = syn1_preset(7);
  const auto g1 = generate(cfg);
  const auto g2 = generate(cfg);
  BundleMeta meta{"syn1", 7, cfg.to_json()};
  save_bundle(g1, root / "a", meta);
  save_bundle(g2, root / "b", meta);
  bool bundles_identical = true;
  for (const char* f : {"meta.json", "nodes.csv", "features.csv", "edges.csv"}) {
    if (slurp(root / "a" / f) != slurp(root / "b" / f)) bundles_identical = false;
  }

  // selection replay: persist a real epoch log, reload, compare byte-for-byte
  auto small = syn1_preset(3);
  small.n = 250;
  const auto gs = generate(small);
  ModelConfig mc;
  mc.kind = ModelKind::gcn;
  mc.epochs = 30;
  mc.seed = 11;
  const auto fr = fit(mc, gs);
  save_epoch_log(fr.log, root / "log.jsonl");
  const auto replay = load_epoch_log(root / "log.jsonl");

  bool selection_identical = true;
  SelectionPolicy policies[5] = {
      {SelectionStrategy::unified, false, 0.65, 0.65},
      {SelectionStrategy::unified, true, 0.65, 0.65},
      {SelectionStrategy::s1, false, 0.0, 0.0},
      {SelectionStrategy::s2, false, 0.65, 0.65},
      {SelectionStrategy::s3, false, 0.65, 0.65},
  };
  for (const auto& pol : policies) {
    const auto a = pol.apply(fr.log).to_json().dump();
    const auto b = pol.apply(replay).to_json().dump();
    if (a != b) selection_identical = false;
  }

  std::ostringstream d;
  d << "determinism: generate --preset syn1 --seed 7 twice "
    << (bundles_identical ? "byte-identical" : "DIFFERS") << "; selection replay "
    << (selection_identical ? "identical across all strategies" : "DIFFERS");
  report(8, bundles_identical && selection_identical, d.str());
}

}  // namespace

int main() {
  criterion_1_and_2();
  criterion_3();
  criterion_4();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_5();  // the slow one last
  if (failures) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
