#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbench/epoch_log.hpp"
#include "fairbench/graph.hpp"
#include "fairbench/linalg.hpp"
#include "fairbench/metrics.hpp"
#include "fairbench/rng.hpp"

namespace fairbench {

// Symmetrically normalized adjacency with self-loops,
// A_hat = D~^{-1/2} (A + I) D~^{-1/2}, stored as CSR.
struct NormalizedAdjacency {
  std::int64_t n = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;

  DenseMatrix multiply(const DenseMatrix& x) const {
    if (x.rows != n) throw std::invalid_argument("adjacency multiply: row count mismatch");
    DenseMatrix y(x.rows, x.cols);
    for (std::int64_t i = 0; i < n; ++i) {
      double* yrow = &y.data[static_cast<std::size_t>(i * x.cols)];
      for (std::int64_t e = row_ptr[static_cast<std::size_t>(i)];
           e < row_ptr[static_cast<std::size_t>(i + 1)]; ++e) {
        const double w = val[static_cast<std::size_t>(e)];
        const double* xrow =
            &x.data[static_cast<std::size_t>(static_cast<std::int64_t>(col[static_cast<std::size_t>(e)]) * x.cols)];
        for (std::int64_t j = 0; j < x.cols; ++j) yrow[j] += w * xrow[j];
      }
    }
    return y;
  }

  // Linear-scan entry lookup; intended for tests and small graphs.
  double entry(std::int64_t i, std::int64_t j) const {
    for (std::int64_t e = row_ptr[static_cast<std::size_t>(i)];
         e < row_ptr[static_cast<std::size_t>(i + 1)]; ++e) {
      if (col[static_cast<std::size_t>(e)] == j) return val[static_cast<std::size_t>(e)];
    }
    return 0.0;
  }
};

inline NormalizedAdjacency normalize_adjacency(const AttributedGraph& g) {
  std::vector<std::int64_t> degree(static_cast<std::size_t>(g.n), 1);  // self-loop
  for (const auto& e : g.edges) {
    ++degree[static_cast<std::size_t>(e.first)];
    ++degree[static_cast<std::size_t>(e.second)];
  }
  std::vector<std::vector<std::pair<std::int32_t, double>>> rows(static_cast<std::size_t>(g.n));
  for (std::int64_t i = 0; i < g.n; ++i)
    rows[static_cast<std::size_t>(i)].emplace_back(
        static_cast<std::int32_t>(i), 1.0 / static_cast<double>(degree[static_cast<std::size_t>(i)]));
  for (const auto& e : g.edges) {
    const double w = 1.0 / std::sqrt(static_cast<double>(degree[static_cast<std::size_t>(e.first)]) *
                                     static_cast<double>(degree[static_cast<std::size_t>(e.second)]));
    rows[static_cast<std::size_t>(e.first)].emplace_back(e.second, w);
    rows[static_cast<std::size_t>(e.second)].emplace_back(e.first, w);
  }
  NormalizedAdjacency a;
  a.n = g.n;
  a.row_ptr.assign(static_cast<std::size_t>(g.n + 1), 0);
  for (std::int64_t i = 0; i < g.n; ++i) {
    auto& r = rows[static_cast<std::size_t>(i)];
    std::sort(r.begin(), r.end());
    a.row_ptr[static_cast<std::size_t>(i + 1)] =
        a.row_ptr[static_cast<std::size_t>(i)] + static_cast<std::int64_t>(r.size());
    for (const auto& [c, w] : r) {
      a.col.push_back(c);
      a.val.push_back(w);
    }
  }
  return a;
}

enum class ModelKind { mlp, gcn };

inline const char* to_string(ModelKind k) { return k == ModelKind::mlp ? "mlp" : "gcn"; }

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "mlp") return ModelKind::mlp;
  if (s == "gcn") return ModelKind::gcn;
  throw std::invalid_argument("unknown model kind '" + s + "' (expected mlp or gcn)");
}

// Training configuration. `layers` counts affine layers: for the MLP 2-5
// hidden+head stacks, for the GCN 2-4 meaning 1-3 convolutional encoder
// layers plus the linear head (the published depth grid).
struct ModelConfig {
  ModelKind kind = ModelKind::mlp;
  int layers = 2;
  int hidden = 16;
  double lr = 1e-2;
  double weight_decay = 1e-5;
  double dropout = 0.5;
  int epochs = 300;
  std::uint64_t seed = 1;

  // Reference defaults per kind: a 2-layer MLP and a 2-conv GCN.
  static ModelConfig defaults_for(ModelKind k) {
    ModelConfig c;
    c.kind = k;
    c.layers = k == ModelKind::gcn ? 3 : 2;
    return c;
  }

  int layer_count() const { return layers; }
  int conv_count() const { return kind == ModelKind::gcn ? layers - 1 : 0; }

  void validate(bool grid_constrained = false) const {
    if (kind == ModelKind::mlp && (layers < 2 || layers > 5))
      throw std::invalid_argument("model config: mlp layers must be in 2..5");
    if (kind == ModelKind::gcn && (layers < 2 || layers > 4))
      throw std::invalid_argument("model config: gcn layers must be in 2..4");
    if (hidden <= 0) throw std::invalid_argument("model config: hidden must be positive");
    if (!(lr > 0.0)) throw std::invalid_argument("model config: lr must be positive");
    if (weight_decay < 0.0)
      throw std::invalid_argument("model config: weight_decay must be non-negative");
    if (dropout < 0.0 || dropout >= 1.0)
      throw std::invalid_argument("model config: dropout must be in [0,1)");
    if (epochs < 0) throw std::invalid_argument("model config: epochs must be non-negative");
    if (grid_constrained) {
      auto in = [](double x, std::initializer_list<double> xs) {
        for (double v : xs)
          if (x == v) return true;
        return false;
      };
      if (hidden != 16 && hidden != 32)
        throw std::invalid_argument("model config: hidden must be 16 or 32 in grid mode");
      if (!in(lr, {1e-2, 1e-3, 1e-4}))
        throw std::invalid_argument("model config: lr outside grid {1e-2,1e-3,1e-4}");
      if (!in(weight_decay, {1e-4, 1e-5}))
        throw std::invalid_argument("model config: weight_decay outside grid {1e-4,1e-5}");
      if (!in(dropout, {0.0, 0.5, 0.8}))
        throw std::invalid_argument("model config: dropout outside grid {0,0.5,0.8}");
    }
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"kind", to_string(kind)},
                          {"layers", layers},
                          {"hidden", hidden},
                          {"lr", lr},
                          {"weight_decay", weight_decay},
                          {"dropout", dropout},
                          {"epochs", epochs},
                          {"seed", seed}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    if (j.contains("kind")) c.kind = parse_model_kind(j["kind"].get<std::string>());
    c = defaults_for(c.kind);
    c.layers = j.value("layers", c.layers);
    c.hidden = j.value("hidden", c.hidden);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.dropout = j.value("dropout", c.dropout);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    return c;
  }
};

// All weights and biases of one model, in layer order.
struct ModelParams {
  std::vector<DenseMatrix> W;
  std::vector<std::vector<double>> b;

  static ModelParams zeros_like(const ModelParams& p) {
    ModelParams z;
    for (const auto& w : p.W) z.W.emplace_back(w.rows, w.cols);
    for (const auto& bv : p.b) z.b.emplace_back(bv.size(), 0.0);
    return z;
  }
};

// Glorot-uniform initialization, one substream of cfg.seed.
inline ModelParams init_params(const ModelConfig& cfg, std::int64_t input_dim, Rng& rng) {
  const int L = cfg.layer_count();
  ModelParams p;
  for (int l = 0; l < L; ++l) {
    const std::int64_t fan_in = l == 0 ? input_dim : cfg.hidden;
    const std::int64_t fan_out = l == L - 1 ? 1 : cfg.hidden;
    DenseMatrix w(fan_in, fan_out);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : w.data) x = (2.0 * rng.uniform() - 1.0) * limit;
    p.W.push_back(std::move(w));
    p.b.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
  }
  return p;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Numerically stable binary cross-entropy with logits.
inline double bce_with_logits(double z, int y) {
  return std::max(z, 0.0) - z * static_cast<double>(y) + std::log1p(std::exp(-std::abs(z)));
}

// Intermediates captured by a training-mode forward pass for the backward
// sweep: post-dropout layer inputs, hidden pre-activations, dropout masks.
struct ForwardCache {
  std::vector<DenseMatrix> inputs;
  std::vector<DenseMatrix> preact;
  std::vector<DenseMatrix> dropmask;  // empty when dropout inactive
};

namespace detail {

inline DenseMatrix apply_dropout(const DenseMatrix& h, double p, Rng& rng, DenseMatrix& mask) {
  mask = DenseMatrix(h.rows, h.cols);
  DenseMatrix out(h.rows, h.cols);
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < h.data.size(); ++i) {
    const double m = rng.uniform() < p ? 0.0 : scale;
    mask.data[i] = m;
    out.data[i] = m * h.data[i];
  }
  return out;
}

}  // namespace detail

// Forward pass. GCN: conv layers compute ReLU(A_hat (X W) + b), followed by
// a linear scalar head (one conv gives logits = ReLU(A_hat X W1 + b1) W2 +
// b2); MLP: stacked affine+ReLU layers with the same head. Dropout is
// applied to every layer input, only when dropout_rng is given (training).
inline std::vector<double> forward(const ModelConfig& cfg, const ModelParams& params,
                                   const NormalizedAdjacency* adj, const DenseMatrix& x,
                                   ForwardCache* cache = nullptr, Rng* dropout_rng = nullptr) {
  const int L = cfg.layer_count();
  if (static_cast<int>(params.W.size()) != L)
    throw std::invalid_argument("forward: params do not match config layer count");
  if (params.W[0].rows != x.cols)
    throw std::invalid_argument("forward: feature dimension does not match first layer");
  if (cfg.kind == ModelKind::gcn && adj == nullptr)
    throw std::invalid_argument("forward: gcn requires a normalized adjacency");

  const bool use_dropout = dropout_rng != nullptr && cfg.dropout > 0.0;
  DenseMatrix h = x;
  DenseMatrix z;
  for (int l = 0; l < L; ++l) {
    DenseMatrix a;
    if (use_dropout) {
      DenseMatrix mask;
      a = detail::apply_dropout(h, cfg.dropout, *dropout_rng, mask);
      if (cache) cache->dropmask.push_back(std::move(mask));
    } else {
      a = std::move(h);
    }
    z = matmul(a, params.W[static_cast<std::size_t>(l)]);
    if (l < cfg.conv_count()) z = adj->multiply(z);
    add_row_vector_inplace(z, params.b[static_cast<std::size_t>(l)]);
    if (cache) cache->inputs.push_back(std::move(a));
    if (l < L - 1) {
      if (cache) cache->preact.push_back(z);
      h = z;
      for (double& v : h.data) v = v > 0.0 ? v : 0.0;
    }
  }
  std::vector<double> logits(z.data.begin(), z.data.end());
  return logits;
}

struct LossGrads {
  double loss = 0.0;
  ModelParams grads;
};

// Mean BCE-with-logits over the masked nodes plus (weight_decay/2)*||W||^2
// (weights only, biases excluded), with analytically derived gradients.
// When dropout_rng is given the gradient is that of the dropped network.
inline LossGrads loss_and_grads(const ModelConfig& cfg, const ModelParams& params,
                                const NormalizedAdjacency* adj, const DenseMatrix& x,
                                const std::vector<std::int8_t>& truth,
                                const std::vector<std::int64_t>& mask,
                                Rng* dropout_rng = nullptr) {
  if (mask.empty()) throw std::invalid_argument("loss_and_grads: empty mask");
  ForwardCache cache;
  const std::vector<double> logits = forward(cfg, params, adj, x, &cache, dropout_rng);
  const int L = cfg.layer_count();
  const double inv_m = 1.0 / static_cast<double>(mask.size());

  LossGrads out;
  out.grads = ModelParams::zeros_like(params);

  double data_loss = 0.0;
  DenseMatrix dz(x.rows, 1);
  for (const std::int64_t i : mask) {
    const int y = truth[static_cast<std::size_t>(i)];
    const double z = logits[static_cast<std::size_t>(i)];
    data_loss += bce_with_logits(z, y);
    dz(i, 0) = (sigmoid(z) - static_cast<double>(y)) * inv_m;
  }
  out.loss = data_loss * inv_m;
  for (const auto& w : params.W) {
    double sq = 0.0;
    for (double v : w.data) sq += v * v;
    out.loss += 0.5 * cfg.weight_decay * sq;
  }

  const bool used_dropout = !cache.dropmask.empty();
  for (int l = L - 1; l >= 0; --l) {
    // dz holds the gradient at Z_l. The bias is added after aggregation, so
    // its gradient comes from dz directly; the weight path goes through the
    // (symmetric) adjacency for conv layers.
    out.grads.b[static_cast<std::size_t>(l)] = column_sums(dz);
    DenseMatrix d_affine = l < cfg.conv_count() ? adj->multiply(dz) : std::move(dz);
    auto& gw = out.grads.W[static_cast<std::size_t>(l)];
    gw = matmul_transA(cache.inputs[static_cast<std::size_t>(l)], d_affine);
    if (cfg.weight_decay > 0.0) {
      const auto& w = params.W[static_cast<std::size_t>(l)];
      for (std::size_t k = 0; k < gw.data.size(); ++k)
        gw.data[k] += cfg.weight_decay * w.data[k];
    }
    if (l > 0) {
      DenseMatrix da = matmul_transB(d_affine, params.W[static_cast<std::size_t>(l)]);
      if (used_dropout) {
        const auto& m = cache.dropmask[static_cast<std::size_t>(l)];
        for (std::size_t k = 0; k < da.data.size(); ++k) da.data[k] *= m.data[k];
      }
      const auto& pre = cache.preact[static_cast<std::size_t>(l - 1)];
      for (std::size_t k = 0; k < da.data.size(); ++k)
        if (pre.data[k] <= 0.0) da.data[k] = 0.0;
      dz = std::move(da);
    }
  }
  return out;
}

// Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8).
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  ModelParams m, v;

  explicit AdamState(const ModelParams& p)
      : m(ModelParams::zeros_like(p)), v(ModelParams::zeros_like(p)) {}

  void step(ModelParams& p, const ModelParams& g, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    auto update = [&](double& theta, double& mi, double& vi, double gi) {
      mi = beta1 * mi + (1.0 - beta1) * gi;
      vi = beta2 * vi + (1.0 - beta2) * gi * gi;
      theta -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps);
    };
    for (std::size_t l = 0; l < p.W.size(); ++l) {
      for (std::size_t k = 0; k < p.W[l].data.size(); ++k)
        update(p.W[l].data[k], m.W[l].data[k], v.W[l].data[k], g.W[l].data[k]);
      for (std::size_t k = 0; k < p.b[l].size(); ++k)
        update(p.b[l][k], m.b[l][k], v.b[l][k], g.b[l][k]);
    }
  }
};

struct FitResult {
  ModelParams params;
  EpochLog log;
};

namespace detail {

inline DenseMatrix feature_matrix(const AttributedGraph& g) {
  DenseMatrix x(g.n, g.d);
  x.data = g.features;
  return x;
}

inline double masked_bce(const std::vector<double>& logits, const std::vector<std::int8_t>& truth,
                         const std::vector<std::int64_t>& idx) {
  double s = 0.0;
  for (const std::int64_t i : idx)
    s += bce_with_logits(logits[static_cast<std::size_t>(i)], truth[static_cast<std::size_t>(i)]);
  return s / static_cast<double>(idx.size());
}

}  // namespace detail

// Full-batch Adam training. Validation metrics are recorded after every
// epoch with dropout disabled; each record snapshots the parameters so a
// selection strategy can be evaluated on the test split afterwards.
// Deterministic given cfg (seed included) and graph.
inline FitResult fit(const ModelConfig& cfg, const AttributedGraph& g) {
  cfg.validate();
  const auto train_idx = g.split_indices(Split::train);
  const auto val_idx = g.split_indices(Split::val);
  if (train_idx.empty()) throw std::invalid_argument("fit: empty train split");
  if (val_idx.empty()) throw std::invalid_argument("fit: empty validation split");
  {
    // The per-epoch metrics need both classes, both sensitive groups, and
    // both (y=1,s=*) subgroups in the validation split.
    bool cls[2] = {false, false}, grp[2] = {false, false}, pos[2] = {false, false};
    for (const std::int64_t i : val_idx) {
      const auto ui = static_cast<std::size_t>(i);
      cls[g.labels[ui]] = true;
      grp[g.sens[ui]] = true;
      if (g.labels[ui] == 1) pos[g.sens[ui]] = true;
    }
    if (!cls[0] || !cls[1])
      throw std::invalid_argument("fit: validation split lacks one of the label classes");
    if (!grp[0] || !grp[1])
      throw std::invalid_argument("fit: validation split lacks one of the sensitive groups");
    if (!pos[0] || !pos[1])
      throw std::invalid_argument("fit: validation split lacks a positive-label subgroup");
  }

  const DenseMatrix x = detail::feature_matrix(g);
  NormalizedAdjacency adj;
  const NormalizedAdjacency* adj_ptr = nullptr;
  if (cfg.kind == ModelKind::gcn) {
    adj = normalize_adjacency(g);
    adj_ptr = &adj;
  }

  Rng init_rng(cfg.seed, stream::kParamInit);
  FitResult res;
  res.params = init_params(cfg, g.d, init_rng);
  AdamState adam(res.params);

  res.log.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng drop_rng(cfg.seed, stream::kDropoutBase + static_cast<std::uint64_t>(epoch));
    const LossGrads lg = loss_and_grads(cfg, res.params, adj_ptr, x, g.labels, train_idx,
                                        cfg.dropout > 0.0 ? &drop_rng : nullptr);
    adam.step(res.params, lg.grads, cfg.lr);

    const std::vector<double> logits = forward(cfg, res.params, adj_ptr, x);
    const PredictionSet val_ps = prediction_set_for_split(g, logits, Split::val);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.val_acc = accuracy(val_ps);
    rec.val_roc = roc_auc(val_ps);
    rec.val_f1 = binary_f1(val_ps);
    rec.val_parity = delta_sp(val_ps);
    rec.val_equality = delta_eo(val_ps);
    rec.val_loss = detail::masked_bce(logits, g.labels, val_idx);
    rec.params = std::make_shared<const ModelParams>(res.params);
    res.log.push_back(std::move(rec));
  }
  return res;
}

// Evaluation-mode logits for every node.
inline std::vector<double> predict_logits(const ModelConfig& cfg, const ModelParams& params,
                                          const AttributedGraph& g) {
  const DenseMatrix x = detail::feature_matrix(g);
  if (cfg.kind == ModelKind::gcn) {
    const NormalizedAdjacency adj = normalize_adjacency(g);
    return forward(cfg, params, &adj, x);
  }
  return forward(cfg, params, nullptr, x);
}

}  // namespace fairbench
