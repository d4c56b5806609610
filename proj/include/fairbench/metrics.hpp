#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "fairbench/graph.hpp"

namespace fairbench {

// Per-node classifier scores aligned with ground truth and sensitive
// attributes. Scores are logits; the hard label is score >= 0, i.e.
// probability 0.5 after the sigmoid.
struct PredictionSet {
  std::vector<double> scores;
  std::vector<std::int8_t> hard;
  std::vector<std::int8_t> truth;
  std::vector<std::int8_t> sens;

  static PredictionSet from_scores(std::vector<double> scores, std::vector<std::int8_t> truth,
                                   std::vector<std::int8_t> sens) {
    if (scores.size() != truth.size() || scores.size() != sens.size())
      throw std::invalid_argument("prediction set: vector lengths differ");
    PredictionSet p;
    p.hard.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
      p.hard[i] = scores[i] >= 0.0 ? 1 : 0;
    p.scores = std::move(scores);
    p.truth = std::move(truth);
    p.sens = std::move(sens);
    return p;
  }

  std::size_t size() const { return scores.size(); }
};

namespace detail {
inline void require_nonempty(const PredictionSet& p) {
  if (p.size() == 0) throw std::invalid_argument("metric: empty prediction set");
}
}  // namespace detail

inline double accuracy(const PredictionSet& p) {
  detail::require_nonempty(p);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.hard[i] == p.truth[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(p.size());
}

// F1 on the positive class. 0 when TP=0 with any FP or FN; the all-empty
// case (no positives anywhere) is defined as 0 and flagged degenerate.
inline double binary_f1(const PredictionSet& p, bool* degenerate = nullptr) {
  detail::require_nonempty(p);
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.hard[i] == 1 && p.truth[i] == 1) ++tp;
    if (p.hard[i] == 1 && p.truth[i] == 0) ++fp;
    if (p.hard[i] == 0 && p.truth[i] == 1) ++fn;
  }
  if (degenerate) *degenerate = (tp == 0 && fp == 0 && fn == 0);
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly,
// ties counted 0.5. Computed via average ranks, O(m log m).
inline double roc_auc(const PredictionSet& p) {
  detail::require_nonempty(p);
  const std::size_t m = p.size();
  std::int64_t n_pos = 0;
  for (std::size_t i = 0; i < m; ++i) n_pos += p.truth[i];
  const std::int64_t n_neg = static_cast<std::int64_t>(m) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("roc_auc: truth contains a single class");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p.scores[a] < p.scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j < m && p.scores[order[j]] == p.scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (p.truth[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

// |P(yhat=1 | s=0) - P(yhat=1 | s=1)|
inline double delta_sp(const PredictionSet& p) {
  detail::require_nonempty(p);
  std::int64_t n0 = 0, n1 = 0, pos0 = 0, pos1 = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.sens[i] == 0) {
      ++n0;
      pos0 += p.hard[i];
    } else {
      ++n1;
      pos1 += p.hard[i];
    }
  }
  if (n0 == 0) throw std::invalid_argument("delta_sp: sensitive group s=0 is empty");
  if (n1 == 0) throw std::invalid_argument("delta_sp: sensitive group s=1 is empty");
  return std::abs(static_cast<double>(pos0) / static_cast<double>(n0) -
                  static_cast<double>(pos1) / static_cast<double>(n1));
}

// |P(yhat=1 | y=1, s=0) - P(yhat=1 | y=1, s=1)|
inline double delta_eo(const PredictionSet& p) {
  detail::require_nonempty(p);
  std::int64_t n0 = 0, n1 = 0, pos0 = 0, pos1 = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.truth[i] != 1) continue;
    if (p.sens[i] == 0) {
      ++n0;
      pos0 += p.hard[i];
    } else {
      ++n1;
      pos1 += p.hard[i];
    }
  }
  if (n0 == 0) throw std::invalid_argument("delta_eo: subgroup (y=1, s=0) is empty");
  if (n1 == 0) throw std::invalid_argument("delta_eo: subgroup (y=1, s=1) is empty");
  return std::abs(static_cast<double>(pos0) / static_cast<double>(n0) -
                  static_cast<double>(pos1) / static_cast<double>(n1));
}

// Accuracy restricted to each non-empty (s,y) group; empty groups omitted.
inline std::map<Group, double> group_accuracy(const PredictionSet& p) {
  detail::require_nonempty(p);
  std::array<std::int64_t, kNumGroups> total{}, correct{};
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int gi = 2 * p.sens[i] + p.truth[i];
    ++total[static_cast<std::size_t>(gi)];
    if (p.hard[i] == p.truth[i]) ++correct[static_cast<std::size_t>(gi)];
  }
  std::map<Group, double> out;
  for (int gi = 0; gi < kNumGroups; ++gi) {
    if (total[static_cast<std::size_t>(gi)] > 0)
      out[static_cast<Group>(gi)] = static_cast<double>(correct[static_cast<std::size_t>(gi)]) /
                                    static_cast<double>(total[static_cast<std::size_t>(gi)]);
  }
  return out;
}

// All metrics of one prediction set. Values live in [0,1]; CLI output
// multiplies by 100 to match the usual percentage-point presentation.
struct MetricBundle {
  double acc = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
  double delta_sp = 0.0;
  double delta_eo = 0.0;
  std::map<Group, double> group_acc;
  bool f1_degenerate = false;

  nlohmann::json to_json() const {
    nlohmann::json g;
    for (const auto& [grp, v] : group_acc) g[to_string(grp)] = v;
    return nlohmann::json{{"acc", acc},           {"auc", auc},
                          {"f1", f1},             {"delta_sp", delta_sp},
                          {"delta_eo", delta_eo}, {"group_acc", g}};
  }
};

inline MetricBundle evaluate_all(const PredictionSet& p) {
  MetricBundle b;
  b.acc = accuracy(p);
  b.auc = roc_auc(p);
  b.f1 = binary_f1(p, &b.f1_degenerate);
  b.delta_sp = delta_sp(p);
  b.delta_eo = delta_eo(p);
  b.group_acc = group_accuracy(p);
  return b;
}

// Prediction set for one split of a graph, given per-node logits.
inline PredictionSet prediction_set_for_split(const AttributedGraph& g,
                                              const std::vector<double>& logits, Split split) {
  if (static_cast<std::int64_t>(logits.size()) != g.n)
    throw std::invalid_argument("prediction_set_for_split: logits length must equal n");
  std::vector<double> scores;
  std::vector<std::int8_t> truth, sens;
  for (std::int64_t i = 0; i < g.n; ++i) {
    if (g.split[static_cast<std::size_t>(i)] != split) continue;
    scores.push_back(logits[static_cast<std::size_t>(i)]);
    truth.push_back(g.labels[static_cast<std::size_t>(i)]);
    sens.push_back(g.sens[static_cast<std::size_t>(i)]);
  }
  return PredictionSet::from_scores(std::move(scores), std::move(truth), std::move(sens));
}

}  // namespace fairbench
