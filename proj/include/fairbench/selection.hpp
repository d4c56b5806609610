#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fairbench/epoch_log.hpp"

namespace fairbench {

struct SelectionResult {
  int best_epoch = 0;
  double qualifying_ratio = 0.0;  // ratio at which the chosen epoch qualified (unified only)
  EpochRecord chosen;

  nlohmann::json to_json() const {
    return nlohmann::json{{"best_epoch", best_epoch},
                          {"qualifying_ratio", qualifying_ratio},
                          {"chosen_metrics", nlohmann::json::parse(chosen.to_jsonl())}};
  }
};

namespace detail {
inline void require_log(const EpochLog& log) {
  if (log.empty()) throw std::invalid_argument("selection: empty epoch log");
}
}  // namespace detail

// Unified strategy: walk threshold ratios 0.95 down to 0.90; at each ratio
// the thresholds are that fraction of the log's maxima of val_acc/val_roc/
// val_f1, and among epochs meeting all three the fairness sum
// val_parity+val_equality is minimized. best persists across ratios (the
// literal reading, equivalent to selecting at ratio 0.90 alone).
// With early_exit the walk stops at the first ratio that yields at least one
// qualifying epoch, so the ladder actually relaxes. Ties keep the earliest
// epoch in both variants.
inline SelectionResult select_unified(const EpochLog& log, bool early_exit = false) {
  detail::require_log(log);
  static constexpr std::array<double, 6> ratios = {0.95, 0.94, 0.93, 0.92, 0.91, 0.90};

  double max_acc = 0.0, max_roc = 0.0, max_f1 = 0.0;
  for (const auto& rec : log) {
    max_acc = std::max(max_acc, rec.val_acc);
    max_roc = std::max(max_roc, rec.val_roc);
    max_f1 = std::max(max_f1, rec.val_f1);
  }

  double best_fairness = std::numeric_limits<double>::infinity();
  const EpochRecord* best = nullptr;
  double best_ratio = 0.0;
  for (const double ratio : ratios) {
    const double thr_acc = max_acc * ratio;
    const double thr_roc = max_roc * ratio;
    const double thr_f1 = max_f1 * ratio;
    bool any_qualified = false;
    for (const auto& rec : log) {
      if (rec.val_acc < thr_acc || rec.val_roc < thr_roc || rec.val_f1 < thr_f1) continue;
      any_qualified = true;
      const double fairness = rec.val_parity + rec.val_equality;
      if (fairness < best_fairness) {
        best_fairness = fairness;
        best = &rec;
        best_ratio = ratio;
      }
    }
    if (early_exit && any_qualified) break;
  }
  if (!best) throw std::runtime_error("selection: no epoch qualifies at any threshold ratio");
  SelectionResult r;
  r.best_epoch = best->epoch;
  r.qualifying_ratio = best_ratio;
  r.chosen = *best;
  return r;
}

// Strategy 1: drop epochs below fixed ACC/AUC floors, then minimize the
// fairness sum among the survivors.
inline SelectionResult select_strategy1(const EpochLog& log, double acc_floor = 0.65,
                                        double roc_floor = 0.65) {
  detail::require_log(log);
  if (acc_floor < 0.0 || acc_floor > 1.0 || roc_floor < 0.0 || roc_floor > 1.0)
    throw std::invalid_argument("selection: floors must be in [0,1]");
  const EpochRecord* best = nullptr;
  double best_fairness = std::numeric_limits<double>::infinity();
  for (const auto& rec : log) {
    if (rec.val_acc < acc_floor || rec.val_roc < roc_floor) continue;
    const double fairness = rec.val_parity + rec.val_equality;
    if (fairness < best_fairness) {
      best_fairness = fairness;
      best = &rec;
    }
  }
  if (!best) throw std::runtime_error("selection: no epoch meets the ACC/AUC floors");
  SelectionResult r;
  r.best_epoch = best->epoch;
  r.chosen = *best;
  return r;
}

// Strategy 2: lowest validation loss.
inline SelectionResult select_strategy2(const EpochLog& log) {
  detail::require_log(log);
  const EpochRecord* best = &log.front();
  for (const auto& rec : log)
    if (rec.val_loss < best->val_loss) best = &rec;
  SelectionResult r;
  r.best_epoch = best->epoch;
  r.chosen = *best;
  return r;
}

// Strategy 3: highest validation AUC.
inline SelectionResult select_strategy3(const EpochLog& log) {
  detail::require_log(log);
  const EpochRecord* best = &log.front();
  for (const auto& rec : log)
    if (rec.val_roc > best->val_roc) best = &rec;
  SelectionResult r;
  r.best_epoch = best->epoch;
  r.chosen = *best;
  return r;
}

enum class SelectionStrategy { unified, s1, s2, s3 };

inline SelectionStrategy parse_strategy(const std::string& s) {
  if (s == "unified") return SelectionStrategy::unified;
  if (s == "s1") return SelectionStrategy::s1;
  if (s == "s2") return SelectionStrategy::s2;
  if (s == "s3") return SelectionStrategy::s3;
  throw std::invalid_argument("unknown strategy '" + s + "' (expected unified|s1|s2|s3)");
}

inline const char* to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::unified: return "unified";
    case SelectionStrategy::s1: return "s1";
    case SelectionStrategy::s2: return "s2";
    default: return "s3";
  }
}

struct SelectionPolicy {
  SelectionStrategy strategy = SelectionStrategy::unified;
  bool early_exit = false;
  double acc_floor = 0.65;
  double roc_floor = 0.65;

  SelectionResult apply(const EpochLog& log) const {
    switch (strategy) {
      case SelectionStrategy::unified: return select_unified(log, early_exit);
      case SelectionStrategy::s1: return select_strategy1(log, acc_floor, roc_floor);
      case SelectionStrategy::s2: return select_strategy2(log);
      default: return select_strategy3(log);
    }
  }
};

}  // namespace fairbench
