#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "fairbench/graph.hpp"
#include "fairbench/rng.hpp"
#include "fairbench/syngen.hpp"

namespace fairbench {

// Targeted edge-type surgery: per-type signed deltas, negative = remove that
// many edges of the type, positive = add. Removals and additions are uniform
// over the eligible sets.
struct RebalanceSpec {
  std::array<std::int64_t, kNumEdgeTypes> deltas{};
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    nlohmann::json d;
    for (int t = 0; t < kNumEdgeTypes; ++t) {
      if (deltas[static_cast<std::size_t>(t)] != 0)
        d[to_string(static_cast<EdgeType>(t))] = deltas[static_cast<std::size_t>(t)];
    }
    return nlohmann::json{{"deltas", d}, {"seed", seed}};
  }

  static RebalanceSpec from_json(const nlohmann::json& j) {
    RebalanceSpec spec;
    for (const auto& [key, val] : j.at("deltas").items())
      spec.deltas[static_cast<std::size_t>(static_cast<int>(parse_edge_type(key)))] =
          val.get<std::int64_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    return spec;
  }
};

// Recipes that produced the published New German / New Bail / New Credit
// datasets from their originals.
inline std::map<std::string, RebalanceSpec> builtin_recipes() {
  std::map<std::string, RebalanceSpec> r;
  {
    RebalanceSpec s;
    s.deltas[static_cast<int>(EdgeType::E7)] = -4000;
    s.deltas[static_cast<int>(EdgeType::E1)] = 500;
    s.deltas[static_cast<int>(EdgeType::E3)] = 1000;
    s.deltas[static_cast<int>(EdgeType::E4)] = 1000;
    r["new-german"] = s;
  }
  {
    RebalanceSpec s;
    s.deltas[static_cast<int>(EdgeType::E5)] = -40000;
    s.deltas[static_cast<int>(EdgeType::E2)] = 15000;
    s.deltas[static_cast<int>(EdgeType::E3)] = 20000;
    s.deltas[static_cast<int>(EdgeType::E4)] = 4000;
    r["new-bail"] = s;
  }
  {
    RebalanceSpec s;
    s.deltas[static_cast<int>(EdgeType::E7)] = -30000;
    r["new-credit"] = s;
  }
  return r;
}

namespace detail {

inline std::uint64_t pair_key(std::int32_t u, std::int32_t v, std::int64_t n) {
  return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n) +
         static_cast<std::uint64_t>(v);
}

}  // namespace detail

// Applies the spec to g. For each type t the new count is old + deltas[t];
// removed edges are uniform without replacement among existing type-t edges,
// added edges uniform among absent type-t pairs. Node data is untouched.
// Removals run before additions in E1..E10 order, each on its own RNG
// substream, so runs are reproducible and per-type draws independent.
inline AttributedGraph apply_rebalance(const AttributedGraph& g, const RebalanceSpec& spec) {
  g.validate();
  const GraphStats st = compute_stats(g);
  const auto pairs = pair_counts(st.group_sizes);

  // Feasibility first so errors name the type and headroom before any work.
  for (int t = 0; t < kNumEdgeTypes; ++t) {
    const std::int64_t delta = spec.deltas[static_cast<std::size_t>(t)];
    const std::int64_t count = st.edge_type_counts[static_cast<std::size_t>(t)];
    if (delta < 0 && -delta > count)
      throw std::invalid_argument(std::string("rebalance: cannot remove ") +
                                  std::to_string(-delta) + " " +
                                  to_string(static_cast<EdgeType>(t)) + " edges, only " +
                                  std::to_string(count) + " exist");
    if (delta > 0) {
      const auto headroom =
          static_cast<std::int64_t>(pairs[static_cast<std::size_t>(t)]) - count;
      if (delta > headroom)
        throw std::invalid_argument(std::string("rebalance: cannot add ") +
                                    std::to_string(delta) + " " +
                                    to_string(static_cast<EdgeType>(t)) + " edges, only " +
                                    std::to_string(headroom) + " non-edge pairs available");
    }
  }

  // Per-type index lists over the existing edge array.
  std::array<std::vector<std::int64_t>, kNumEdgeTypes> by_type;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(g.edges.size()); ++i) {
    const auto& e = g.edges[static_cast<std::size_t>(i)];
    by_type[static_cast<std::size_t>(static_cast<int>(classify_edge_type(g, e.first, e.second)))]
        .push_back(i);
  }

  std::vector<bool> removed(g.edges.size(), false);
  for (int t = 0; t < kNumEdgeTypes; ++t) {
    const std::int64_t delta = spec.deltas[static_cast<std::size_t>(t)];
    if (delta >= 0) continue;
    Rng rng(spec.seed, stream::kRemoveBase + static_cast<std::uint64_t>(t));
    const auto& idx = by_type[static_cast<std::size_t>(t)];
    for (std::int64_t pick : rng.sample_indices(static_cast<std::int64_t>(idx.size()), -delta))
      removed[static_cast<std::size_t>(idx[static_cast<std::size_t>(pick)])] = true;
  }

  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  edges.reserve(g.edges.size());
  std::unordered_set<std::uint64_t> present;
  present.reserve(g.edges.size() * 2);
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (removed[i]) continue;
    edges.push_back(g.edges[i]);
    present.insert(detail::pair_key(g.edges[i].first, g.edges[i].second, g.n));
  }

  // Node id lists per group, for sampling candidate endpoints.
  std::array<std::vector<std::int32_t>, kNumGroups> nodes_of;
  for (std::int64_t i = 0; i < g.n; ++i)
    nodes_of[static_cast<std::size_t>(static_cast<int>(g.group(i)))].push_back(
        static_cast<std::int32_t>(i));

  for (int t = 0; t < kNumEdgeTypes; ++t) {
    const std::int64_t delta = spec.deltas[static_cast<std::size_t>(t)];
    if (delta <= 0) continue;
    Rng rng(spec.seed, stream::kAddBase + static_cast<std::uint64_t>(t));
    const auto [ga, gb] = groups_of_edge_type(static_cast<EdgeType>(t));
    const auto& na = nodes_of[static_cast<std::size_t>(static_cast<int>(ga))];
    const auto& nb = nodes_of[static_cast<std::size_t>(static_cast<int>(gb))];

    std::int64_t added = 0;
    // Rejection sampling stays uniform over absent pairs; cap attempts and
    // fall back to explicit enumeration when the eligible set is dense with
    // hits already taken.
    const std::int64_t max_attempts = 50 * delta + 1000;
    std::int64_t attempts = 0;
    while (added < delta && attempts < max_attempts) {
      ++attempts;
      std::int32_t u, v;
      if (ga == gb) {
        const auto m = static_cast<std::uint64_t>(na.size());
        const auto i = rng.uniform_below(m);
        const auto j = rng.uniform_below(m - 1);
        u = na[static_cast<std::size_t>(i)];
        v = na[static_cast<std::size_t>(j < i ? j : j + 1)];
      } else {
        u = na[static_cast<std::size_t>(rng.uniform_below(na.size()))];
        v = nb[static_cast<std::size_t>(rng.uniform_below(nb.size()))];
      }
      if (u > v) std::swap(u, v);
      const std::uint64_t key = detail::pair_key(u, v, g.n);
      if (present.insert(key).second) {
        edges.emplace_back(u, v);
        ++added;
      }
    }
    if (added < delta) {
      // Enumerate the remaining eligible pairs and sample uniformly.
      std::vector<std::pair<std::int32_t, std::int32_t>> eligible;
      if (ga == gb) {
        for (std::size_t i = 0; i < na.size(); ++i)
          for (std::size_t j = i + 1; j < na.size(); ++j) {
            const auto u = std::min(na[i], na[j]);
            const auto v = std::max(na[i], na[j]);
            if (!present.count(detail::pair_key(u, v, g.n))) eligible.emplace_back(u, v);
          }
      } else {
        for (const auto a : na)
          for (const auto b : nb) {
            const auto u = std::min(a, b);
            const auto v = std::max(a, b);
            if (!present.count(detail::pair_key(u, v, g.n))) eligible.emplace_back(u, v);
          }
      }
      for (std::int64_t pick :
           rng.sample_indices(static_cast<std::int64_t>(eligible.size()), delta - added)) {
        const auto& e = eligible[static_cast<std::size_t>(pick)];
        present.insert(detail::pair_key(e.first, e.second, g.n));
        edges.push_back(e);
      }
    }
  }

  AttributedGraph out;
  out.n = g.n;
  out.d = g.d;
  out.features = g.features;
  out.labels = g.labels;
  out.sens = g.sens;
  out.split = g.split;
  std::sort(edges.begin(), edges.end());
  out.edges = std::move(edges);
  out.validate();
  return out;
}

}  // namespace fairbench
