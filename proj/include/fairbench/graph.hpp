#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairbench {

// One of the four (sensitive attribute, label) populations.
enum class Group : int { S0Y0 = 0, S0Y1 = 1, S1Y0 = 2, S1Y1 = 3 };

constexpr int kNumGroups = 4;

inline Group group_of(int s, int y) {
  if ((s != 0 && s != 1) || (y != 0 && y != 1))
    throw std::invalid_argument("group_of: s and y must be binary");
  return static_cast<Group>(2 * s + y);
}

inline int group_sens(Group g) { return static_cast<int>(g) >> 1; }
inline int group_label(Group g) { return static_cast<int>(g) & 1; }

inline const char* to_string(Group g) {
  static const char* names[] = {"S0Y0", "S0Y1", "S1Y0", "S1Y1"};
  return names[static_cast<int>(g)];
}

// Classification of an undirected edge by the unordered pair of its
// endpoints' groups. Ten values: four same-group, six cross-group.
enum class EdgeType : int { E1 = 0, E2, E3, E4, E5, E6, E7, E8, E9, E10 };

constexpr int kNumEdgeTypes = 10;

namespace detail {
// Symmetric lookup: [group a][group b] -> edge type index.
constexpr int kEdgeTypeTable[4][4] = {
    // S0Y0  S0Y1  S1Y0  S1Y1
    {0, 6, 4, 9},   // S0Y0: E1 E7 E5 E10
    {6, 1, 8, 5},   // S0Y1: E7 E2 E9 E6
    {4, 8, 2, 7},   // S1Y0: E5 E9 E3 E8
    {9, 5, 7, 3}};  // S1Y1: E10 E6 E8 E4

// Inverse map: edge type index -> unordered group pair.
constexpr std::pair<int, int> kEdgeTypeGroups[kNumEdgeTypes] = {
    {0, 0}, {1, 1}, {2, 2}, {3, 3}, {0, 2}, {1, 3}, {0, 1}, {2, 3}, {1, 2}, {0, 3}};
}  // namespace detail

inline EdgeType edge_type_of(Group a, Group b) {
  return static_cast<EdgeType>(detail::kEdgeTypeTable[static_cast<int>(a)][static_cast<int>(b)]);
}

inline std::pair<Group, Group> groups_of_edge_type(EdgeType t) {
  const auto [a, b] = detail::kEdgeTypeGroups[static_cast<int>(t)];
  return {static_cast<Group>(a), static_cast<Group>(b)};
}

inline const char* to_string(EdgeType t) {
  static const char* names[] = {"E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "E9", "E10"};
  return names[static_cast<int>(t)];
}

inline EdgeType parse_edge_type(std::string_view name) {
  for (int i = 0; i < kNumEdgeTypes; ++i) {
    if (name == to_string(static_cast<EdgeType>(i))) return static_cast<EdgeType>(i);
  }
  throw std::invalid_argument("unknown edge type '" + std::string(name) + "'");
}

enum class Split : int { train = 0, val = 1, test = 2, none = 3 };

inline const char* to_string(Split s) {
  static const char* names[] = {"train", "val", "test", "none"};
  return names[static_cast<int>(s)];
}

inline Split parse_split(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (name == to_string(static_cast<Split>(i))) return static_cast<Split>(i);
  }
  throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

// Undirected simple graph with per-node features, binary label y, binary
// sensitive attribute s, and train/val/test split assignment. Edges are
// stored as (u,v) pairs with u<v, sorted, without duplicates. Immutable by
// convention once built: all operations return new graphs.
struct AttributedGraph {
  std::int64_t n = 0;
  std::int64_t d = 0;
  std::vector<double> features;  // n*d, row-major
  std::vector<std::int8_t> labels;
  std::vector<std::int8_t> sens;
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  std::vector<Split> split;

  Group group(std::int64_t i) const {
    return static_cast<Group>(2 * sens[static_cast<std::size_t>(i)] +
                              labels[static_cast<std::size_t>(i)]);
  }

  double feature(std::int64_t i, std::int64_t j) const {
    return features[static_cast<std::size_t>(i * d + j)];
  }

  std::vector<std::int64_t> split_indices(Split s) const {
    std::vector<std::int64_t> idx;
    for (std::int64_t i = 0; i < n; ++i) {
      if (split[static_cast<std::size_t>(i)] == s) idx.push_back(i);
    }
    return idx;
  }

  // Throws if any structural invariant is violated.
  void validate() const {
    if (n < 0 || d < 0) throw std::invalid_argument("graph: negative dimensions");
    const auto un = static_cast<std::size_t>(n);
    if (labels.size() != un || sens.size() != un || split.size() != un)
      throw std::invalid_argument("graph: node attribute length must equal n");
    if (features.size() != static_cast<std::size_t>(n * d))
      throw std::invalid_argument("graph: feature matrix must be n*d");
    for (std::size_t i = 0; i < un; ++i) {
      if (labels[i] != 0 && labels[i] != 1)
        throw std::invalid_argument("graph: labels must be binary");
      if (sens[i] != 0 && sens[i] != 1)
        throw std::invalid_argument("graph: sensitive attribute must be binary");
    }
    for (double x : features) {
      if (!std::isfinite(x)) throw std::invalid_argument("graph: non-finite feature value");
    }
    std::pair<std::int32_t, std::int32_t> prev{-1, -1};
    for (const auto& e : edges) {
      if (e.first < 0 || e.second >= n)
        throw std::invalid_argument("graph: edge endpoint out of range");
      if (e.first == e.second) throw std::invalid_argument("graph: self-loop");
      if (e.first > e.second) throw std::invalid_argument("graph: edge not stored as u<v");
      if (!(prev < e)) throw std::invalid_argument("graph: edges not sorted or duplicated");
      prev = e;
    }
  }
};

inline EdgeType classify_edge_type(const AttributedGraph& g, std::int64_t u, std::int64_t v) {
  if (u < 0 || v < 0 || u >= g.n || v >= g.n)
    throw std::invalid_argument("classify_edge_type: node out of range");
  if (u == v) throw std::invalid_argument("classify_edge_type: self-loop is not a valid edge");
  return edge_type_of(g.group(u), g.group(v));
}

// Group sizes, per-type edge counts and proportions, and average degree.
// has_edges distinguishes "all proportions zero" from "no edges at all".
struct GraphStats {
  std::array<std::int64_t, kNumGroups> group_sizes{};
  std::array<std::int64_t, kNumEdgeTypes> edge_type_counts{};
  std::array<double, kNumEdgeTypes> edge_type_proportions{};
  double average_degree = 0.0;
  bool has_edges = false;

  std::int64_t total_edges() const {
    std::int64_t t = 0;
    for (auto c : edge_type_counts) t += c;
    return t;
  }
};

inline GraphStats compute_stats(const AttributedGraph& g) {
  GraphStats st;
  for (std::int64_t i = 0; i < g.n; ++i) ++st.group_sizes[static_cast<int>(g.group(i))];
  for (const auto& e : g.edges)
    ++st.edge_type_counts[static_cast<int>(classify_edge_type(g, e.first, e.second))];
  const std::int64_t m = static_cast<std::int64_t>(g.edges.size());
  st.has_edges = m > 0;
  if (m > 0) {
    for (int t = 0; t < kNumEdgeTypes; ++t)
      st.edge_type_proportions[static_cast<std::size_t>(t)] =
          static_cast<double>(st.edge_type_counts[static_cast<std::size_t>(t)]) /
          static_cast<double>(m);
  }
  if (g.n > 0) st.average_degree = 2.0 * static_cast<double>(m) / static_cast<double>(g.n);
  return st;
}

}  // namespace fairbench
