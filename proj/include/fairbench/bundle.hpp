#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbench/csv.hpp"
#include "fairbench/graph.hpp"

namespace fairbench {

// Sidecar metadata stored in meta.json. `generator` is the JSON form of the
// SynConfig that produced the graph, or null for ingested datasets.
struct BundleMeta {
  std::string name;
  std::optional<std::int64_t> seed;
  nlohmann::json generator;  // null when absent
};

// Dataset bundle directory layout:
//   meta.json      {"name","n","d","seed","generator"}
//   nodes.csv      id,y,s,split   (rows sorted by id)
//   features.csv   n rows of d comma-separated doubles, shortest round-trip
//   edges.csv      u,v with u<v, rows sorted
// Writing is canonical: saving a loaded bundle reproduces identical bytes.
inline void save_bundle(const AttributedGraph& g, const std::filesystem::path& dir,
                        const BundleMeta& meta = {}) {
  g.validate();
  std::filesystem::create_directories(dir);

  {
    nlohmann::json j;
    j["name"] = meta.name;
    j["n"] = g.n;
    j["d"] = g.d;
    if (meta.seed)
      j["seed"] = *meta.seed;
    else
      j["seed"] = nullptr;
    j["generator"] = meta.generator.is_null() ? nlohmann::json(nullptr) : meta.generator;
    std::ofstream out(dir / "meta.json");
    out << j.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "nodes.csv");
    out << "id,y,s,split\n";
    for (std::int64_t i = 0; i < g.n; ++i) {
      out << i << ',' << int(g.labels[static_cast<std::size_t>(i)]) << ','
          << int(g.sens[static_cast<std::size_t>(i)]) << ','
          << to_string(g.split[static_cast<std::size_t>(i)]) << '\n';
    }
  }
  {
    std::ofstream out(dir / "features.csv");
    for (std::int64_t i = 0; i < g.n; ++i) {
      for (std::int64_t j = 0; j < g.d; ++j) {
        if (j) out << ',';
        out << format_double(g.feature(i, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "edges.csv");
    out << "u,v\n";
    for (const auto& e : g.edges) out << e.first << ',' << e.second << '\n';
  }
}

inline AttributedGraph load_bundle(const std::filesystem::path& dir, BundleMeta* meta = nullptr) {
  for (const char* f : {"meta.json", "nodes.csv", "features.csv", "edges.csv"}) {
    if (!std::filesystem::exists(dir / f))
      throw std::runtime_error((dir / f).string() + ": missing bundle file");
  }

  AttributedGraph g;
  BundleMeta m;
  {
    std::ifstream in(dir / "meta.json");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw std::runtime_error((dir / "meta.json").string() + ": " + e.what());
    }
    m.name = j.value("name", std::string{});
    g.n = j.at("n").get<std::int64_t>();
    g.d = j.at("d").get<std::int64_t>();
    if (j.contains("seed") && !j["seed"].is_null()) m.seed = j["seed"].get<std::int64_t>();
    if (j.contains("generator")) m.generator = j["generator"];
    if (g.n < 0 || g.d < 0)
      throw std::runtime_error((dir / "meta.json").string() + ": negative n or d");
  }

  {
    CsvReader rd((dir / "nodes.csv").string());
    std::string line;
    std::vector<std::string_view> f;
    if (!rd.next_line(line) || line != "id,y,s,split") rd.fail("expected header 'id,y,s,split'");
    g.labels.reserve(static_cast<std::size_t>(g.n));
    while (rd.next_line(line)) {
      split_fields(line, ',', f);
      if (f.size() != 4) rd.fail("expected 4 fields");
      const std::int64_t id = rd.require_i64(f[0]);
      if (id != static_cast<std::int64_t>(g.labels.size()))
        rd.fail("node ids must be 0..n-1 in order, got " + std::to_string(id));
      const std::int64_t y = rd.require_i64(f[1]);
      const std::int64_t s = rd.require_i64(f[2]);
      if ((y != 0 && y != 1) || (s != 0 && s != 1)) rd.fail("y and s must be 0 or 1");
      g.labels.push_back(static_cast<std::int8_t>(y));
      g.sens.push_back(static_cast<std::int8_t>(s));
      try {
        g.split.push_back(parse_split(f[3]));
      } catch (const std::exception& e) {
        rd.fail(e.what());
      }
    }
    if (static_cast<std::int64_t>(g.labels.size()) != g.n)
      rd.fail("row-count mismatch: nodes.csv has " + std::to_string(g.labels.size()) +
              " rows, meta.json says n=" + std::to_string(g.n));
  }

  {
    CsvReader rd((dir / "features.csv").string());
    std::string line;
    std::vector<std::string_view> f;
    g.features.reserve(static_cast<std::size_t>(g.n * g.d));
    std::int64_t rows = 0;
    while (rd.next_line(line)) {
      split_fields(line, ',', f);
      if (g.d == 0 && f.size() == 1 && f[0].empty()) f.clear();
      if (static_cast<std::int64_t>(f.size()) != g.d)
        rd.fail("expected " + std::to_string(g.d) + " fields, got " + std::to_string(f.size()));
      for (const auto& field : f) g.features.push_back(rd.require_double(field));
      ++rows;
    }
    if (rows != g.n)
      rd.fail("row-count mismatch: features.csv has " + std::to_string(rows) +
              " rows, meta.json says n=" + std::to_string(g.n));
  }

  {
    CsvReader rd((dir / "edges.csv").string());
    std::string line;
    std::vector<std::string_view> f;
    if (!rd.next_line(line) || line != "u,v") rd.fail("expected header 'u,v'");
    while (rd.next_line(line)) {
      split_fields(line, ',', f);
      if (f.size() != 2) rd.fail("expected 2 fields");
      std::int64_t u = rd.require_i64(f[0]);
      std::int64_t v = rd.require_i64(f[1]);
      if (u == v) rd.fail("invalid edge (" + std::to_string(u) + "," + std::to_string(v) +
                          "): self-loop");
      if (u < 0 || v < 0 || u >= g.n || v >= g.n)
        rd.fail("edge endpoint out of range [0," + std::to_string(g.n) + ")");
      if (u > v) std::swap(u, v);
      g.edges.emplace_back(static_cast<std::int32_t>(u), static_cast<std::int32_t>(v));
    }
    std::sort(g.edges.begin(), g.edges.end());
    const auto dup = std::adjacent_find(g.edges.begin(), g.edges.end());
    if (dup != g.edges.end())
      rd.fail("duplicate edge (" + std::to_string(dup->first) + "," +
              std::to_string(dup->second) + ")");
  }

  g.validate();
  if (meta) *meta = std::move(m);
  return g;
}

}  // namespace fairbench
