#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbench/csv.hpp"

namespace fairbench {

struct ModelParams;

// Validation metrics recorded after one training epoch. The params pointer
// is only populated by in-memory fit runs; logs replayed from disk carry
// metrics alone.
struct EpochRecord {
  int epoch = 0;  // 1-based
  double val_acc = 0.0;
  double val_roc = 0.0;
  double val_f1 = 0.0;
  double val_parity = 0.0;
  double val_equality = 0.0;
  double val_loss = 0.0;
  std::shared_ptr<const ModelParams> params;

  // One JSONL line, fields in this fixed order.
  std::string to_jsonl() const {
    std::ostringstream os;
    os << "{\"epoch\":" << epoch << ",\"val_acc\":" << format_double(val_acc)
       << ",\"val_roc\":" << format_double(val_roc) << ",\"val_f1\":" << format_double(val_f1)
       << ",\"val_parity\":" << format_double(val_parity)
       << ",\"val_equality\":" << format_double(val_equality)
       << ",\"val_loss\":" << format_double(val_loss) << "}";
    return os.str();
  }

  static EpochRecord from_json(const nlohmann::json& j) {
    EpochRecord r;
    r.epoch = j.at("epoch").get<int>();
    r.val_acc = j.at("val_acc").get<double>();
    r.val_roc = j.at("val_roc").get<double>();
    r.val_f1 = j.at("val_f1").get<double>();
    r.val_parity = j.at("val_parity").get<double>();
    r.val_equality = j.at("val_equality").get<double>();
    r.val_loss = j.at("val_loss").get<double>();
    return r;
  }
};

using EpochLog = std::vector<EpochRecord>;

inline void save_epoch_log(const EpochLog& log, std::ostream& out) {
  for (const auto& rec : log) out << rec.to_jsonl() << "\n";
}

inline void save_epoch_log(const EpochLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  save_epoch_log(log, out);
}

inline EpochLog load_epoch_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open file");
  EpochLog log;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      log.push_back(EpochRecord::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace fairbench
