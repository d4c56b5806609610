#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairbench {

// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_i64(std::string_view s, std::int64_t& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline void split_fields(std::string_view line, char delim, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == delim) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
}

// Line reader that tracks file name and line number for error reporting.
class CsvReader {
 public:
  explicit CsvReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw std::runtime_error(path + ": cannot open file");
  }

  bool next_line(std::string& line) {
    if (!std::getline(in_, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno_;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(path_ + ":" + std::to_string(lineno_) + ": " + what);
  }

  double require_double(std::string_view field) const {
    double v;
    if (!parse_double(field, v)) fail("malformed number '" + std::string(field) + "'");
    return v;
  }

  std::int64_t require_i64(std::string_view field) const {
    std::int64_t v;
    if (!parse_i64(field, v)) fail("malformed integer '" + std::string(field) + "'");
    return v;
  }

  const std::string& path() const { return path_; }
  int lineno() const { return lineno_; }

 private:
  std::string path_;
  std::ifstream in_;
  int lineno_ = 0;
};

}  // namespace fairbench
