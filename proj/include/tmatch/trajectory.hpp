#pragma once

#include <charconv>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "tmatch/errors.hpp"

namespace tmatch {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Recorded time series: a time column followed by named channels of equal
/// length, in insertion order.
class Trajectory {
 public:
  Trajectory() { names_.push_back("t"); cols_.emplace_back(); }

  std::size_t add_channel(const std::string& name) {
    if (has(name)) throw ConfigError("Trajectory: duplicate channel '" + name + "'");
    names_.push_back(name);
    cols_.emplace_back();
    cols_.back().reserve(cols_.front().capacity());
    return cols_.size() - 1;
  }

  void reserve(std::size_t rows) {
    for (auto& c : cols_) c.reserve(rows);
  }

  /// Appends one row; `values` excludes the time column.
  void push_row(double t, const std::vector<double>& values) {
    if (values.size() + 1 != cols_.size()) throw ConfigError("Trajectory: row width mismatch");
    if (!cols_[0].empty() && !(t > cols_[0].back())) throw ConfigError("Trajectory: times must increase");
    cols_[0].push_back(t);
    for (std::size_t k = 0; k < values.size(); ++k) cols_[k + 1].push_back(values[k]);
  }

  bool has(const std::string& name) const {
    for (const auto& n : names_)
      if (n == name) return true;
    return false;
  }
  const std::vector<double>& times() const { return cols_[0]; }
  const std::vector<double>& channel(const std::string& name) const {
    for (std::size_t k = 0; k < names_.size(); ++k)
      if (names_[k] == name) return cols_[k];
    throw ConfigError("Trajectory: no channel '" + name + "'");
  }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t rows() const { return cols_[0].size(); }
  std::size_t channels() const { return cols_.size() - 1; }

  void write_csv(std::ostream& out) const {
    for (std::size_t k = 0; k < names_.size(); ++k) out << (k ? "," : "") << names_[k];
    out << '\n';
    for (std::size_t r = 0; r < rows(); ++r) {
      for (std::size_t k = 0; k < cols_.size(); ++k) out << (k ? "," : "") << format_double(cols_[k][r]);
      out << '\n';
    }
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    write_csv(out);
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> cols_;
};

}  // namespace tmatch
