#pragma once

// CSV tables with a JSON metadata sidecar (<name>.csv + <name>.json).

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "meshfree/errors.hpp"

namespace meshfree {

/// Rows of strings/numbers with a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row() {
    rows_.emplace_back();
    return *this;
  }
  CsvTable& add(const std::string& v) {
    rows_.back().push_back(v);
    return *this;
  }
  CsvTable& add(const char* v) { return add(std::string(v)); }
  CsvTable& add(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return add(std::string(buf));
  }
  CsvTable& add(std::size_t v) { return add(std::to_string(v)); }
  CsvTable& add(int v) { return add(std::to_string(v)); }

  std::size_t size() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  void write(const std::filesystem::path& path) const {
    ensure_parent(path);
    std::ofstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
    write_line(f, header_);
    for (const auto& r : rows_) {
      if (r.size() != header_.size()) fail(ErrorCode::InvalidArgument, "CSV row width differs from header");
      write_line(f, r);
    }
    if (!f) fail(ErrorCode::IoError, "short write to " + path.string());
  }

  static void ensure_parent(const std::filesystem::path& path) {
    if (!path.has_parent_path()) return;
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  CsvTable::ensure_parent(path);
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
  f << j.dump(2) << '\n';
  if (!f) fail(ErrorCode::IoError, "short write to " + path.string());
}

/// Writes stem.csv and stem.json.
inline void write_report(const std::filesystem::path& stem, const CsvTable& table, const nlohmann::json& meta) {
  std::filesystem::path csv = stem, json = stem;
  csv += ".csv";
  json += ".json";
  table.write(csv);
  nlohmann::json m = meta;
  m["csv"] = csv.filename().string();
  m["columns"] = table.header();
  m["rows"] = table.size();
  write_json(json, m);
}

}  // namespace meshfree
