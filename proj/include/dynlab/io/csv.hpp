#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "dynlab/errors.hpp"

namespace dynlab::io {

/// Shortest text that round-trips a double exactly (17 significant digits).
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t row_count() const { return rows_.size(); }

  /// One cell, converted to text on construction.
  struct Cell {
    std::string text;
    Cell(double v) : text(format_real(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(long v) : text(std::to_string(v)) {}
    Cell(long long v) : text(std::to_string(v)) {}
    Cell(unsigned v) : text(std::to_string(v)) {}
    Cell(unsigned long v) : text(std::to_string(v)) {}
    Cell(unsigned long long v) : text(std::to_string(v)) {}
    Cell(bool v) : text(v ? "true" : "false") {}
    Cell(std::string v) : text(std::move(v)) {}
    Cell(const char* v) : text(v) {}
  };

  void add(std::initializer_list<Cell> cells) {
    std::vector<std::string> out;
    out.reserve(cells.size());
    for (const auto& c : cells) out.push_back(c.text);
    add_row(std::move(out));
  }

  void add_row(std::vector<std::string> cells) {
    if (!header_.empty() && cells.size() != header_.size()) {
      throw InputError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header_.size()));
    }
    rows_.push_back(std::move(cells));
  }

  /// Numeric view of one column; non-numeric cells become NaN.
  std::vector<double> column(const std::string& name) const {
    std::size_t idx = header_.size();
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) idx = i;
    if (idx == header_.size()) throw InputError("no CSV column '" + name + "'");
    std::vector<double> out;
    for (const auto& r : rows_) {
      try {
        out.push_back(std::stod(r[idx]));
      } catch (const std::exception&) {
        out.push_back(std::nan(""));
      }
    }
    return out;
  }

  std::string str() const {
    std::ostringstream os;
    auto emit = [&os](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << csv_quote(cells[i]);
      }
      os << "\r\n";
    };
    if (!header_.empty()) emit(header_);
    for (const auto& r : rows_) emit(r);
    return os.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes via a sibling temporary file and rename, so readers never observe
/// a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_file_atomic(path, table.str());
}

}  // namespace dynlab::io
