#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dynlab/errors.hpp"
#include "dynlab/io/csv.hpp"
#include "dynlab/numerics/matrix.hpp"

namespace dynlab::io {

/// Flat `key = value` configuration with dotted keys, `#` comments and
/// optional `[section]` headers that prefix the keys below them.
///
/// Every typed read records the value actually used (including defaults), so
/// `resolved_text()` reproduces the run. `reject_unused()` turns any key that
/// was never read into a ConfigError naming it.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>") {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("", source + ":" + std::to_string(lineno) + ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(trim(line), source + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError("", source + ":" + std::to_string(lineno) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      if (cfg.values_.count(key)) throw ConfigError(key, "duplicate key");
      cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("", "cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    return record(key, raw_or(key, fallback));
  }

  std::string require_string(const std::string& key) {
    if (!has(key)) throw ConfigError(key, "required key is missing");
    return record(key, values_.at(key));
  }

  /// Value restricted to a fixed set of choices.
  std::string get_choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& choices) {
    const std::string v = get_string(key, fallback);
    for (const auto& c : choices)
      if (c == v) return v;
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    throw ConfigError(key, "'" + v + "' is not one of {" + list + "}");
  }

  double get_double(const std::string& key, double fallback) {
    if (!has(key)) return record_real(key, fallback);
    return record_real(key, parse_real(key, values_.at(key)));
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return record_int(key, fallback);
    return record_int(key, parse_int(key, values_.at(key)));
  }

  std::size_t get_size(const std::string& key, std::size_t fallback) {
    if (!has(key)) return static_cast<std::size_t>(record_int(key, static_cast<std::int64_t>(fallback)));
    const auto v = parse_int(key, values_.at(key));
    if (v < 0) throw ConfigError(key, "must be a nonnegative integer");
    return static_cast<std::size_t>(record_int(key, v));
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) {
    std::uint64_t v = fallback;
    if (has(key)) {
      const std::string& s = values_.at(key);
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ConfigError(key, "expected an unsigned integer, got '" + s + "'");
    }
    return static_cast<std::uint64_t>(std::stoull(record(key, std::to_string(v))));
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return record(key, fallback ? "true" : "false") == "true";
    const std::string v = values_.at(key);
    if (v == "true" || v == "1" || v == "yes") return record(key, "true") == "true";
    if (v == "false" || v == "0" || v == "no") return record(key, "false") == "true";
    throw ConfigError(key, "expected true or false, got '" + v + "'");
  }

  /// Comma-separated reals, optionally wrapped in brackets or parentheses.
  Vector get_reals(const std::string& key, const Vector& fallback) {
    Vector v = fallback;
    if (has(key)) v = parse_reals(key, values_.at(key));
    record(key, format_reals(v));
    return v;
  }

  std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) {
    std::vector<std::size_t> out = fallback;
    if (has(key)) {
      out.clear();
      for (double x : parse_reals(key, values_.at(key))) {
        if (!(x >= 0.0) || x != std::floor(x)) throw ConfigError(key, "expected nonnegative integers");
        out.push_back(static_cast<std::size_t>(x));
      }
    }
    std::string text;
    for (std::size_t k = 0; k < out.size(); ++k) text += (k ? ", " : "") + std::to_string(out[k]);
    record(key, text);
    return out;
  }

  /// Rows separated by ';', entries by ','.
  Matrix get_matrix(const std::string& key, const Matrix& fallback) {
    Matrix m = fallback;
    if (has(key)) {
      std::vector<Vector> rows;
      std::string text = values_.at(key);
      std::size_t start = 0;
      while (start <= text.size()) {
        const auto semi = text.find(';', start);
        const std::string row = text.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
        rows.push_back(parse_reals(key, row));
        if (semi == std::string::npos) break;
        start = semi + 1;
      }
      const std::size_t cols = rows.front().size();
      for (const auto& r : rows)
        if (r.size() != cols) throw ConfigError(key, "matrix rows have different lengths");
      m = Matrix(rows.size(), cols);
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    }
    std::string text;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i) text += "; ";
      for (std::size_t j = 0; j < m.cols(); ++j) text += (j ? ", " : "") + format_real(m(i, j));
    }
    record(key, text);
    return m;
  }

  void reject_unused() const {
    for (const auto& [key, value] : values_)
      if (!resolved_.count(key)) throw ConfigError(key, "unknown key");
  }

  /// Every value read, in key order, as re-loadable `key = value` lines.
  std::string resolved_text() const {
    std::string out;
    for (const auto& [key, value] : resolved_) out += key + " = " + value + "\n";
    return out;
  }

  const std::map<std::string, std::string>& resolved() const { return resolved_; }

  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

 private:
  std::string raw_or(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string record(const std::string& key, const std::string& value) {
    resolved_[key] = value;
    return value;
  }
  double record_real(const std::string& key, double v) {
    record(key, format_real(v));
    return v;
  }
  std::int64_t record_int(const std::string& key, std::int64_t v) {
    record(key, std::to_string(v));
    return v;
  }

  static double parse_real(const std::string& key, const std::string& s) {
    const std::string t = trim(s);
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a number, got '" + t + "'");
    }
  }

  static std::int64_t parse_int(const std::string& key, const std::string& s) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      // Accept integral reals such as 1e5.
      const double d = parse_real(key, s);
      if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError(key, "expected an integer, got '" + s + "'");
      return static_cast<std::int64_t>(d);
    }
    return v;
  }

  static Vector parse_reals(const std::string& key, std::string s) {
    s = trim(s);
    if (!s.empty() && (s.front() == '[' || s.front() == '(')) s = s.substr(1);
    if (!s.empty() && (s.back() == ']' || s.back() == ')')) s.pop_back();
    Vector out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
      const auto comma = s.find(',', start);
      out.push_back(parse_real(key, s.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  static std::string format_reals(const Vector& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + format_real(v[k]);
    return out;
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace dynlab::io
