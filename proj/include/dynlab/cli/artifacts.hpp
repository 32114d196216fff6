#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dynlab/io/config.hpp"
#include "dynlab/io/csv.hpp"
#include "dynlab/io/svg.hpp"

namespace dynlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;

/// Output directory of one run. Tables are written atomically as they are
/// produced; plots only when enabled.
class Artifacts {
 public:
  Artifacts(std::filesystem::path dir, bool plot) : dir_(std::move(dir)), plot_(plot) {}

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

  void csv(const std::string& name, const io::CsvTable& table) {
    io::write_csv(dir_ / name, table);
    files_.push_back(name);
  }

  void plot(const std::string& name, const io::CsvTable& table, const std::string& x, const std::vector<std::string>& ys,
            const std::string& title) {
    if (!plot_) return;
    io::write_file_atomic(dir_ / name, io::svg_line_plot(table, x, ys, title));
    files_.push_back(name);
  }

  void text(const std::string& name, const std::string& contents) {
    io::write_file_atomic(dir_ / name, contents);
    files_.push_back(name);
  }

 private:
  std::filesystem::path dir_;
  bool plot_;
  std::vector<std::string> files_;
};

/// Two-column `quantity,value` table for scalar results.
class Summary {
 public:
  Summary() : table_({"quantity", "value"}) {}
  Summary& add(const std::string& name, io::CsvTable::Cell value) {
    table_.add({name, std::move(value)});
    return *this;
  }
  const io::CsvTable& table() const { return table_; }

 private:
  io::CsvTable table_;
};

/// The runnable part of an experiment, produced after every config key has
/// been read. Returns the exit status.
using Job = std::function<int(Artifacts&)>;

}  // namespace dynlab::cli
