#pragma once

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dynlab/cli/experiments.hpp"

namespace dynlab::cli {

#ifdef DYNLAB_VERSION
inline constexpr const char* kVersion = DYNLAB_VERSION;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif
inline constexpr const char* kOutputEnv = "DYN_NN_LAB_OUTPUT";

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::filesystem::path output_dir;
  std::vector<std::string> files;
};

/// Output directory: the override, then the `output_dir` key, then the
/// environment variable, then ./dyn-nn-lab-out.
inline std::filesystem::path resolve_output_dir(Config& cfg, const std::optional<std::string>& override_dir) {
  std::string from_cfg;
  if (cfg.has("output_dir")) from_cfg = cfg.require_string("output_dir");
  if (override_dir && !override_dir->empty()) return *override_dir;
  if (!from_cfg.empty()) return from_cfg;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "dyn-nn-lab-out";
}

/// Re-loadable record of the run: every key read, with defaults filled in.
/// The output directory is left out so a manifest can be replayed elsewhere.
inline std::string manifest_text(const Config& cfg) {
  std::string out = std::string("# dyn-nn-lab ") + kVersion + "\n";
  for (const auto& [key, value] : cfg.resolved())
    if (key != "output_dir") out += key + " = " + value + "\n";
  return out;
}

inline RunResult run_config(Config cfg, const std::optional<std::string>& override_dir = std::nullopt) {
  RunResult res;
  try {
    const std::string name = cfg.require_string("experiment");
    const auto& table = experiments();
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("experiment", "unknown experiment '" + name + "'");
    const std::uint64_t seed = cfg.get_seed("seed", 0);
    const bool plot = cfg.get_bool("plot", false);
    res.output_dir = resolve_output_dir(cfg, override_dir);
    Job job = it->second.plan(cfg, seed);
    cfg.reject_unused();

    std::filesystem::create_directories(res.output_dir);
    Artifacts out(res.output_dir, plot);
    out.text("manifest.txt", manifest_text(cfg));
    res.exit_code = job(out);
    res.files = out.files();
    if (res.exit_code == kExitDivergence) res.message = name + ": iteration diverged";
  } catch (const ConfigError& e) {
    res.exit_code = kExitConfig;
    res.message = e.key().empty() ? std::string("config: ") + e.what()
                                  : "config key '" + e.key() + "': " + e.what();
  } catch (const DivergenceError& e) {
    res.exit_code = kExitDivergence;
    res.message = e.what();
  } catch (const InputError& e) {
    res.exit_code = kExitConfig;
    res.message = e.what();
  } catch (const DimensionError& e) {
    res.exit_code = kExitConfig;
    res.message = e.what();
  } catch (const StructuralError& e) {
    res.exit_code = kExitConfig;
    res.message = e.what();
  } catch (const CapacityError& e) {
    res.exit_code = kExitConfig;
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = kExitFailure;
    res.message = e.what();
  }
  return res;
}

inline RunResult run_file(const std::string& path, const std::optional<std::string>& override_dir = std::nullopt) {
  try {
    return run_config(Config::load(path), override_dir);
  } catch (const ConfigError& e) {
    RunResult res;
    res.exit_code = kExitConfig;
    res.message = e.key().empty() ? std::string("config: ") + e.what() : "config key '" + e.key() + "': " + e.what();
    return res;
  }
}

/// Every registered identifier, grouped by kind and sorted.
inline std::vector<std::pair<std::string, std::vector<std::string>>> registry() {
  std::vector<std::string> names;
  for (const auto& [name, info] : experiments()) names.push_back(name);
  return {
      {"experiments", names},
      {"graphons", graphon_ids()},
      {"losses", loss_ids()},
      {"models", ips_model_ids()},
      {"probes", probe_ids()},
      {"vector-fields", networks::vector_field_ids()},
  };
}

inline std::string list_registry() {
  std::string out;
  for (const auto& [section, ids] : registry()) {
    out += section + ":\n";
    for (const auto& id : ids) {
      out += "  " + id;
      if (section == "experiments") out += "  " + experiments().at(id).description;
      out += "\n";
    }
  }
  return out;
}

}  // namespace dynlab::cli
