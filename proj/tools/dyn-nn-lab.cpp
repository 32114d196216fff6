#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dynlab/cli/runner.hpp"

int main(int argc, char** argv) {
  using namespace dynlab::cli;
  CLI::App app{"Dynamical-systems experiments on neural networks and particle systems"};
  app.set_version_flag("--version", std::string("dyn-nn-lab ") + kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "config file (key = value lines)")->required();
  run->add_option("--output-dir,-o", output_dir, "directory for the artifacts");

  auto* list = app.add_subcommand("list", "print the registered experiments, models, losses and fields");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (list->parsed()) {
    std::cout << list_registry();
    return kExitOk;
  }

  const auto res = run_file(config_path, output_dir.empty() ? std::nullopt : std::optional<std::string>(output_dir));
  if (res.exit_code == kExitOk) {
    for (const auto& f : res.files) std::cout << (res.output_dir / f).string() << "\n";
  } else {
    std::cerr << "dyn-nn-lab: " << res.message << "\n";
  }
  return res.exit_code;
}
