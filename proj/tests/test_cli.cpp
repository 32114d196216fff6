#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynlab/cli/runner.hpp"

using namespace dynlab;
using namespace dynlab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "dynlab-test-cli" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunResult run_text(const std::string& text, const fs::path& dir) {
  return run_config(io::Config::parse(text), dir.string());
}

std::string summary_value(const fs::path& dir, const std::string& quantity) {
  std::istringstream in(slurp(dir / "summary.csv"));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto comma = line.find(',');
    if (line.substr(0, comma) == quantity) return line.substr(comma + 1);
  }
  return "";
}

const std::string kEos = "experiment = edge-of-stability\nmodel.id = prod2\ntheta0 = 2.5, 0.41\ngd.eta = 0.2\n";

}  // namespace

TEST_CASE("config parsing", "[config]") {
  auto cfg = io::Config::parse("# comment\na = 1  # trailing\n[gd]\neta = 0.5\nsteps = 1e3\n");
  CHECK(cfg.get_int("a", 0) == 1);
  CHECK(cfg.get_double("gd.eta", 0.0) == 0.5);
  CHECK(cfg.get_size("gd.steps", 0) == 1000);
  CHECK(cfg.get_reals("missing", {1.0, 2.0}) == Vector{1.0, 2.0});
  CHECK_NOTHROW(cfg.reject_unused());
  CHECK(cfg.resolved_text().find("missing = 1, 2\n") != std::string::npos);

  auto m = io::Config::parse("A = 1, 2; 3, 4\nv = [0.5, 1.5]\n");
  const Matrix A = m.get_matrix("A", Matrix());
  CHECK(A.rows() == 2);
  CHECK(A(1, 0) == 3.0);
  CHECK(m.get_reals("v", {}) == Vector{0.5, 1.5});

  CHECK_THROWS_AS(io::Config::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(io::Config::parse("no equals sign\n"), ConfigError);
  auto bad = io::Config::parse("x = abc\nn = -1\nflag = maybe\nc = z\n");
  CHECK_THROWS_AS(bad.get_double("x", 0.0), ConfigError);
  CHECK_THROWS_AS(bad.get_size("n", 0), ConfigError);
  CHECK_THROWS_AS(bad.get_bool("flag", false), ConfigError);
  CHECK_THROWS_AS(bad.get_choice("c", "a", {"a", "b"}), ConfigError);
}

TEST_CASE("unknown keys are rejected by name", "[cli]") {
  const auto dir = scratch("typo");
  const auto res = run_text("experiment = edge-of-stability\ngd.etta = 0.1\n", dir);
  CHECK(res.exit_code == kExitConfig);
  CHECK(res.message.find("gd.etta") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "manifest.txt"));

  CHECK(run_text("seed = 1\n", dir).exit_code == kExitConfig);
  const auto unknown = run_text("experiment = nope\n", dir);
  CHECK(unknown.exit_code == kExitConfig);
  CHECK(unknown.message.find("experiment") != std::string::npos);
  CHECK(run_text("experiment = edge-of-stability\ntheta0 = 1, 2, 3\n", dir).exit_code == kExitConfig);
  CHECK(run_text("experiment = ips-simulate\nmodel.id = kuramoto\nips.dt = -1\n", dir).exit_code == kExitConfig);
  CHECK(run_file((dir / "does-not-exist.ini").string()).exit_code == kExitConfig);
}

TEST_CASE("edge-of-stability through the runner", "[cli]") {
  const auto dir = scratch("eos");
  const auto res = run_text(kEos, dir);
  REQUIRE(res.exit_code == kExitOk);
  CHECK(fs::exists(dir / "eos.csv"));
  CHECK(std::stod(summary_value(dir, "terminal_sharpness")) <= 10.0 + 1e-6);
  CHECK(summary_value(dir, "diverged") == "false");
  CHECK(slurp(dir / "eos.csv").rfind("step,loss,grad_norm,sharpness,threshold\r\n", 0) == 0);
}

TEST_CASE("divergence maps to its own exit status", "[cli]") {
  const auto dir = scratch("diverge");
  const auto res = run_text("experiment = edge-of-stability\nmodel.id = quadratic\nmodel.Q = 4\ngd.eta = 0.55\n", dir);
  CHECK(res.exit_code == kExitDivergence);
  CHECK(summary_value(dir, "diverged") == "true");
}

TEST_CASE("runs are byte-identical and manifests replay them", "[cli]") {
  const auto a = scratch("det-a"), b = scratch("det-b"), c = scratch("det-c");
  const std::string text = "experiment = ips-simulate\nmodel.id = kuramoto\nips.M = 20\nips.T = 1\nips.noise = 0.3\nseed = 9\n";
  const auto first = run_text(text, a);
  const auto second = run_text(text, b);
  REQUIRE(first.exit_code == kExitOk);
  REQUIRE(second.exit_code == kExitOk);
  REQUIRE(first.files == second.files);
  for (const auto& f : first.files) CHECK(slurp(a / f) == slurp(b / f));

  const std::string manifest = slurp(a / "manifest.txt");
  CHECK(manifest.rfind("# dyn-nn-lab ", 0) == 0);
  CHECK(manifest.find("output_dir") == std::string::npos);
  CHECK(manifest.find("ips.dt = 0.01") != std::string::npos);
  const auto replay = run_file((a / "manifest.txt").string(), c.string());
  REQUIRE(replay.exit_code == kExitOk);
  for (const auto& f : first.files) CHECK(slurp(a / f) == slurp(c / f));

  const auto other = scratch("det-d");
  REQUIRE(run_text("experiment = ips-simulate\nmodel.id = kuramoto\nips.M = 20\nips.T = 1\nips.noise = 0.3\nseed = 10\n", other).exit_code == 0);
  CHECK(slurp(a / "states.csv") != slurp(other / "states.csv"));
}

TEST_CASE("output directory resolution", "[cli]") {
  auto cfg = io::Config::parse("output_dir = from-config\n");
  CHECK(resolve_output_dir(cfg, std::string("override")) == fs::path("override"));
  CHECK(resolve_output_dir(cfg, std::nullopt) == fs::path("from-config"));
  auto empty = io::Config::parse("");
  ::setenv(kOutputEnv, "from-env", 1);
  CHECK(resolve_output_dir(empty, std::nullopt) == fs::path("from-env"));
  ::unsetenv(kOutputEnv);
  CHECK(resolve_output_dir(empty, std::nullopt) == fs::path("dyn-nn-lab-out"));
}

TEST_CASE("registry listing is sorted and every id loads", "[cli]") {
  const auto reg = registry();
  for (const auto& [section, ids] : reg) {
    INFO(section);
    CHECK(std::is_sorted(ids.begin(), ids.end()));
    CHECK_FALSE(ids.empty());
  }
  const std::string text = list_registry();
  CHECK(text.find("  prod2\n") != std::string::npos);

  for (const auto& id : networks::vector_field_ids()) CHECK_NOTHROW(networks::make_vector_field(id, 3));
  for (const auto& id : loss_ids()) {
    auto cfg = io::Config::parse("model.id = " + id + "\n");
    CHECK_NOTHROW(make_loss(cfg, "prod2"));
  }
  for (const auto& id : graphon_ids()) {
    auto cfg = io::Config::parse("graphon.id = " + id + "\n");
    const auto g = make_graphon(cfg);
    CHECK(g.kernel(0.25, 0.75) >= 0.0);
  }
  for (const auto& id : ips_model_ids()) {
    INFO(id);
    const auto dir = scratch("model-" + id);
    const auto res = run_text("experiment = ips-simulate\nmodel.id = " + id + "\nips.M = 6\nips.T = 0.2\nips.record_stride = 5\n", dir);
    CHECK(res.exit_code == kExitOk);
    CHECK(fs::exists(dir / "states.csv"));
  }
  for (const auto& id : probe_ids()) {
    const auto dir = scratch("probe-" + id);
    CHECK(run_text("experiment = morse-classify\nfield.kind = probe\nprobe.id = " + id + "\n", dir).exit_code == kExitOk);
  }
}

TEST_CASE("graph and noise options of ips-simulate", "[cli]") {
  const auto dir = scratch("graphs");
  CHECK(run_text("experiment = ips-simulate\nips.M = 8\nips.T = 0.2\ngraph.kind = graphon\ngraphon.id = block\n", dir).exit_code == 0);
  CHECK(run_text("experiment = ips-simulate\nips.M = 2\nips.T = 0.2\ngraph.kind = explicit\ngraph.matrix = 0, 1; 1, 0\n", dir).exit_code == 0);
  CHECK(run_text("experiment = ips-simulate\nips.M = 3\ngraph.kind = explicit\ngraph.matrix = 0, 1; 1, 0\n", dir).exit_code == kExitConfig);
  CHECK(run_text("experiment = ips-simulate\nmodel.id = desai_zwanzig\nips.M = 8\nips.T = 0.2\nips.noise = 0.5\n", dir).exit_code == 0);
}

TEST_CASE("every sample config runs", "[cli]") {
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(DYNLAB_CONFIG_DIR)) {
    if (e.path().extension() != ".ini") continue;
    INFO(e.path().string());
    const auto dir = scratch("sample-" + e.path().stem().string());
    const auto res = run_file(e.path().string(), dir.string());
    CHECK(res.exit_code == kExitOk);
    CHECK(fs::exists(dir / "manifest.txt"));
    ++count;
  }
  CHECK(count >= experiments().size());
}

TEST_CASE("plots are written only when enabled", "[cli]") {
  const auto on = scratch("plot-on"), off = scratch("plot-off");
  REQUIRE(run_text(kEos + "plot = true\n", on).exit_code == 0);
  REQUIRE(run_text(kEos, off).exit_code == 0);
  const std::string svg = slurp(on / "plot_sharpness.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK_FALSE(fs::exists(off / "plot_sharpness.svg"));
}

TEST_CASE("command-line binary", "[cli]") {
  const std::string exe = DYNLAB_CLI_PATH;
  const auto dir = scratch("binary");
  fs::create_directories(dir);
  auto status = [](const std::string& cmd) {
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(exe + " --version > " + (dir / "version.txt").string()) == 0);
  CHECK(slurp(dir / "version.txt").rfind("dyn-nn-lab ", 0) == 0);
  CHECK(status(exe + " list > " + (dir / "list.txt").string()) == 0);
  CHECK(slurp(dir / "list.txt") == list_registry());

  std::ofstream(dir / "typo.ini") << "experiment = edge-of-stability\ngd.etta = 0.1\n";
  CHECK(status(exe + " run " + (dir / "typo.ini").string() + " -o " + (dir / "out").string() + " 2> " +
               (dir / "err.txt").string()) == kExitConfig);
  CHECK(slurp(dir / "err.txt").find("gd.etta") != std::string::npos);

  std::ofstream(dir / "ok.ini") << kEos;
  CHECK(status(exe + " run " + (dir / "ok.ini").string() + " --output-dir " + (dir / "out").string() + " > /dev/null") == 0);
  CHECK(fs::exists(dir / "out" / "eos.csv"));
  CHECK(status(exe + " > /dev/null 2>&1") == kExitConfig);
}
