#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mdmargin/cli.hpp"
#include "mdmargin/diagnostics.hpp"

using namespace mdmargin;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kRunConfig = R"(
# small smoke run
dataset.kind = planar2d
dataset.seed = 1
run.p = 1.5
run.loss = exponential
run.eta = 1e-3
run.steps = 500
run.seed = 4
run.w0_scale = 0.5
run.record_every = 50
out.dir = cli_test_out
)";

}  // namespace

TEST_CASE("config parsing happy path and defaults") {
  const ExperimentConfig config = parse_config_text(kRunConfig, "test");
  CHECK(config.dataset.kind == GeneratorSpec::Kind::planar2d);
  CHECK(config.dataset.seed == 1);
  CHECK(config.run.pot.p == 1.5);
  CHECK(config.run.pot.beta == 1.5);  // beta follows p unless given
  CHECK(config.run.steps == 500);
  CHECK(config.run.record_every == 50);
  CHECK(config.out_dir == "cli_test_out");
  CHECK(!config.beta_explicit);

  const ExperimentConfig with_beta =
      parse_config_text("run.p = 2\nrun.beta = 3\n", "test");
  CHECK(with_beta.run.pot.p == 2.0);
  CHECK(with_beta.run.pot.beta == 3.0);
  CHECK(with_beta.beta_explicit);
}

TEST_CASE("config parsing rejects bad input with line numbers") {
  CHECK_THROWS_WITH_AS(parse_config_text("unknown.key = 1\n", "test"),
                       doctest::Contains("unknown key"), config_error);
  CHECK_THROWS_WITH_AS(parse_config_text("\n\nrun.p = 1.0\n", "test"),
                       doctest::Contains("line 3"), config_error);
  CHECK_THROWS_AS(parse_config_text("run.p\n", "test"), config_error);
  CHECK_THROWS_AS(parse_config_text("run.eta =\n", "test"), config_error);
  CHECK_THROWS_AS(parse_config_text("dataset.kind = mnist\n", "test"), config_error);
  CHECK_THROWS_AS(parse_config_text("dataset.kind = file\n", "test"), config_error);
  CHECK_THROWS_AS(parse_config_text("run.steps = ten\n", "test"), config_error);
  CHECK_THROWS_AS(parse_config_text("report.norms = 0.5\n", "test"), config_error);
}

TEST_CASE("trace files round trip") {
  Trace trace;
  for (int i = 0; i < 5; ++i) {
    TraceRow row;
    row.t = i * 10;
    row.loss = 1.0 / (i + 1);
    row.psi_norm_w = 0.5 * i;
    row.margin_w = -1.0 + i;
    row.eta_effective = 1e-3;
    if (i % 2 == 0) row.bregman_gap = 0.25 / (i + 1);
    trace.push_back(row);
  }
  write_trace_csv(trace, "trace_roundtrip.csv");
  const Trace back = read_trace_csv("trace_roundtrip.csv");
  REQUIRE(back.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(back[i].t == trace[i].t);
    CHECK(back[i].loss == trace[i].loss);
    CHECK(back[i].psi_norm_w == trace[i].psi_norm_w);
    CHECK(back[i].margin_w == trace[i].margin_w);
    CHECK(back[i].eta_effective == trace[i].eta_effective);
    CHECK(back[i].bregman_gap.has_value() == trace[i].bregman_gap.has_value());
    if (back[i].bregman_gap) CHECK(*back[i].bregman_gap == *trace[i].bregman_gap);
  }
  std::remove("trace_roundtrip.csv");
}

TEST_CASE("cmd_run writes re-parseable, idempotent artifacts") {
  ExperimentConfig config = parse_config_text(kRunConfig, "test");
  REQUIRE(cmd_run(config) == 0);
  const Trace trace = read_trace_csv("cli_test_out/trace.csv");
  CHECK(trace.size() == 11);  // t = 0, 50, ..., 500
  CHECK(trace.back().t == 500);
  CHECK(trace.back().bregman_gap.has_value());
  const std::string first = read_file("cli_test_out/trace.csv");
  const std::string summary1 = read_file("cli_test_out/summary.json");
  const auto parsed = nlohmann::json::parse(summary1);
  CHECK(parsed.contains("final"));
  CHECK(parsed["final"]["t"] == 500);
  CHECK(parsed["final"].contains("bregman_gap"));

  REQUIRE(cmd_run(config) == 0);
  CHECK(read_file("cli_test_out/trace.csv") == first);
  CHECK(read_file("cli_test_out/summary.json") == summary1);
  fs::remove_all("cli_test_out");
}

TEST_CASE("cmd_run with steps = 1 records exactly two rows") {
  ExperimentConfig config = parse_config_text(kRunConfig, "test");
  config.run.steps = 1;
  config.out_dir = "cli_test_single";
  REQUIRE(cmd_run(config) == 0);
  const Trace trace = read_trace_csv("cli_test_single/trace.csv");
  CHECK(trace.size() == 2);
  fs::remove_all("cli_test_single");
}

TEST_CASE("cmd_maxmargin emits the oracle comparison in 2-D") {
  ExperimentConfig config = parse_config_text(kRunConfig, "test");
  config.out_dir = "cli_test_mm";
  REQUIRE(cmd_maxmargin(config) == 0);
  const std::string json = read_file("cli_test_mm/maxmargin.json");
  CHECK(json.find("margin_psi_units") != std::string::npos);
  CHECK(json.find("margin_lp_units") != std::string::npos);
  CHECK(json.find("solver_gap") != std::string::npos);
  CHECK(json.find("angle_difference_rad") != std::string::npos);
  fs::remove_all("cli_test_mm");
}

TEST_CASE("cmd_path writes the path table") {
  ExperimentConfig config = parse_config_text(kRunConfig, "test");
  config.out_dir = "cli_test_path";
  config.path_budgets = {1, 2, 4};
  REQUIRE(cmd_path(config) == 0);
  const std::string csv = read_file("cli_test_path/path.csv");
  CHECK(csv.rfind("budget,loss,psi_norm,fw_gap,iterations,bregman_gap\n", 0) == 0);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 4);
  fs::remove_all("cli_test_path");
}

TEST_CASE("cmd_sweep runs cells and writes ordered outputs") {
  ExperimentConfig config = parse_config_text(kRunConfig, "test");
  config.out_dir = "cli_test_sweep";
  config.sweep_axis = "p";
  config.sweep_values = {"1.5", "2"};
  config.run.steps = 2000;
  config.workers = 2;
  REQUIRE(cmd_sweep(config) == 0);
  CHECK(fs::exists("cli_test_sweep/cell_1.5/trace.csv"));
  CHECK(fs::exists("cli_test_sweep/cell_2/trace.csv"));
  CHECK(fs::exists("cli_test_sweep/norm_table.csv"));
  const std::string summary = read_file("cli_test_sweep/sweep_summary.json");
  CHECK(summary.find("\"axis\": \"p\"") != std::string::npos);
  fs::remove_all("cli_test_sweep");

  config.sweep_values = {};
  CHECK_THROWS_AS(cmd_sweep(config), config_error);
}

TEST_CASE("run_main exit codes") {
  const auto run_cli = [](std::vector<std::string> args) {
    std::vector<char*> argv;
    args.insert(args.begin(), "mdmargin");
    for (auto& a : args) argv.push_back(a.data());
    return run_main(static_cast<int>(argv.size()), argv.data());
  };

  // validation error: config file does not exist
  CHECK(run_cli({"run", "--config", "no_such_file.cfg"}) == 1);

  // infeasible data: two identical points with opposite labels
  {
    std::ofstream data("cli_infeasible.csv");
    data << "y,x1,x2\n1,1,0\n-1,1,0\n";
  }
  {
    std::ofstream cfg("cli_infeasible.cfg");
    cfg << "dataset.kind = file\ndataset.path = cli_infeasible.csv\nrun.p = 2\n";
  }
  CHECK(run_cli({"maxmargin", "--config", "cli_infeasible.cfg", "--out", "cli_inf_out"}) == 3);
  std::remove("cli_infeasible.csv");
  std::remove("cli_infeasible.cfg");
  fs::remove_all("cli_inf_out");

  // verify succeeds with the default seed
  CHECK(run_cli({"verify", "--seed", "7", "--out", "cli_verify_out"}) == 0);
  CHECK(fs::exists("cli_verify_out/verify.json"));
  fs::remove_all("cli_verify_out");
}
