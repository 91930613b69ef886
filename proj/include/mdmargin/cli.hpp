#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdmargin/data.hpp"
#include "mdmargin/optimize.hpp"

namespace mdmargin {

/// Configuration validation failure; reported with exit code 1.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TargetKind { max_margin, none, file };

struct ExperimentConfig {
  GeneratorSpec dataset;
  RunConfig run;
  bool beta_explicit = false;  // run.beta was given (sweeps over p keep it fixed)
  TargetKind target = TargetKind::max_margin;
  std::string target_path;
  std::string out_dir = "out";
  std::vector<double> report_norms = {1.0, 1.1, 2.0, 3.0, 10.0,
                                      std::numeric_limits<double>::infinity()};
  std::string sweep_axis;                 // p | beta | step_kind
  std::vector<std::string> sweep_values;  // parsed per axis
  std::vector<double> path_budgets = {1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
  int workers = 0;  // 0 = hardware concurrency
};

/// Parse the flat `section.key = value` config format. Unknown keys and
/// malformed lines raise config_error with the line number.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

int cmd_run(const ExperimentConfig& config);
int cmd_sweep(const ExperimentConfig& config);
int cmd_maxmargin(const ExperimentConfig& config);
int cmd_path(const ExperimentConfig& config);
int cmd_verify(std::uint64_t seed, const std::string& out_dir);

/// Full CLI entry point. Exit codes: 0 success, 1 validation error,
/// 2 invariant/acceptance failure, 3 infeasible data.
int run_main(int argc, char** argv);

// File helpers shared with the test suites.
void write_trace_csv(const Trace& trace, const std::string& path);
Trace read_trace_csv(const std::string& path);

}  // namespace mdmargin
