#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abel/harness/config.hpp"
#include "abel/harness/run.hpp"

namespace abel::harness {

struct GridAxis {
  std::string key;
  std::vector<std::string> values;
};

// "key=v1,v2;key2=w1,w2". Keys are config keys or the aliases accepted by
// set_config_value. Throws ConfigError on malformed input.
std::vector<GridAxis> parse_grid(std::string_view spec);

// Cartesian product in row-major order (last axis fastest).
std::vector<std::vector<std::pair<std::string, std::string>>> grid_points(const std::vector<GridAxis>& axes);

struct SweepRow {
  std::size_t index = 0;
  std::vector<std::pair<std::string, std::string>> assignment;
  std::string status;  // a run status name, or "failed"
  std::string error;
  RunSummary summary;
  std::string trace_class;  // empty when the run produced no records
  std::string log_dir;
};

struct SweepOptions {
  int jobs = 1;
  bool write_logs = true;
};

// One run per grid point; point i logs to <template log_dir>/point_<i>.
// Individual failures are recorded and the sweep continues.
std::vector<SweepRow> run_sweep(const ExperimentConfig& tmpl, const std::vector<GridAxis>& axes,
                                const SweepOptions& options = {});

// Columns: index, one per axis, status, epochs_run, final_test_error,
// best_test_error, best_epoch, final_wsq, first_decay_epoch, decay_epochs,
// trace_class, error.
std::string sweep_summary_csv(const std::vector<GridAxis>& axes, const std::vector<SweepRow>& rows);

}  // namespace abel::harness
