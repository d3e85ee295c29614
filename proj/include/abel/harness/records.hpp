#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "abel/analysis/bounce.hpp"
#include "abel/sched/events.hpp"

namespace abel::harness {

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;  // base rate in effect at the start of the epoch (warmup excluded)
  double train_loss = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  double wsq_total = 0.0;
  double wsq_l2_only = 0.0;
  std::vector<double> per_layer;  // wsq per parameter tensor, in layer order
  std::optional<double> gw_total;
  double wall_ms = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

// Log directory layout:
//   metrics.csv  epoch,lr,train_loss,train_error,test_error,wsq_total,wsq_l2_only,gw_total
//   layers.csv   epoch,layer,wsq
//   events.csv   epoch,old_lr,new_lr,trigger
//   timing.csv   epoch,wall_ms
//   meta.json    config, config hash, code version, status, summary
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kLayersFile = "layers.csv";
inline constexpr const char* kEventsFile = "events.csv";
inline constexpr const char* kTimingFile = "timing.csv";
inline constexpr const char* kMetaFile = "meta.json";

std::string metrics_header();
std::string metrics_row(const EpochRecord& r);
std::string layers_rows(const EpochRecord& r, const std::vector<std::string>& layer_names);
std::string event_row(const sched::LrEvent& e);

// A log directory read back from disk. wall_ms comes from timing.csv when present.
struct RunLog {
  std::vector<std::string> layer_names;
  std::vector<EpochRecord> records;
  std::vector<sched::LrEvent> events;
};

// Throws LoadError on missing or malformed files. layers.csv and events.csv are optional.
RunLog read_run_log(const std::filesystem::path& dir);

// Norm trace for the bounce analysis; every lr event counts as a decay epoch.
analysis::NormTrace norm_trace(const std::vector<std::string>& layer_names,
                               const std::vector<EpochRecord>& records,
                               const std::vector<sched::LrEvent>& events);

}  // namespace abel::harness
