#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abel/harness/dataset.hpp"
#include "abel/nn/model.hpp"
#include "abel/sched/schedule.hpp"

namespace abel::harness {

enum class OptimizerKind : std::uint8_t { kMomentum = 0, kAdam = 1 };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kMomentum;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const OptimizerConfig&) const = default;
};

struct AutoStop {
  double min_improvement = 0.0;  // absolute test-error improvement; <= 0 never stops
  bool operator==(const AutoStop&) const = default;
};

// Everything needed to reproduce one training run. The schedule's own
// total_epochs fields always equal `epochs`.
struct ExperimentConfig {
  DatasetSpec dataset = SyntheticBlobs{};
  nn::ModelArch arch;  // input_dim and classes follow the dataset
  OptimizerConfig optimizer;
  sched::ScheduleSpec schedule;
  int epochs = 100;
  int batch_size = 128;
  double l2 = 0.0;
  std::optional<double> clip_norm;
  double label_smoothing = 0.0;
  std::uint64_t seed = 0;
  std::string log_dir = "runs/default";
  int checkpoint_every = 0;  // 0 disables
  int full_eval_every = 0;   // full pass over the training set every k epochs; 0 disables
  std::optional<AutoStop> auto_stop;
  bool operator==(const ExperimentConfig&) const = default;
};

// Parse failure; `field()` names the offending key (empty for syntax errors
// that precede a key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Grammar (one entry per line):
//   line    := blank | '#' comment | key ws? '=' ws? value
//   key     := section '.' name
// Values are integers, reals, booleans (true/false), identifiers, or
// lists separated by commas or spaces. Keys and defaults are listed in docs/config.md.
// File paths are resolved relative to `base_dir` and must exist.
ExperimentConfig parse_config(std::string_view text, const std::string& base_dir = ".");

// Canonical text: every key, fixed order, shortest round-trip reals.
std::string print_config(const ExperimentConfig& config);

// Hash of the canonical text.
std::uint64_t config_hash(const ExperimentConfig& config);

// Sets one key on an existing config (used by sweeps and CLI overrides).
// Accepts the aliases base_lr, decay_factor, sigma_w, lambda.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);

// Validates cross-field invariants; throws ConfigError.
void validate_config(const ExperimentConfig& config);

ExperimentConfig load_config_file(const std::string& path);

}  // namespace abel::harness
