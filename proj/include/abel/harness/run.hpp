#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "abel/harness/config.hpp"
#include "abel/harness/dataset.hpp"
#include "abel/harness/records.hpp"
#include "abel/nn/model.hpp"
#include "abel/nn/optim.hpp"
#include "abel/nn/params.hpp"
#include "abel/sched/scheduler.hpp"

namespace abel::harness {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr int kSettleEpochs = 3;

enum class RunStatus : std::uint8_t { kRunning = 0, kCompleted = 1, kStoppedEarly = 2, kDiverged = 3 };
std::string_view run_status_name(RunStatus s);

// Everything that evolves during a run; a checkpoint is exactly this.
struct RunState {
  ExperimentConfig config;
  int epoch = 0;  // completed epochs
  std::int64_t step = 0;
  nn::ParamSet params;
  nn::OptState opt;
  sched::Scheduler scheduler;
  std::mt19937_64 rng;
  std::vector<EpochRecord> records;
  std::vector<sched::LrEvent> events;
  RunStatus status = RunStatus::kRunning;
  std::string diagnostic;
};

// Fills arch.input_dim / classes / image shape from the dataset.
nn::ModelArch resolve_arch(const ExperimentConfig& config, const Dataset& data);

// Fresh state at epoch 0.
RunState initial_state(const ExperimentConfig& config, const Dataset& data);

struct RunSummary {
  RunStatus status = RunStatus::kRunning;
  int epochs_run = 0;
  double final_test_error = 0.0;
  double best_test_error = 0.0;
  int best_epoch = 0;
  double final_wsq = 0.0;
  std::vector<int> decay_epochs;
  std::string diagnostic;
};

RunSummary summarize(const RunState& state);

// Auto-stop rule, evaluated kSettleEpochs after a bounce decay at `decay_epoch`:
// stop when (min test error over epochs <= decay_epoch) - (min over the settle
// window) < min_improvement. Never stops for min_improvement <= 0 or while the
// window is incomplete.
bool auto_stop_decision(const std::vector<EpochRecord>& records, int decay_epoch,
                        double min_improvement);

struct RunOptions {
  bool write_logs = true;
  bool quiet = true;
  // Stop after this epoch even if the budget is larger (used to produce
  // mid-run checkpoints in tests); 0 means the full budget.
  int stop_after = 0;
  std::function<void(const RunState&, const EpochRecord&)> on_epoch;
};

// Trains until the budget, auto-stop or divergence. Appends to the log
// directory when write_logs (a fresh run first truncates it; a resumed run
// first rewrites the logs from the state's history).
void continue_run(RunState& state, const Dataset& data, const RunOptions& options = {});

// initial_state + continue_run.
RunState run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Checkpoint binary layout is documented in docs/formats.md.
std::vector<std::uint8_t> serialize_checkpoint(const RunState& state);
// Throws DecodeError on malformed input.
RunState restore_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const RunState& state, const std::filesystem::path& path);
RunState load_checkpoint(const std::filesystem::path& path);
std::filesystem::path checkpoint_path(const std::filesystem::path& log_dir, int epoch);

class ResumeRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ResumeOptions {
  std::optional<int> total_epochs;
  std::optional<std::string> log_dir;
};

// Applies resume overrides to a restored state. Throws ResumeRefused when the
// budget changes for a budget-dependent schedule (cosine, linear, simple_decay)
// or when the checkpoint's embedded config hash does not match its text.
void prepare_resume(RunState& state, const ResumeOptions& options);

}  // namespace abel::harness
