#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "abel/sched/abel.hpp"
#include "abel/sched/events.hpp"
#include "abel/sched/plateau.hpp"
#include "abel/sched/schedule.hpp"

namespace abel::sched {

// What the training loop reports at the end of an epoch.
struct EpochObservation {
  double weight_norm_sq = 0.0;  // consumed by ABEL
  double metric = 0.0;          // consumed by plateau
};

// A schedule plus whatever observer state it needs; the single object a
// training loop talks to.
class Scheduler {
 public:
  // total_epochs is the run budget; throws InputError on an invalid spec.
  Scheduler(ScheduleSpec spec, int total_epochs);

  const ScheduleSpec& spec() const { return spec_; }
  int total_epochs() const { return total_epochs_; }
  int epochs_observed() const { return epochs_observed_; }

  // Learning rate at fractional epoch t, without warmup.
  double base_rate(double t) const;

  // Learning rate for global optimizer step `step`, warmup included.
  double rate_at_step(std::int64_t step, std::int64_t steps_per_epoch) const;

  // Advances one epoch. Returns the discrete lr changes that take effect from
  // the next epoch on.
  std::vector<LrEvent> end_epoch(const EpochObservation& obs);

  // Changes the run budget. Budget-dependent kinds (cosine, linear,
  // simple_decay) refuse with InputError when the value differs.
  void set_total_epochs(int total_epochs);

  const AbelState* abel_state() const { return std::get_if<AbelState>(&state_); }
  const PlateauState* plateau_state() const { return std::get_if<PlateauState>(&state_); }

  bool operator==(const Scheduler&) const = default;

 private:
  friend std::vector<std::uint8_t> serialize_scheduler(const Scheduler&);
  friend Scheduler restore_scheduler(std::span<const std::uint8_t>);

  Scheduler() = default;

  ScheduleSpec spec_;
  int total_epochs_ = 0;
  int epochs_observed_ = 0;
  std::variant<std::monostate, AbelState, PlateauState> state_;
};

// Versioned little-endian encoding; layout documented in docs/formats.md.
std::vector<std::uint8_t> serialize_scheduler(const Scheduler& scheduler);

// Throws DecodeError on any malformed, truncated or corrupted payload.
Scheduler restore_scheduler(std::span<const std::uint8_t> bytes);

}  // namespace abel::sched
