#pragma once

#include <vector>

#include "abel/sched/events.hpp"
#include "abel/sched/schedule.hpp"

namespace abel::sched {

enum class DecayReason : std::uint8_t { kBounce = 0, kFinal = 1 };

struct DecayEntry {
  int epoch = 0;
  DecayReason reason = DecayReason::kBounce;
  bool operator==(const DecayEntry&) const = default;
};

// State of the weight-norm-bounce scheduler.
//
// One squared weight norm |w|^2 is observed per epoch. Consecutive differences
// of the (optionally block-averaged) samples are watched for sign flips: the
// first flip marks the minimum of the norm, the next one (growth turning
// noise-dominated) decays the learning rate and disarms. Independently the rate
// is decayed once at last_decay_epoch.
//
// Invariant: current_lr == base_lr * decay_factor^decay_log.size(), evaluated by
// repeated multiplication starting from base_lr.
struct AbelState {
  double base_lr = 0.1;
  double current_lr = 0.1;
  double decay_factor = 0.1;
  double last_decay_fraction = 0.85;
  int total_epochs = 0;
  int last_decay_epoch = 0;
  int smoothing_window = 1;
  int min_history = 3;
  std::vector<double> norm_history;
  std::vector<double> smoothed_history;
  bool reached_minimum = false;
  int epoch = 0;
  std::vector<DecayEntry> decay_log;

  bool operator==(const AbelState&) const = default;
};

// round(last_decay_fraction * total_epochs).
int last_decay_epoch_for(double last_decay_fraction, int total_epochs);

// Fresh state; throws InputError if `params` are invalid or base_lr <= 0.
AbelState make_abel_state(double base_lr, const AbelParams& params);

struct AbelStep {
  double lr = 0.0;
  // Bounce and final decays may fire in the same epoch; at most one of each.
  std::vector<LrEvent> events;
};

// Feeds the end-of-epoch squared weight norm. Must be called exactly once per
// epoch, in order; a second call in the same epoch is counted as a new epoch.
// Throws InputError if weight_norm_sq is not finite and positive (state untouched).
AbelStep abel_observe_epoch(AbelState& state, double weight_norm_sq);

// Moves the final decay to round(last_decay_fraction * new_total). Bounce-driven
// behaviour is unaffected.
void abel_set_total_epochs(AbelState& state, int new_total_epochs);

}  // namespace abel::sched
