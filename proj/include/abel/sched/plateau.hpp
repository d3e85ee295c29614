#pragma once

#include <optional>

#include "abel/sched/events.hpp"
#include "abel/sched/schedule.hpp"

namespace abel::sched {

// Reduce-on-plateau with a relative improvement threshold, no cooldown and no
// learning-rate floor.
struct PlateauState {
  double current_lr = 0.1;
  double best_metric = 0.0;  // +inf (min mode) or -inf (max mode) before the first sample
  int epochs_since_improvement = 0;
  int patience = 10;
  double threshold = 1e-4;
  double factor = 0.1;
  PlateauMode mode = PlateauMode::kMin;
  int epoch = 0;

  bool operator==(const PlateauState&) const = default;
};

PlateauState make_plateau_state(double base_lr, const PlateauParams& params);

struct PlateauStep {
  double lr = 0.0;
  std::optional<LrEvent> event;
};

// Throws InputError for a non-finite metric (state untouched).
PlateauStep plateau_observe_epoch(PlateauState& state, double metric);

}  // namespace abel::sched
