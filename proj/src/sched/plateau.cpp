#include "abel/sched/plateau.hpp"

#include <cmath>
#include <limits>

#include "abel/util/error.hpp"

namespace abel::sched {

PlateauState make_plateau_state(double base_lr, const PlateauParams& params) {
  ScheduleSpec spec{.base_lr = base_lr, .params = params};
  spec.validate();
  PlateauState s;
  s.current_lr = base_lr;
  s.patience = params.patience;
  s.threshold = params.threshold;
  s.factor = params.factor;
  s.mode = params.mode;
  s.best_metric = params.mode == PlateauMode::kMin ? std::numeric_limits<double>::infinity()
                                                   : -std::numeric_limits<double>::infinity();
  return s;
}

PlateauStep plateau_observe_epoch(PlateauState& s, double metric) {
  if (!std::isfinite(metric)) {
    throw InputError("plateau metric must be finite, got " + std::to_string(metric));
  }
  s.epoch += 1;
  bool improved = !std::isfinite(s.best_metric);
  if (!improved) {
    improved = s.mode == PlateauMode::kMin ? metric < s.best_metric * (1.0 - s.threshold)
                                           : metric > s.best_metric * (1.0 + s.threshold);
  }
  if (improved) {
    s.best_metric = metric;
    s.epochs_since_improvement = 0;
  } else {
    s.epochs_since_improvement += 1;
  }

  PlateauStep out;
  if (s.epochs_since_improvement > s.patience) {
    const double old_lr = s.current_lr;
    s.current_lr *= s.factor;
    s.epochs_since_improvement = 0;
    out.event = LrEvent{s.epoch, old_lr, s.current_lr, Trigger::kPlateau};
  }
  out.lr = s.current_lr;
  return out;
}

}  // namespace abel::sched
