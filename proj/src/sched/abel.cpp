#include "abel/sched/abel.hpp"

#include <cmath>
#include <numeric>

#include "abel/util/error.hpp"

namespace abel::sched {

int last_decay_epoch_for(double last_decay_fraction, int total_epochs) {
  return static_cast<int>(std::lround(last_decay_fraction * total_epochs));
}

AbelState make_abel_state(double base_lr, const AbelParams& params) {
  ScheduleSpec spec{.base_lr = base_lr, .params = params};
  spec.validate();
  AbelState s;
  s.base_lr = base_lr;
  s.current_lr = base_lr;
  s.decay_factor = params.decay_factor;
  s.last_decay_fraction = params.last_decay_fraction;
  s.total_epochs = params.total_epochs;
  s.last_decay_epoch = last_decay_epoch_for(params.last_decay_fraction, params.total_epochs);
  s.smoothing_window = params.smoothing_window;
  s.min_history = params.min_history;
  return s;
}

namespace {

// Strict sign flip of two consecutive differences; a zero difference never flips.
bool sign_flip(double prev_delta, double delta) {
  return (prev_delta < 0.0 && delta > 0.0) || (prev_delta > 0.0 && delta < 0.0);
}

LrEvent decay(AbelState& s, Trigger trigger) {
  const double old_lr = s.current_lr;
  s.current_lr *= s.decay_factor;
  s.decay_log.push_back(
      {s.epoch, trigger == Trigger::kBounce ? DecayReason::kBounce : DecayReason::kFinal});
  return {s.epoch, old_lr, s.current_lr, trigger};
}

}  // namespace

AbelStep abel_observe_epoch(AbelState& s, double weight_norm_sq) {
  if (!std::isfinite(weight_norm_sq) || weight_norm_sq <= 0.0) {
    throw InputError("weight norm sample must be finite and > 0, got " +
                     std::to_string(weight_norm_sq));
  }
  AbelStep out;
  s.epoch += 1;
  s.norm_history.push_back(weight_norm_sq);

  const auto window = static_cast<std::size_t>(s.smoothing_window);
  if (s.norm_history.size() % window == 0) {
    const auto first = s.norm_history.end() - static_cast<std::ptrdiff_t>(window);
    const double mean =
        std::accumulate(first, s.norm_history.end(), 0.0) / static_cast<double>(window);
    s.smoothed_history.push_back(mean);

    const auto& h = s.smoothed_history;
    if (h.size() >= static_cast<std::size_t>(s.min_history)) {
      const std::size_t n = h.size();
      const double delta = h[n - 1] - h[n - 2];
      const double prev_delta = h[n - 2] - h[n - 3];
      if (sign_flip(prev_delta, delta)) {
        if (s.reached_minimum) {
          s.reached_minimum = false;
          out.events.push_back(decay(s, Trigger::kBounce));
        } else {
          s.reached_minimum = true;
        }
      }
    }
  }

  if (s.epoch == s.last_decay_epoch) out.events.push_back(decay(s, Trigger::kFinalDecay));

  out.lr = s.current_lr;
  return out;
}

void abel_set_total_epochs(AbelState& s, int new_total_epochs) {
  if (new_total_epochs < 1) throw InputError("total_epochs must be >= 1");
  s.total_epochs = new_total_epochs;
  s.last_decay_epoch = last_decay_epoch_for(s.last_decay_fraction, new_total_epochs);
}

}  // namespace abel::sched
