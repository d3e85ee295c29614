#pragma once

#include <cstdint>
#include <string_view>

namespace abel::sched {

enum class Trigger : std::uint8_t { kMilestone = 0, kBounce = 1, kFinalDecay = 2, kPlateau = 3 };

std::string_view trigger_name(Trigger trigger);

// A discrete learning-rate change. new_lr == old_lr * factor of the trigger.
struct LrEvent {
  int epoch = 0;
  double old_lr = 0.0;
  double new_lr = 0.0;
  Trigger trigger = Trigger::kMilestone;
  bool operator==(const LrEvent&) const = default;
};

}  // namespace abel::sched
