#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace abel::sched {

enum class Kind : std::uint8_t {
  kConstant = 0,
  kStepWise = 1,
  kCosine = 2,
  kLinear = 3,
  kSimpleDecay = 4,
  kAbel = 5,
  kPlateau = 6,
};

// kQuarter: cos(pi t / 2T).  kHalf: (1 + cos(pi t / T)) / 2.
enum class CosineForm : std::uint8_t { kQuarter = 0, kHalf = 1 };

enum class PlateauMode : std::uint8_t { kMin = 0, kMax = 1 };

struct Milestone {
  int epoch = 0;
  double factor = 0.1;
  bool operator==(const Milestone&) const = default;
};

struct ConstantParams {
  bool operator==(const ConstantParams&) const = default;
};

struct StepWiseParams {
  std::vector<Milestone> milestones;
  bool operator==(const StepWiseParams&) const = default;
};

struct CosineParams {
  int total_epochs = 0;
  CosineForm form = CosineForm::kQuarter;
  bool operator==(const CosineParams&) const = default;
};

struct LinearParams {
  int total_epochs = 0;
  double final_lr = 0.0;
  bool operator==(const LinearParams&) const = default;
};

struct SimpleDecayParams {
  int total_epochs = 0;
  double decay_fraction = 0.85;
  double factor = 0.1;
  bool operator==(const SimpleDecayParams&) const = default;
};

struct AbelParams {
  double decay_factor = 0.1;
  double last_decay_fraction = 0.85;
  int total_epochs = 0;
  int smoothing_window = 1;
  int min_history = 3;
  bool operator==(const AbelParams&) const = default;
};

struct PlateauParams {
  double factor = 0.1;
  int patience = 10;
  double threshold = 1e-4;
  PlateauMode mode = PlateauMode::kMin;
  bool operator==(const PlateauParams&) const = default;
};

// Alternative index == static_cast<int>(Kind).
using KindParams = std::variant<ConstantParams, StepWiseParams, CosineParams, LinearParams,
                                SimpleDecayParams, AbelParams, PlateauParams>;

// Declarative description of one learning-rate schedule.
struct ScheduleSpec {
  double base_lr = 0.1;
  int warmup_epochs = 0;
  KindParams params = ConstantParams{};

  Kind kind() const { return static_cast<Kind>(params.index()); }

  // Kinds whose value is a pure function of time.
  bool is_stateless() const;

  // Kinds whose value depends on the total training budget.
  bool depends_on_budget() const;

  // Throws InputError describing the first violated invariant.
  void validate() const;

  bool operator==(const ScheduleSpec&) const = default;
};

std::string_view kind_name(Kind kind);
// Throws InputError for unknown names.
Kind kind_from_name(std::string_view name);

// Multiplier min(1, step / (steps_per_epoch * warmup_epochs)); 1 when there is no warmup.
double warmup_scale(std::int64_t step, std::int64_t steps_per_epoch, int warmup_epochs);

// Learning rate of a stateless schedule at (fractional) epoch t of a run of
// `total_epochs` epochs, warmup included. Budget-dependent kinds use their own
// total_epochs; `total_epochs` bounds the domain t in [0, total_epochs].
// Throws DomainError when t is outside the domain and InputError for stateful kinds.
double lr_at(const ScheduleSpec& spec, double t, int total_epochs);

// Same as lr_at but without the warmup multiplier.
double lr_at_no_warmup(const ScheduleSpec& spec, double t, int total_epochs);

}  // namespace abel::sched
