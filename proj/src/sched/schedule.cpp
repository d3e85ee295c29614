#include "abel/sched/schedule.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "abel/util/error.hpp"

namespace abel::sched {

namespace {

constexpr std::array<std::string_view, 7> kKindNames = {
    "constant", "stepwise", "cosine", "linear", "simple_decay", "abel", "plateau"};

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError("invalid schedule: " + what);
}

bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

}  // namespace

std::string_view kind_name(Kind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

Kind kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<Kind>(i);
  }
  throw InputError("unknown schedule kind '" + std::string(name) + "'");
}

bool ScheduleSpec::is_stateless() const {
  return kind() != Kind::kAbel && kind() != Kind::kPlateau;
}

bool ScheduleSpec::depends_on_budget() const {
  const auto k = kind();
  return k == Kind::kCosine || k == Kind::kLinear || k == Kind::kSimpleDecay;
}

void ScheduleSpec::validate() const {
  require(std::isfinite(base_lr) && base_lr > 0.0, "base_lr must be > 0");
  require(warmup_epochs >= 0, "warmup_epochs must be >= 0");
  std::visit(
      [this](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, StepWiseParams>) {
          int prev = -1;
          for (const auto& m : p.milestones) {
            require(m.epoch > prev, "milestones must be strictly increasing with epoch >= 0");
            require(in_open_unit(m.factor), "milestone factor must be in (0,1)");
            prev = m.epoch;
          }
        } else if constexpr (std::is_same_v<P, CosineParams>) {
          require(p.total_epochs >= 1, "cosine total_epochs must be >= 1");
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          require(p.total_epochs >= 1, "linear total_epochs must be >= 1");
          require(std::isfinite(p.final_lr) && p.final_lr >= 0.0, "linear final_lr must be >= 0");
        } else if constexpr (std::is_same_v<P, SimpleDecayParams>) {
          require(p.total_epochs >= 1, "simple_decay total_epochs must be >= 1");
          require(p.decay_fraction > 0.0 && p.decay_fraction <= 1.0,
                  "simple_decay decay_fraction must be in (0,1]");
          require(in_open_unit(p.factor), "simple_decay factor must be in (0,1)");
        } else if constexpr (std::is_same_v<P, AbelParams>) {
          require(in_open_unit(p.decay_factor), "abel decay_factor must be in (0,1)");
          require(p.last_decay_fraction > 0.0 && p.last_decay_fraction <= 1.0,
                  "abel last_decay_fraction must be in (0,1]");
          require(p.total_epochs >= 1, "abel total_epochs must be >= 1");
          require(p.smoothing_window >= 1, "abel smoothing_window must be >= 1");
          require(p.min_history >= 3, "abel min_history must be >= 3");
        } else if constexpr (std::is_same_v<P, PlateauParams>) {
          require(in_open_unit(p.factor), "plateau factor must be in (0,1)");
          require(p.patience >= 0, "plateau patience must be >= 0");
          require(std::isfinite(p.threshold) && p.threshold >= 0.0,
                  "plateau threshold must be >= 0");
        }
      },
      params);
}

double warmup_scale(std::int64_t step, std::int64_t steps_per_epoch, int warmup_epochs) {
  if (warmup_epochs <= 0) return 1.0;
  const double denom = static_cast<double>(steps_per_epoch) * warmup_epochs;
  return std::min(1.0, static_cast<double>(step) / denom);
}

double lr_at_no_warmup(const ScheduleSpec& spec, double t, int total_epochs) {
  if (!std::isfinite(t) || t < 0.0 || t > static_cast<double>(total_epochs)) {
    throw DomainError("epoch " + std::to_string(t) + " outside [0, " +
                      std::to_string(total_epochs) + "]");
  }
  const double base = spec.base_lr;
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantParams>) {
          return base;
        } else if constexpr (std::is_same_v<P, StepWiseParams>) {
          double lr = base;
          for (const auto& m : p.milestones) {
            if (static_cast<double>(m.epoch) <= t) lr *= m.factor;
          }
          return lr;
        } else if constexpr (std::is_same_v<P, CosineParams>) {
          const double frac = t / p.total_epochs;
          if (p.form == CosineForm::kQuarter) {
            return base * std::cos(std::numbers::pi * frac / 2.0);
          }
          return base * (1.0 + std::cos(std::numbers::pi * frac)) / 2.0;
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          return base + (p.final_lr - base) * (t / p.total_epochs);
        } else if constexpr (std::is_same_v<P, SimpleDecayParams>) {
          return t < p.decay_fraction * p.total_epochs ? base : base * p.factor;
        } else {
          throw InputError("lr_at requires a stateless schedule, got " +
                           std::string(kind_name(spec.kind())));
        }
      },
      spec.params);
}

double lr_at(const ScheduleSpec& spec, double t, int total_epochs) {
  const double lr = lr_at_no_warmup(spec, t, total_epochs);
  if (spec.warmup_epochs <= 0) return lr;
  return lr * std::min(1.0, t / spec.warmup_epochs);
}

}  // namespace abel::sched
