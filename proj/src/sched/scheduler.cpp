#include "abel/sched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "abel/util/bytes.hpp"
#include "abel/util/error.hpp"

namespace abel::sched {

std::string_view trigger_name(Trigger trigger) {
  switch (trigger) {
    case Trigger::kMilestone: return "milestone";
    case Trigger::kBounce: return "bounce";
    case Trigger::kFinalDecay: return "final_decay";
    case Trigger::kPlateau: return "plateau";
  }
  return "unknown";
}

Scheduler::Scheduler(ScheduleSpec spec, int total_epochs)
    : spec_(std::move(spec)), total_epochs_(total_epochs) {
  spec_.validate();
  if (total_epochs_ < 1) throw InputError("total_epochs must be >= 1");
  const int own_total = std::visit(
      [](const auto& p) {
        if constexpr (requires { p.total_epochs; }) {
          return p.total_epochs;
        } else {
          return 0;
        }
      },
      spec_.params);
  if (own_total != 0 && own_total != total_epochs_) {
    throw InputError("schedule total_epochs (" + std::to_string(own_total) +
                     ") differs from the run budget (" + std::to_string(total_epochs_) + ")");
  }
  if (const auto* p = std::get_if<AbelParams>(&spec_.params)) {
    state_ = make_abel_state(spec_.base_lr, *p);
  } else if (const auto* q = std::get_if<PlateauParams>(&spec_.params)) {
    state_ = make_plateau_state(spec_.base_lr, *q);
  }
}

double Scheduler::base_rate(double t) const {
  if (const auto* a = abel_state()) return a->current_lr;
  if (const auto* p = plateau_state()) return p->current_lr;
  // Constant and step-wise schedules are defined past the budget.
  const int horizon = spec_.depends_on_budget()
                          ? total_epochs_
                          : std::max(total_epochs_, static_cast<int>(std::ceil(t)));
  return lr_at_no_warmup(spec_, t, horizon);
}

double Scheduler::rate_at_step(std::int64_t step, std::int64_t steps_per_epoch) const {
  const double t = static_cast<double>(step) / static_cast<double>(steps_per_epoch);
  return base_rate(t) * warmup_scale(step, steps_per_epoch, spec_.warmup_epochs);
}

std::vector<LrEvent> Scheduler::end_epoch(const EpochObservation& obs) {
  std::vector<LrEvent> events;
  if (auto* a = std::get_if<AbelState>(&state_)) {
    events = abel_observe_epoch(*a, obs.weight_norm_sq).events;
  } else if (auto* p = std::get_if<PlateauState>(&state_)) {
    if (auto ev = plateau_observe_epoch(*p, obs.metric).event) events.push_back(*ev);
  }
  ++epochs_observed_;
  const int e = epochs_observed_;
  const auto k = spec_.kind();
  if ((k == Kind::kStepWise || k == Kind::kSimpleDecay) &&
      (!spec_.depends_on_budget() || e <= total_epochs_)) {
    const double before = base_rate(e - 1);
    const double after = base_rate(e);
    if (after < before) {
      events.push_back(
          {e, before, after, k == Kind::kStepWise ? Trigger::kMilestone : Trigger::kFinalDecay});
    }
  }
  return events;
}

void Scheduler::set_total_epochs(int total_epochs) {
  if (total_epochs < 1) throw InputError("total_epochs must be >= 1");
  if (total_epochs == total_epochs_) return;
  if (spec_.depends_on_budget()) {
    throw InputError(std::string(kind_name(spec_.kind())) +
                     " schedules depend on the training budget; it cannot change from " +
                     std::to_string(total_epochs_) + " to " + std::to_string(total_epochs));
  }
  total_epochs_ = total_epochs;
  if (auto* a = std::get_if<AbelState>(&state_)) {
    abel_set_total_epochs(*a, total_epochs);
    std::get<AbelParams>(spec_.params).total_epochs = total_epochs;
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::uint32_t kMagic = 0x534C4241;  // "ABLS" little-endian
constexpr std::uint16_t kVersion = 1;

enum class StateTag : std::uint8_t { kNone = 0, kAbel = 1, kPlateau = 2 };

void write_doubles(ByteWriter& w, const std::vector<double>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  w.f64s(v);
}

std::vector<double> read_doubles(ByteReader& r) { return r.f64s(r.u32()); }

int read_int(ByteReader& r) {
  const auto v = r.u32();
  if (v > 0x7FFFFFFFu) throw DecodeError("integer field out of range");
  return static_cast<int>(v);
}

void write_spec(ByteWriter& w, const ScheduleSpec& spec) {
  w.u8(static_cast<std::uint8_t>(spec.kind()));
  w.f64(spec.base_lr);
  w.u32(static_cast<std::uint32_t>(spec.warmup_epochs));
  std::visit(
      [&w](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, StepWiseParams>) {
          w.u32(static_cast<std::uint32_t>(p.milestones.size()));
          for (const auto& m : p.milestones) {
            w.u32(static_cast<std::uint32_t>(m.epoch));
            w.f64(m.factor);
          }
        } else if constexpr (std::is_same_v<P, CosineParams>) {
          w.u32(static_cast<std::uint32_t>(p.total_epochs));
          w.u8(static_cast<std::uint8_t>(p.form));
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          w.u32(static_cast<std::uint32_t>(p.total_epochs));
          w.f64(p.final_lr);
        } else if constexpr (std::is_same_v<P, SimpleDecayParams>) {
          w.u32(static_cast<std::uint32_t>(p.total_epochs));
          w.f64(p.decay_fraction);
          w.f64(p.factor);
        } else if constexpr (std::is_same_v<P, AbelParams>) {
          w.f64(p.decay_factor);
          w.f64(p.last_decay_fraction);
          w.u32(static_cast<std::uint32_t>(p.total_epochs));
          w.u32(static_cast<std::uint32_t>(p.smoothing_window));
          w.u32(static_cast<std::uint32_t>(p.min_history));
        } else if constexpr (std::is_same_v<P, PlateauParams>) {
          w.f64(p.factor);
          w.u32(static_cast<std::uint32_t>(p.patience));
          w.f64(p.threshold);
          w.u8(static_cast<std::uint8_t>(p.mode));
        }
      },
      spec.params);
}

ScheduleSpec read_spec(ByteReader& r) {
  ScheduleSpec spec;
  const auto kind = r.u8();
  spec.base_lr = r.f64();
  spec.warmup_epochs = read_int(r);
  switch (static_cast<Kind>(kind)) {
    case Kind::kConstant: spec.params = ConstantParams{}; break;
    case Kind::kStepWise: {
      StepWiseParams p;
      const auto n = r.u32();
      if (n > r.remaining() / 12) throw DecodeError("milestone count exceeds payload");
      for (std::uint32_t i = 0; i < n; ++i) {
        Milestone m;
        m.epoch = read_int(r);
        m.factor = r.f64();
        p.milestones.push_back(m);
      }
      spec.params = std::move(p);
      break;
    }
    case Kind::kCosine: {
      CosineParams p;
      p.total_epochs = read_int(r);
      const auto form = r.u8();
      if (form > 1) throw DecodeError("invalid cosine form");
      p.form = static_cast<CosineForm>(form);
      spec.params = p;
      break;
    }
    case Kind::kLinear: {
      LinearParams p;
      p.total_epochs = read_int(r);
      p.final_lr = r.f64();
      spec.params = p;
      break;
    }
    case Kind::kSimpleDecay: {
      SimpleDecayParams p;
      p.total_epochs = read_int(r);
      p.decay_fraction = r.f64();
      p.factor = r.f64();
      spec.params = p;
      break;
    }
    case Kind::kAbel: {
      AbelParams p;
      p.decay_factor = r.f64();
      p.last_decay_fraction = r.f64();
      p.total_epochs = read_int(r);
      p.smoothing_window = read_int(r);
      p.min_history = read_int(r);
      spec.params = p;
      break;
    }
    case Kind::kPlateau: {
      PlateauParams p;
      p.factor = r.f64();
      p.patience = read_int(r);
      p.threshold = r.f64();
      const auto mode = r.u8();
      if (mode > 1) throw DecodeError("invalid plateau mode");
      p.mode = static_cast<PlateauMode>(mode);
      spec.params = p;
      break;
    }
    default: throw DecodeError("unknown schedule kind tag " + std::to_string(kind));
  }
  try {
    spec.validate();
  } catch (const InputError& e) {
    throw DecodeError(std::string("decoded schedule is invalid: ") + e.what());
  }
  return spec;
}

void write_abel(ByteWriter& w, const AbelState& s) {
  w.f64(s.current_lr);
  w.u32(static_cast<std::uint32_t>(s.last_decay_epoch));
  w.u32(static_cast<std::uint32_t>(s.epoch));
  w.boolean(s.reached_minimum);
  write_doubles(w, s.norm_history);
  write_doubles(w, s.smoothed_history);
  w.u32(static_cast<std::uint32_t>(s.decay_log.size()));
  for (const auto& d : s.decay_log) {
    w.u32(static_cast<std::uint32_t>(d.epoch));
    w.u8(static_cast<std::uint8_t>(d.reason));
  }
}

AbelState read_abel(ByteReader& r, const ScheduleSpec& spec) {
  AbelState s = make_abel_state(spec.base_lr, std::get<AbelParams>(spec.params));
  s.current_lr = r.f64();
  s.last_decay_epoch = read_int(r);
  s.epoch = read_int(r);
  s.reached_minimum = r.boolean();
  s.norm_history = read_doubles(r);
  s.smoothed_history = read_doubles(r);
  const auto n = r.u32();
  if (n > r.remaining() / 5) throw DecodeError("decay log count exceeds payload");
  double lr = s.base_lr;
  for (std::uint32_t i = 0; i < n; ++i) {
    DecayEntry d;
    d.epoch = read_int(r);
    const auto reason = r.u8();
    if (reason > 1) throw DecodeError("invalid decay reason");
    d.reason = static_cast<DecayReason>(reason);
    s.decay_log.push_back(d);
    lr *= s.decay_factor;
  }
  if (lr != s.current_lr) throw DecodeError("abel current_lr inconsistent with decay log");
  if (s.norm_history.size() != static_cast<std::size_t>(s.epoch) ||
      s.smoothed_history.size() != s.norm_history.size() / s.smoothing_window) {
    throw DecodeError("abel history lengths inconsistent with epoch counter");
  }
  return s;
}

void write_plateau(ByteWriter& w, const PlateauState& s) {
  w.f64(s.current_lr);
  w.f64(s.best_metric);
  w.u32(static_cast<std::uint32_t>(s.epochs_since_improvement));
  w.u32(static_cast<std::uint32_t>(s.epoch));
}

PlateauState read_plateau(ByteReader& r, const ScheduleSpec& spec) {
  PlateauState s = make_plateau_state(spec.base_lr, std::get<PlateauParams>(spec.params));
  s.current_lr = r.f64();
  s.best_metric = r.f64();
  s.epochs_since_improvement = read_int(r);
  s.epoch = read_int(r);
  if (!(s.current_lr > 0.0) || std::isnan(s.best_metric)) {
    throw DecodeError("plateau state has invalid values");
  }
  return s;
}

}  // namespace

std::vector<std::uint8_t> serialize_scheduler(const Scheduler& sch) {
  ByteWriter w;
  w.u32(kMagic);
  w.u16(kVersion);
  write_spec(w, sch.spec_);
  w.u32(static_cast<std::uint32_t>(sch.total_epochs_));
  w.u32(static_cast<std::uint32_t>(sch.epochs_observed_));
  if (const auto* a = sch.abel_state()) {
    w.u8(static_cast<std::uint8_t>(StateTag::kAbel));
    write_abel(w, *a);
  } else if (const auto* p = sch.plateau_state()) {
    w.u8(static_cast<std::uint8_t>(StateTag::kPlateau));
    write_plateau(w, *p);
  } else {
    w.u8(static_cast<std::uint8_t>(StateTag::kNone));
  }
  w.u64(fnv1a64(std::string_view(reinterpret_cast<const char*>(w.bytes().data()),
                                 w.bytes().size())));
  return w.take();
}

Scheduler restore_scheduler(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw DecodeError("scheduler payload too short");
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader trailer(bytes.last(8));
  const auto checksum = trailer.u64();
  if (checksum !=
      fnv1a64(std::string_view(reinterpret_cast<const char*>(body.data()), body.size()))) {
    throw DecodeError("scheduler payload checksum mismatch");
  }

  ByteReader r(body);
  if (r.u32() != kMagic) throw DecodeError("bad scheduler magic");
  if (const auto v = r.u16(); v != kVersion) {
    throw DecodeError("unsupported scheduler format version " + std::to_string(v));
  }
  Scheduler sch;
  sch.spec_ = read_spec(r);
  sch.total_epochs_ = read_int(r);
  sch.epochs_observed_ = read_int(r);
  if (sch.total_epochs_ < 1) throw DecodeError("total_epochs must be >= 1");
  const auto tag = static_cast<StateTag>(r.u8());
  const auto kind = sch.spec_.kind();
  if (tag == StateTag::kAbel && kind == Kind::kAbel) {
    sch.state_ = read_abel(r, sch.spec_);
  } else if (tag == StateTag::kPlateau && kind == Kind::kPlateau) {
    sch.state_ = read_plateau(r, sch.spec_);
  } else if (tag != StateTag::kNone || !sch.spec_.is_stateless()) {
    throw DecodeError("scheduler state tag does not match schedule kind");
  }
  r.expect_end();
  return sch;
}

}  // namespace abel::sched
