#include <fstream>
#include <iterator>
#include <sstream>

#include "abel/harness/run.hpp"
#include "abel/util/bytes.hpp"
#include "abel/util/error.hpp"

namespace abel::harness {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kMagic = 0x4B434241;  // "ABCK"
constexpr std::uint16_t kVersion = 1;

std::string_view as_text(std::span<const std::uint8_t> bytes) {
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

void write_tensors(ByteWriter& w, const nn::GradSet& g) {
  for (const auto& t : g.tensors) w.f64s(t.data);
}

nn::GradSet read_tensors(ByteReader& r, const nn::ParamSet& like) {
  auto g = nn::GradSet::zeros_like(like);
  for (auto& t : g.tensors) t.data = r.f64s(t.data.size());
  return g;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const RunState& s) {
  ByteWriter w;
  w.u32(kMagic);
  w.u16(kVersion);
  const auto text = print_config(s.config);
  w.str(text);
  w.u64(fnv1a64(text));
  w.u32(static_cast<std::uint32_t>(s.epoch));
  w.i64(s.step);
  w.u8(static_cast<std::uint8_t>(s.status));
  w.str(s.diagnostic);

  w.u32(static_cast<std::uint32_t>(s.params.layers.size()));
  for (const auto& l : s.params.layers) {
    w.str(l.name);
    w.boolean(l.l2_enabled);
    w.boolean(l.scale_invariant);
    w.u32(static_cast<std::uint32_t>(l.tensor.shape.size()));
    for (auto d : l.tensor.shape) w.u64(d);
    w.f64s(l.tensor.data);
  }

  if (const auto* m = std::get_if<nn::MomentumState>(&s.opt)) {
    w.u8(0);
    w.f64(m->momentum);
    write_tensors(w, m->velocity);
  } else {
    const auto& a = std::get<nn::AdamState>(s.opt);
    w.u8(1);
    w.f64(a.beta1);
    w.f64(a.beta2);
    w.f64(a.eps);
    w.i64(a.t);
    write_tensors(w, a.m);
    write_tensors(w, a.v);
  }

  const auto sched_bytes = sched::serialize_scheduler(s.scheduler);
  w.u32(static_cast<std::uint32_t>(sched_bytes.size()));
  w.raw(sched_bytes);

  std::ostringstream rng;
  rng << s.rng;
  w.str(rng.str());

  w.u32(static_cast<std::uint32_t>(s.records.size()));
  for (const auto& r : s.records) {
    w.u32(static_cast<std::uint32_t>(r.epoch));
    for (double v : {r.lr, r.train_loss, r.train_error, r.test_error, r.wsq_total, r.wsq_l2_only}) w.f64(v);
    w.boolean(r.gw_total.has_value());
    w.f64(r.gw_total.value_or(0.0));
    w.f64(r.wall_ms);
    w.u32(static_cast<std::uint32_t>(r.per_layer.size()));
    w.f64s(r.per_layer);
  }
  w.u32(static_cast<std::uint32_t>(s.events.size()));
  for (const auto& e : s.events) {
    w.u32(static_cast<std::uint32_t>(e.epoch));
    w.f64(e.old_lr);
    w.f64(e.new_lr);
    w.u8(static_cast<std::uint8_t>(e.trigger));
  }
  const auto checksum = fnv1a64(as_text(w.bytes()));
  w.u64(checksum);
  return w.take();
}

RunState restore_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw DecodeError("checkpoint truncated");
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader trailer(bytes.last(8));
  if (trailer.u64() != fnv1a64(as_text(body))) throw DecodeError("checkpoint checksum mismatch");

  ByteReader r(body);
  if (r.u32() != kMagic) throw DecodeError("not a checkpoint file (bad magic)");
  if (const auto v = r.u16(); v != kVersion) {
    throw DecodeError("unsupported checkpoint version " + std::to_string(v));
  }
  const auto text = r.str();
  if (r.u64() != fnv1a64(text)) throw DecodeError("embedded config hash does not match config text");
  ExperimentConfig config;
  try {
    config = parse_config(text);
  } catch (const ConfigError& err) {
    throw DecodeError(std::string("embedded config invalid: ") + err.what());
  }
  const int epoch = static_cast<int>(r.u32());
  const auto step = r.i64();
  const auto status = r.u8();
  if (status > static_cast<std::uint8_t>(RunStatus::kDiverged)) throw DecodeError("bad run status");
  auto diagnostic = r.str();

  nn::ParamSet params;
  const auto n_layers = r.u32();
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    nn::ParamTensor l;
    l.name = r.str();
    l.l2_enabled = r.boolean();
    l.scale_invariant = r.boolean();
    const auto ndim = r.u32();
    if (ndim > 8) throw DecodeError("tensor rank too large");
    for (std::uint32_t d = 0; d < ndim; ++d) l.tensor.shape.push_back(r.u64());
    const auto count = nn::element_count(l.tensor.shape);
    if (count > r.remaining() / 8) throw DecodeError("tensor larger than payload");
    l.tensor.data = r.f64s(count);
    params.layers.push_back(std::move(l));
  }

  nn::OptState opt;
  const auto tag = r.u8();
  if (tag == 0) {
    nn::MomentumState m;
    m.momentum = r.f64();
    m.velocity = read_tensors(r, params);
    opt = std::move(m);
  } else if (tag == 1) {
    nn::AdamState a;
    a.beta1 = r.f64();
    a.beta2 = r.f64();
    a.eps = r.f64();
    a.t = r.i64();
    a.m = read_tensors(r, params);
    a.v = read_tensors(r, params);
    opt = std::move(a);
  } else {
    throw DecodeError("unknown optimizer tag");
  }

  const auto sched_len = r.u32();
  const auto sched_bytes = r.raw(sched_len);
  auto scheduler = sched::restore_scheduler(sched_bytes);

  std::mt19937_64 rng;
  std::istringstream rng_text(r.str());
  rng_text >> rng;
  if (!rng_text) throw DecodeError("bad RNG state");

  std::vector<EpochRecord> records(r.u32());
  for (auto& rec : records) {
    rec.epoch = static_cast<int>(r.u32());
    rec.lr = r.f64();
    rec.train_loss = r.f64();
    rec.train_error = r.f64();
    rec.test_error = r.f64();
    rec.wsq_total = r.f64();
    rec.wsq_l2_only = r.f64();
    const bool has_gw = r.boolean();
    const double gw = r.f64();
    if (has_gw) rec.gw_total = gw;
    rec.wall_ms = r.f64();
    const auto n = r.u32();
    if (n != params.layers.size()) throw DecodeError("record layer count mismatch");
    rec.per_layer = r.f64s(n);
  }
  std::vector<sched::LrEvent> events(r.u32());
  for (auto& e : events) {
    e.epoch = static_cast<int>(r.u32());
    e.old_lr = r.f64();
    e.new_lr = r.f64();
    const auto t = r.u8();
    if (t > static_cast<std::uint8_t>(sched::Trigger::kPlateau)) throw DecodeError("bad event trigger");
    e.trigger = static_cast<sched::Trigger>(t);
  }
  r.expect_end();

  if (scheduler.epochs_observed() != epoch || static_cast<int>(records.size()) != epoch) {
    throw DecodeError("checkpoint epoch inconsistent with its history");
  }
  if (scheduler.spec() != config.schedule || scheduler.total_epochs() != config.epochs) {
    throw DecodeError("scheduler state inconsistent with embedded config");
  }
  return RunState{std::move(config), epoch,          step,
                  std::move(params), std::move(opt), std::move(scheduler),
                  rng,               std::move(records), std::move(events),
                  static_cast<RunStatus>(status), std::move(diagnostic)};
}

void save_checkpoint(const RunState& state, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto bytes = serialize_checkpoint(state);
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw LoadError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

RunState load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return restore_checkpoint(bytes);
}

fs::path checkpoint_path(const fs::path& log_dir, int epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%04d.ckpt", epoch);
  return log_dir / "checkpoints" / name;
}

void prepare_resume(RunState& state, const ResumeOptions& options) {
  if (options.log_dir) state.config.log_dir = *options.log_dir;
  if (options.total_epochs && *options.total_epochs != state.config.epochs) {
    const int n = *options.total_epochs;
    if (n < state.epoch) {
      throw ResumeRefused("new budget " + std::to_string(n) + " is before the checkpoint epoch " +
                          std::to_string(state.epoch));
    }
    if (state.config.schedule.depends_on_budget()) {
      throw ResumeRefused("schedule '" + std::string(sched::kind_name(state.config.schedule.kind())) +
                          "' is a function of the total budget; resuming with a different number "
                          "of epochs would change every remaining learning rate");
    }
    state.scheduler.set_total_epochs(n);
    state.config.schedule = state.scheduler.spec();
    state.config.epochs = n;
  }
  if (state.epoch < state.config.epochs && state.status == RunStatus::kCompleted) {
    state.status = RunStatus::kRunning;
  }
}

}  // namespace abel::harness
