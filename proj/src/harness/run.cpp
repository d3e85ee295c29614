#include "abel/harness/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "json.hpp"

#include "abel/nn/norms.hpp"
#include "abel/util/error.hpp"
#include "abel/util/random.hpp"
#include "abel/util/text.hpp"

namespace abel::harness {

namespace fs = std::filesystem;

std::string_view run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::kRunning: return "running";
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kStoppedEarly: return "stopped_early";
    case RunStatus::kDiverged: return "diverged";
  }
  return "unknown";
}

nn::ModelArch resolve_arch(const ExperimentConfig& config, const Dataset& data) {
  nn::ModelArch arch = config.arch;
  arch.input_dim = data.dim;
  arch.classes = data.classes;
  if (arch.kind == nn::ArchKind::kConvNet) {
    if (data.channels == 0) throw ConfigError("arch.kind", "convnet requires an image dataset");
    arch.image_channels = data.channels;
    arch.image_height = data.height;
    arch.image_width = data.width;
  }
  return arch;
}

namespace {

// Shuffling stream is decoupled from the initialization stream.
constexpr std::uint64_t kShuffleSalt = 0x9E3779B97F4A7C15ULL;

nn::OptState make_opt(const OptimizerConfig& o, const nn::ParamSet& params) {
  if (o.kind == OptimizerKind::kAdam) return nn::make_adam(params, o.beta1, o.beta2, o.eps);
  return nn::make_momentum(params, o.momentum);
}

struct Eval {
  double loss = 0.0;
  double error = 0.0;
};

Eval evaluate(const nn::Network& net, const nn::ParamSet& params, const Split& split,
              double label_smoothing) {
  constexpr std::size_t kChunk = 1024;
  const std::size_t n = split.inputs.rows;
  Eval out;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t end = std::min(n, start + kChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto batch = gather(split, idx);
    const auto logits = net.forward(params, batch.inputs);
    const double w = static_cast<double>(end - start);
    out.loss += nn::loss_ce(logits, batch.labels, label_smoothing) * w;
    out.error += nn::error_rate(logits, batch.labels) * w;
  }
  out.loss /= static_cast<double>(n);
  out.error /= static_cast<double>(n);
  return out;
}

class LogWriter {
 public:
  LogWriter(const RunState& state) : dir_(state.config.log_dir) {
    fs::create_directories(dir_);
    for (const auto& l : state.params.layers) names_.push_back(l.name);
    metrics_ = open(kMetricsFile, metrics_header());
    layers_ = open(kLayersFile, "epoch,layer,wsq\n");
    events_ = open(kEventsFile, "epoch,old_lr,new_lr,trigger\n");
    timing_ = open(kTimingFile, "epoch,wall_ms\n");
    for (const auto& r : state.records) {
      write_record(r);
      for (const auto& e : state.events) {
        if (e.epoch == r.epoch) write_event(e);
      }
    }
    flush();
    write_meta(state);
  }

  void write_record(const EpochRecord& r) {
    metrics_ << metrics_row(r);
    layers_ << layers_rows(r, names_);
    timing_ << r.epoch << ',' << format_real(r.wall_ms) << '\n';
  }
  void write_event(const sched::LrEvent& e) { events_ << event_row(e); }
  void flush() {
    metrics_.flush();
    layers_.flush();
    events_.flush();
    timing_.flush();
  }

  void write_meta(const RunState& state) const {
    const auto summary = summarize(state);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash(state.config)));
    nlohmann::ordered_json meta;
    meta["code_version"] = kCodeVersion;
    meta["config_hash"] = hash;
    meta["config"] = print_config(state.config);
    meta["layers"] = names_;
    meta["status"] = run_status_name(summary.status);
    meta["epochs_run"] = summary.epochs_run;
    if (!state.records.empty()) {
      meta["final_test_error"] = summary.final_test_error;
      meta["best_test_error"] = summary.best_test_error;
      meta["best_epoch"] = summary.best_epoch;
      meta["final_wsq"] = summary.final_wsq;
    }
    meta["decay_epochs"] = summary.decay_epochs;
    if (!summary.diagnostic.empty()) meta["diagnostic"] = summary.diagnostic;
    std::ofstream out(dir_ / kMetaFile);
    out << meta.dump(2) << '\n';
  }

 private:
  std::ofstream open(const char* name, const std::string& header) {
    std::ofstream f(dir_ / name, std::ios::trunc);
    if (!f) throw LoadError("cannot write " + (dir_ / name).string());
    f << header;
    return f;
  }

  fs::path dir_;
  std::vector<std::string> names_;
  std::ofstream metrics_, layers_, events_, timing_;
};

void diverge(RunState& state, std::string message) {
  state.status = RunStatus::kDiverged;
  state.diagnostic = "epoch " + std::to_string(state.epoch + 1) + ", step " + std::to_string(state.step) +
                     ": " + std::move(message);
}

// One epoch of training. Returns false on divergence.
bool train_epoch(RunState& state, const Dataset& data, const nn::Network& net, EpochRecord& rec) {
  const auto& cfg = state.config;
  const std::size_t n = data.train.inputs.rows;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const auto spe = static_cast<std::int64_t>((n + bs - 1) / bs);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), state.rng);

  rec.lr = state.scheduler.base_rate(static_cast<double>(state.epoch));
  double loss_sum = 0.0, err_sum = 0.0;
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t end = std::min(n, start + bs);
    const auto batch = gather(data.train, std::span(order).subspan(start, end - start));
    const double t = static_cast<double>(state.step) / static_cast<double>(spe);
    // Warmup counts the current step as done, so the first step already moves.
    const double lr = state.scheduler.base_rate(t) *
                      sched::warmup_scale(state.step + 1, spe, cfg.schedule.warmup_epochs);
    nn::LossAndGrad lg;
    try {
      lg = net.loss_and_grad(state.params, batch, cfg.label_smoothing);
    } catch (const NumericError& err) {
      diverge(state, err.what());
      return false;
    }
    if (!std::isfinite(lg.loss)) {
      diverge(state, "non-finite training loss");
      return false;
    }
    const double rows = static_cast<double>(end - start);
    loss_sum += lg.loss * rows;
    err_sum += nn::error_rate(lg.logits, batch.labels) * rows;
    const auto& grads = cfg.clip_norm ? nn::clip_global_norm(lg.grads, *cfg.clip_norm) : lg.grads;
    if (end == n) rec.gw_total = nn::inner_gw(state.params, grads).total;
    nn::step(state.params, state.opt, grads, lr, cfg.l2);
    ++state.step;
  }
  rec.train_loss = loss_sum / static_cast<double>(n);
  rec.train_error = err_sum / static_cast<double>(n);

  const auto wsq = nn::weight_norm_sq(state.params);
  if (!std::isfinite(wsq.total)) {
    diverge(state, "non-finite weights");
    return false;
  }
  rec.wsq_total = wsq.total;
  rec.wsq_l2_only = nn::weight_norm_sq(state.params, nn::NormFilter::kL2Only).total;
  for (const auto& [name, v] : wsq.per_layer) rec.per_layer.push_back(v);
  try {
    const int e = state.epoch + 1;
    if (cfg.full_eval_every > 0 && e % cfg.full_eval_every == 0) {
      const auto full = evaluate(net, state.params, data.train, cfg.label_smoothing);
      rec.train_loss = full.loss;
      rec.train_error = full.error;
    }
    rec.test_error = evaluate(net, state.params, data.test, 0.0).error;
  } catch (const NumericError& err) {
    diverge(state, err.what());
    return false;
  }
  return true;
}

}  // namespace

RunState initial_state(const ExperimentConfig& config, const Dataset& data) {
  const nn::Network net(resolve_arch(config, data));
  auto params = net.init_params(config.seed, config.arch.init_scale);
  auto opt = make_opt(config.optimizer, params);
  return RunState{config,
                  0,
                  0,
                  std::move(params),
                  std::move(opt),
                  sched::Scheduler(config.schedule, config.epochs),
                  std::mt19937_64(config.seed ^ kShuffleSalt),
                  {},
                  {},
                  RunStatus::kRunning,
                  {}};
}

RunSummary summarize(const RunState& state) {
  RunSummary s;
  s.status = state.status;
  s.epochs_run = state.epoch;
  s.diagnostic = state.diagnostic;
  if (!state.records.empty()) {
    s.final_test_error = state.records.back().test_error;
    s.final_wsq = state.records.back().wsq_total;
    s.best_test_error = state.records.front().test_error;
    s.best_epoch = state.records.front().epoch;
    for (const auto& r : state.records) {
      if (r.test_error < s.best_test_error) {
        s.best_test_error = r.test_error;
        s.best_epoch = r.epoch;
      }
    }
  }
  for (const auto& e : state.events) s.decay_epochs.push_back(e.epoch);
  return s;
}

bool auto_stop_decision(const std::vector<EpochRecord>& records, int decay_epoch,
                        double min_improvement) {
  if (!(min_improvement > 0.0)) return false;
  double before = INFINITY, after = INFINITY;
  int after_count = 0;
  for (const auto& r : records) {
    if (r.epoch <= decay_epoch) {
      before = std::min(before, r.test_error);
    } else if (r.epoch <= decay_epoch + kSettleEpochs) {
      after = std::min(after, r.test_error);
      ++after_count;
    }
  }
  if (after_count < kSettleEpochs || !std::isfinite(before)) return false;
  return before - after < min_improvement;
}

void continue_run(RunState& state, const Dataset& data, const RunOptions& options) {
  const nn::Network net(resolve_arch(state.config, data));
  std::optional<LogWriter> logs;
  if (options.write_logs) logs.emplace(state);
  const int budget = state.config.epochs;
  while (state.status == RunStatus::kRunning && state.epoch < budget &&
         (options.stop_after <= 0 || state.epoch < options.stop_after)) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = state.epoch + 1;
    if (!train_epoch(state, data, net, rec)) break;
    const auto events = state.scheduler.end_epoch({rec.wsq_total, rec.train_loss});
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    state.epoch = rec.epoch;
    state.records.push_back(rec);
    state.events.insert(state.events.end(), events.begin(), events.end());
    if (logs) {
      logs->write_record(rec);
      for (const auto& e : events) logs->write_event(e);
      logs->flush();
    }
    if (!options.quiet) {
      std::cerr << "epoch " << rec.epoch << " lr " << format_real(rec.lr) << " loss " << rec.train_loss
                << " train_err " << rec.train_error << " test_err " << rec.test_error << " wsq "
                << rec.wsq_total << '\n';
    }
    if (state.config.auto_stop) {
      for (const auto& e : state.events) {
        if (e.trigger == sched::Trigger::kBounce && e.epoch + kSettleEpochs == state.epoch &&
            auto_stop_decision(state.records, e.epoch, state.config.auto_stop->min_improvement)) {
          state.status = RunStatus::kStoppedEarly;
        }
      }
    }
    if (state.epoch == budget && state.status == RunStatus::kRunning) state.status = RunStatus::kCompleted;
    if (logs && state.config.checkpoint_every > 0 && state.epoch % state.config.checkpoint_every == 0) {
      save_checkpoint(state, checkpoint_path(state.config.log_dir, state.epoch));
    }
    if (options.on_epoch) options.on_epoch(state, rec);
  }
  if (logs) logs->write_meta(state);
}

RunState run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto data = make_dataset(config.dataset);
  auto state = initial_state(config, data);
  continue_run(state, data, options);
  return state;
}

}  // namespace abel::harness
