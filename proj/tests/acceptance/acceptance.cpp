// Acceptance suite. Prints one line per criterion:
//   criterion N: PASS|FAIL  <measured values>  (<seconds>)
// and exits non-zero when any selected criterion fails.

#include <fmt/core.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "abel/analysis/bounce.hpp"
#include "abel/harness/cli.hpp"
#include "abel/harness/run.hpp"
#include "abel/nn/model.hpp"
#include "abel/nn/norms.hpp"
#include "abel/nn/optim.hpp"
#include "abel/sched/abel.hpp"
#include "abel/sched/plateau.hpp"
#include "abel/sched/schedule.hpp"
#include "support/bounce_oracle.hpp"
#include "support/fd_oracle.hpp"
#include "support/temp_dir.hpp"

namespace fs = std::filesystem;
using namespace abel;
using harness::ExperimentConfig;
using harness::RunState;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome outcome(bool pass, std::string detail) { return {pass, std::move(detail)}; }

// ---------------------------------------------------------------- scheduler

// Independent replay of a decay log: lr is base * factor^k after k decays and
// every bounce decay is the second strict sign flip since the previous one.
bool abel_log_sound(const sched::AbelState& s) {
  double lr = s.base_lr;
  for (std::size_t i = 0; i < s.decay_log.size(); ++i) lr *= s.decay_factor;
  if (lr != s.current_lr) return false;
  const auto& h = s.smoothed_history;
  int flips = 0;
  std::size_t next = 0;
  for (std::size_t i = 2; i < h.size(); ++i) {
    const bool flip = (h[i - 1] - h[i - 2]) * (h[i] - h[i - 1]) < 0.0;
    if (flip) ++flips;
    const int epoch = static_cast<int>(i + 1) * s.smoothing_window;
    for (; next < s.decay_log.size() && s.decay_log[next].epoch <= epoch; ++next) {
      if (s.decay_log[next].reason != sched::DecayReason::kBounce) continue;
      if (s.decay_log[next].epoch != epoch || !flip || flips != 2) return false;
      flips = 0;
    }
  }
  return true;
}

Outcome criterion1() {
  std::vector<std::string> failed;
  const auto make = [](double lr, double factor, int total) {
    return sched::make_abel_state(lr, {.decay_factor = factor, .total_epochs = total});
  };
  {
    auto s = make(0.1, 0.2, 1000);
    const std::vector<double> trace = {10, 8, 6, 7, 7.5, 7.6, 7.55};
    std::vector<std::size_t> events;
    bool armed_at_7 = false;
    for (double w : trace) {
      events.push_back(sched::abel_observe_epoch(s, w).events.size());
      if (w == 7.0) armed_at_7 = s.reached_minimum;
    }
    if (!armed_at_7) failed.push_back("arming flip");
    if (events != std::vector<std::size_t>{0, 0, 0, 0, 0, 0, 1} ||
        std::abs(s.current_lr - 0.02) > 1e-15 || s.reached_minimum) {
      failed.push_back("firing flip");
    }
  }
  {
    auto s = make(0.1, 0.1, 200);
    bool ok = true;
    for (int e = 1; e <= 200; ++e) {
      const auto step = sched::abel_observe_epoch(s, 1000.0 - e);
      for (const auto& ev : step.events) ok = ok && ev.trigger == sched::Trigger::kFinalDecay && e == 170;
    }
    if (!ok || s.decay_log != std::vector<sched::DecayEntry>{{170, sched::DecayReason::kFinal}}) {
      failed.push_back("monotone no decay / final at 170");
    }
  }
  {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool ok = true;
    for (int i = 0; i < 200; ++i) {
      auto s = make(0.1, 0.1, 200);
      for (int e = 1; e <= 200; ++e) sched::abel_observe_epoch(s, 1.0 + 50.0 * u(rng));
      bool final_at_170 = false;
      for (const auto& d : s.decay_log) final_at_170 = final_at_170 || (d.reason == sched::DecayReason::kFinal && d.epoch == 170);
      ok = ok && final_at_170;
    }
    if (!ok) failed.push_back("final decay at 85% regardless of history");
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int law_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int total = 10 + static_cast<int>(u(rng) * 190);
    auto s = sched::make_abel_state(0.01 + u(rng), {.decay_factor = 0.05 + 0.9 * u(rng),
                                                    .last_decay_fraction = 0.5 + 0.5 * u(rng),
                                                    .total_epochs = total,
                                                    .smoothing_window = 1 + trial % 3});
    double w = 5.0 + 10.0 * u(rng);
    for (int e = 0; e < total; ++e) {
      w = std::max(0.01, w + (u(rng) - 0.5));
      sched::abel_observe_epoch(s, w);
      if (!abel_log_sound(s)) {
        ++law_failures;
        break;
      }
    }
  }
  if (law_failures) failed.push_back(fmt::format("decay-count law broken on {} traces", law_failures));
  std::string detail = failed.empty() ? "4 hand traces exact, decay-count law on 1000 random traces"
                                      : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return outcome(failed.empty(), detail);
}

Outcome criterion5() {
  const auto crossing = [](sched::CosineForm form) {
    constexpr int kTotal = 1000;
    sched::ScheduleSpec spec{.base_lr = 1.0, .params = sched::CosineParams{kTotal, form}};
    double lo = 0.0, hi = kTotal;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (sched::lr_at(spec, mid, kTotal) <= 0.1 ? hi : lo) = mid;
    }
    return hi / kTotal;
  };
  const double quarter = crossing(sched::CosineForm::kQuarter);
  const double half = crossing(sched::CosineForm::kHalf);
  const bool pass = std::abs(quarter - 0.936) <= 0.001 && std::abs(half - 0.795) <= 0.001;
  return outcome(pass, fmt::format("quarter {:.5f} (0.936 +- 0.001), half {:.5f} (0.795 +- 0.001)",
                                   quarter, half));
}

Outcome criterion10() {
  auto s = sched::make_plateau_state(0.1, {.factor = 0.1, .patience = 10});
  int first = 0;
  for (int i = 1; i <= 40 && first == 0; ++i) {
    if (sched::plateau_observe_epoch(s, 1.0).event) first = i;
  }
  auto t = sched::make_plateau_state(0.1, {.factor = 0.1, .patience = 10});
  int decays = 0;
  double loss = 1.0;
  for (int i = 0; i < 1000; ++i) {
    loss *= 0.99;
    if (sched::plateau_observe_epoch(t, loss).event) ++decays;
  }
  return outcome(first == 12 && decays == 0,
                 fmt::format("constant stream first decay at observation {} (12), improving stream {} decays (0)",
                             first, decays));
}

Outcome criterion11() {
  constexpr int kLength = 12;
  int total = 0, mismatches = 0;
  std::vector<double> values(kLength);
  analysis::NormTrace trace;
  trace.epochs.resize(kLength);
  std::iota(trace.epochs.begin(), trace.epochs.end(), 1);
  int codes[kLength - 1] = {};
  for (;;) {
    values[0] = 20.0;
    for (int i = 1; i < kLength; ++i) values[i] = values[i - 1] + (codes[i - 1] - 1);
    trace.wsq = values;
    const auto fast = analysis::detect_bounce(trace, 0.0);
    std::vector<int> slow;
    for (auto i : testing::brute_force_bounces(values)) slow.push_back(static_cast<int>(i) + 1);
    if (fast != slow) ++mismatches;
    ++total;
    int k = 0;
    while (k < kLength - 1 && ++codes[k] == 3) codes[k++] = 0;
    if (k == kLength - 1) break;
  }
  return outcome(mismatches == 0 && total == 177147,
                 fmt::format("{} traces, {} disagreements with the exhaustive checker", total, mismatches));
}

// ---------------------------------------------------------------- network

nn::Batch random_batch(std::size_t n, int dim, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  nn::Batch b{nn::Matrix(n, dim), std::vector<int>(n)};
  for (auto& v : b.inputs.data) v = g(rng);
  for (auto& l : b.labels) l = static_cast<int>(rng() % classes);
  return b;
}

// |b|^2 - |a|^2 summed as (b - a)(b + a) per entry, which avoids cancelling
// two nearly equal totals.
double delta_wsq(const nn::Tensor& a, const nn::Tensor& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (b.data[i] - a.data[i]) * (b.data[i] + a.data[i]);
  return sum;
}

Outcome criterion2() {
  nn::ModelArch arch;
  arch.input_dim = 10;
  arch.hidden = {32};
  arch.classes = 5;
  nn::Network net(arch);
  const auto batch = random_batch(64, arch.input_dim, arch.classes, 3);
  double worst = 0.0, worst_naive = 0.0;
  int checked = 0;
  for (double eta : {0.1, 1.0}) {
    for (double lambda : {0.0, 5e-4, 5e-3}) {
      auto p = net.init_params(11, 1.0);
      auto opt = nn::make_momentum(p, 0.0);
      for (int step = 0; step < 100; ++step) {
        const auto g = net.grad(p, batch, 0.0);
        const auto w0 = nn::weight_norm_sq(p);
        const auto gg = nn::grad_norm_sq(p, g);
        const auto gw = nn::inner_gw(p, g);
        const auto before = p;
        nn::step_sgd(p, opt, g, eta, lambda);
        const auto w1 = nn::weight_norm_sq(p);
        for (std::size_t l = 0; l < p.size(); ++l) {
          const double naive = w1.per_layer[l].second - w0.per_layer[l].second;
          const double measured = delta_wsq(before.layers[l].tensor, p.layers[l].tensor);
          const double lam = p.layers[l].l2_enabled ? lambda : 0.0;
          const double predicted = nn::predicted_delta_wsq(w0.per_layer[l].second, gg.per_layer[l].second,
                                                           gw.per_layer[l].second, eta, lam)
                                       .exact;
          if (measured == 0.0 && predicted == 0.0) continue;
          worst = std::max(worst, std::abs(measured - predicted) / std::abs(measured));
          worst_naive = std::max(worst_naive, std::abs(naive - predicted) / std::abs(measured));
          ++checked;
        }
      }
    }
  }
  return outcome(worst < 1e-10, fmt::format("max relative error {:.3e} (< 1e-10) over {} layer-steps; "
                                            "{:.3e} when measured as a difference of totals",
                                            worst, checked, worst_naive));
}

Outcome criterion3() {
  std::vector<std::pair<std::string, nn::ModelArch>> arches;
  nn::ModelArch mlp;
  mlp.input_dim = 7;
  mlp.hidden = {12, 9};
  mlp.classes = 4;
  mlp.activation = nn::Activation::kTanh;
  arches.emplace_back("mlp-tanh", mlp);
  mlp.activation = nn::Activation::kRelu;
  arches.emplace_back("mlp-relu", mlp);
  mlp.normalize = mlp.normalize_output = true;
  arches.emplace_back("mlp-normalized", mlp);
  nn::ModelArch conv;
  conv.kind = nn::ArchKind::kConvNet;
  conv.image_channels = 2;
  conv.image_height = conv.image_width = 6;
  conv.input_dim = 72;
  conv.conv_channels = {3, 4};
  conv.hidden = {8};
  conv.classes = 3;
  conv.activation = nn::Activation::kTanh;
  conv.normalize = true;
  arches.emplace_back("convnet", conv);
  std::string detail;
  bool pass = true;
  std::uint64_t seed = 40;
  for (const auto& [name, arch] : arches) {
    nn::Network net(arch);
    const auto p = net.init_params(seed, 1.0);
    const auto batch = random_batch(5, arch.input_dim, arch.classes, seed + 1);
    const auto report = testing::check_gradients(net, p, batch, 0.1, 120, seed + 2);
    pass = pass && report.probes.size() >= 100 && report.max_rel_error < 1e-5;
    detail += fmt::format("{}{} {:.2e} over {}", detail.empty() ? "" : ", ", name, report.max_rel_error,
                          report.probes.size());
    ++seed;
  }
  return outcome(pass, "max relative error " + detail + " (< 1e-5)");
}

nn::ParamSet single_layer(const nn::ParamSet& p, std::size_t l) {
  nn::ParamSet out;
  out.layers.push_back(p.layers[l]);
  return out;
}

Outcome criterion4() {
  nn::ModelArch arch;
  arch.input_dim = 6;
  arch.hidden = {16, 16};
  arch.classes = 4;
  arch.normalize = arch.normalize_output = true;
  arch.bias = false;
  nn::Network net(arch);
  auto p = net.init_params(5, 1.0);
  const auto batch = random_batch(32, arch.input_dim, arch.classes, 6);
  double worst_gw = 0.0, worst_cos = 0.0, worst_sin = 0.0;
  auto opt = nn::make_momentum(p, 0.0);
  for (int step = 0; step < 50; ++step) {
    const auto g = net.grad(p, batch, 0.0);
    const auto gw = nn::inner_gw(p, g);
    const auto gg = nn::grad_norm_sq(p, g);
    const auto ww = nn::weight_norm_sq(p);
    for (std::size_t l = 0; l < p.size(); ++l) {
      const double scale = std::sqrt(gg.per_layer[l].second * ww.per_layer[l].second);
      if (scale > 0.0) worst_gw = std::max(worst_gw, std::abs(gw.per_layer[l].second) / scale);
    }
    const auto before = p;
    nn::step_sgd(p, opt, g, 0.5, 0.0);
    const auto after_norms = nn::weight_norm_sq(p);
    for (std::size_t l = 0; l < p.size(); ++l) {
      const auto a = nn::angle_cos_sin(single_layer(before, l), single_layer(p, l));
      const double w0 = ww.per_layer[l].second, w1 = after_norms.per_layer[l].second;
      worst_cos = std::max(worst_cos, std::abs(a.cos - std::sqrt(w0 / w1)));
      worst_sin = std::max(worst_sin, std::abs(a.sin - std::sqrt((w1 - w0) / w1)));
    }
    const auto whole = nn::angle_cos_sin(before, p);
    worst_cos = std::max(worst_cos, std::abs(whole.cos - std::sqrt(ww.total / after_norms.total)));
  }
  const bool pass = worst_gw < 1e-6 && worst_cos < 1e-8 && worst_sin < 1e-8;
  return outcome(pass, fmt::format("max |g.w|/(|g||w|) {:.2e} (< 1e-6), max cos error {:.2e}, max sin error {:.2e} (< 1e-8)",
                                   worst_gw, worst_cos, worst_sin));
}

// ---------------------------------------------------------------- experiments

constexpr int kSeeds = 3;

class Lab {
 public:
  explicit Lab(ExperimentConfig base) : base_(std::move(base)) { base_.log_dir = "unused"; }

  ExperimentConfig config(const std::vector<std::pair<std::string, std::string>>& settings) const {
    auto c = base_;
    for (const auto& [k, v] : settings) harness::set_config_value(c, k, v);
    c.log_dir = "unused";
    return c;
  }

  const RunState& run(const ExperimentConfig& c) {
    const auto key = harness::print_config(c);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    harness::RunOptions opts;
    opts.write_logs = false;
    return cache_.emplace(key, harness::run_experiment(c, opts)).first->second;
  }
  const RunState& run(const std::vector<std::pair<std::string, std::string>>& settings) {
    return run(config(settings));
  }

  std::size_t runs() const { return cache_.size(); }

  // Largest lr on a doubling grid whose constant-lr run stays finite, never
  // grows its squared norm past the first epoch's value, and learns.
  double stable_lr() {
    if (stable_lr_) return *stable_lr_;
    double best = 0.0;
    for (double lr : {0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4}) {
      const auto& s = run({{"schedule.kind", "constant"}, {"lambda", "5e-4"}, {"base_lr", lr_text(lr)}, {"seed", "1"}});
      bool ok = s.status == harness::RunStatus::kCompleted && !s.records.empty();
      if (ok) {
        const double first = s.records.front().wsq_total;
        for (const auto& r : s.records) ok = ok && std::isfinite(r.wsq_total) && r.wsq_total <= first;
        ok = ok && harness::summarize(s).best_test_error < 0.5;
      }
      if (!ok) break;
      best = lr;
    }
    stable_lr_ = best;
    return best;
  }

  static std::string lr_text(double lr) { return fmt::format("{}", lr); }

 private:
  ExperimentConfig base_;
  std::map<std::string, RunState> cache_;
  std::optional<double> stable_lr_;
};

analysis::NormTrace trace_of(const RunState& s) {
  return harness::norm_trace({}, s.records, s.events);
}

std::string seed_text(int i) { return std::to_string(i + 1); }

Outcome criterion6(Lab& lab) {
  const double lr = lab.stable_lr();
  if (lr == 0.0) return outcome(false, "no stable lr on the grid");
  int bouncing = 0, increasing = 0, quiet = 0;
  std::vector<std::string> classes;
  for (int i = 0; i < kSeeds; ++i) {
    const auto seed = seed_text(i);
    const auto& a = lab.run({{"schedule.kind", "constant"}, {"lambda", "5e-4"}, {"base_lr", Lab::lr_text(lr)}, {"seed", seed}});
    const auto& b = lab.run({{"schedule.kind", "constant"}, {"lambda", "0"}, {"base_lr", Lab::lr_text(lr)}, {"seed", seed}});
    const auto& c = lab.run({{"schedule.kind", "constant"}, {"lambda", "5e-4"}, {"base_lr", Lab::lr_text(lr / 10)}, {"seed", seed}});
    const auto ca = analysis::classify_trace(trace_of(a));
    const auto cb = analysis::classify_trace(trace_of(b));
    bouncing += ca == analysis::TraceClass::kBouncing;
    increasing += cb == analysis::TraceClass::kMonotoneIncreasing;
    quiet += analysis::detect_bounce(trace_of(c)).empty();
    classes.push_back(fmt::format("{}/{}", analysis::trace_class_name(ca), analysis::trace_class_name(cb)));
  }
  std::string per_seed;
  for (const auto& c : classes) per_seed += (per_seed.empty() ? "" : ", ") + c;
  return outcome(bouncing == kSeeds && increasing == kSeeds && quiet == kSeeds,
                 fmt::format("stable lr {}; lambda 5e-4 bouncing {}/{}, lambda 0 monotone_increasing {}/{}, "
                             "lr/10 without bounce {}/{} (per seed: {})",
                             lr, bouncing, kSeeds, increasing, kSeeds, quiet, kSeeds, per_seed));
}

double mean_best(Lab& lab, std::vector<std::pair<std::string, std::string>> settings) {
  double sum = 0.0;
  settings.emplace_back("seed", "");
  for (int i = 0; i < kSeeds; ++i) {
    settings.back().second = seed_text(i);
    sum += harness::summarize(lab.run(settings)).best_test_error;
  }
  return sum / kSeeds;
}

double mean_final(Lab& lab, std::vector<std::pair<std::string, std::string>> settings) {
  double sum = 0.0;
  settings.emplace_back("seed", "");
  for (int i = 0; i < kSeeds; ++i) {
    settings.back().second = seed_text(i);
    sum += harness::summarize(lab.run(settings)).final_test_error;
  }
  return sum / kSeeds;
}

std::string milestones_at(int total, std::initializer_list<double> fractions) {
  std::string out;
  for (double f : fractions) out += (out.empty() ? "" : " ") + std::to_string(static_cast<int>(std::lround(f * total)));
  return out;
}

Outcome criterion7(Lab& lab) {
  const double lr = lab.stable_lr();
  if (lr == 0.0) return outcome(false, "no stable lr on the grid");
  const int total = lab.config({}).epochs;
  const auto lr_s = Lab::lr_text(lr);
  const double abel_err = mean_best(lab, {{"lambda", "5e-4"}, {"base_lr", lr_s}, {"schedule.kind", "abel"}});
  const double simple_err = mean_best(lab, {{"lambda", "5e-4"}, {"base_lr", lr_s}, {"schedule.kind", "simple_decay"}});
  double step_err = 1.0;
  std::string step_best;
  for (const auto& m : {milestones_at(total, {0.3, 0.6, 0.8}), milestones_at(total, {0.2, 0.4, 0.6}),
                        milestones_at(total, {0.5, 0.75, 0.9})}) {
    const double e = mean_best(lab, {{"lambda", "5e-4"}, {"base_lr", lr_s}, {"schedule.kind", "stepwise"},
                                     {"schedule.milestones", m}});
    if (e < step_err) {
      step_err = e;
      step_best = m;
    }
  }
  const double cosine_err = mean_best(lab, {{"lambda", "0"}, {"base_lr", lr_s}, {"schedule.kind", "cosine"}});
  const double simple0_err = mean_best(lab, {{"lambda", "0"}, {"base_lr", lr_s}, {"schedule.kind", "simple_decay"}});
  const bool pass = abel_err <= simple_err + 0.0025 && std::abs(abel_err - step_err) <= 0.01 &&
                    std::abs(cosine_err - simple0_err) <= 0.005;
  return outcome(pass, fmt::format("best test error over {} seeds: abel {:.4f}, simple_decay {:.4f} (abel <= +0.0025), "
                                   "tuned stepwise [{}] {:.4f} (|diff| <= 0.01); lambda 0: cosine {:.4f}, "
                                   "simple_decay {:.4f} (|diff| <= 0.005)",
                                   kSeeds, abel_err, simple_err, step_best, step_err, cosine_err, simple0_err));
}

Outcome criterion8(Lab& lab) {
  const double top = lab.stable_lr();
  if (top == 0.0) return outcome(false, "no stable lr on the grid");
  const std::vector<double> lrs = {top / 16, top / 8, top / 4, top / 2, top};
  bool monotone = true;
  std::string firsts;
  for (int i = 0; i < kSeeds; ++i) {
    int previous = INT32_MAX;
    std::string row;
    for (double lr : lrs) {
      const auto& s = lab.run({{"lambda", "5e-4"}, {"base_lr", Lab::lr_text(lr)}, {"schedule.kind", "abel"}, {"seed", seed_text(i)}});
      const int first = s.events.empty() ? s.config.epochs + 1 : s.events.front().epoch;
      monotone = monotone && first <= previous;
      previous = first;
      row += (row.empty() ? "" : " ") + std::to_string(first);
    }
    firsts += (firsts.empty() ? "" : "; ") + row;
  }
  const auto lr_s = Lab::lr_text(top);
  const auto spread = [&](const std::string& kind) {
    double lo = 1.0, hi = 0.0;
    for (const char* f : {"0.5", "0.2", "0.1"}) {
      const double e = mean_final(lab, {{"lambda", "5e-4"}, {"base_lr", lr_s}, {"schedule.kind", kind}, {"decay_factor", f}});
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    return hi - lo;
  };
  const double abel_spread = spread("abel");
  const double step_spread = spread("stepwise");
  return outcome(monotone && abel_spread <= step_spread,
                 fmt::format("first decay epoch for lr {}..{} per seed: {} (non-increasing); final-error spread over "
                             "decay_factor {{0.5,0.2,0.1}}: abel {:.4f}, stepwise {:.4f} (abel <= stepwise)",
                             lrs.front(), lrs.back(), firsts, abel_spread, step_spread));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion9(const ExperimentConfig& base) {
  testing::TempDir dir;
  std::vector<std::string> failed;
  auto c = base;
  harness::set_config_value(c, "schedule.kind", "abel");
  harness::set_config_value(c, "epochs", "100");
  c.checkpoint_every = 50;

  c.log_dir = dir.str("full");
  harness::run_experiment(c);
  c.log_dir = dir.str("part");
  harness::RunOptions half;
  half.stop_after = 50;
  harness::run_experiment(c, half);
  auto state = harness::load_checkpoint(harness::checkpoint_path(c.log_dir, 50));
  harness::prepare_resume(state, {std::nullopt, dir.str("resumed")});
  harness::continue_run(state, harness::make_dataset(state.config.dataset));
  for (const char* f : {harness::kMetricsFile, harness::kLayersFile, harness::kEventsFile}) {
    if (slurp(dir.path() / "full" / f) != slurp(dir.path() / "resumed" / f)) failed.push_back(std::string(f) + " differs");
  }

  // Doubled budget: the resumed run must match an uninterrupted 200-epoch run.
  auto longer = harness::load_checkpoint(harness::checkpoint_path(c.log_dir, 50));
  harness::prepare_resume(longer, {200, dir.str("doubled")});
  harness::continue_run(longer, harness::make_dataset(longer.config.dataset));
  auto c200 = c;
  harness::set_config_value(c200, "epochs", "200");
  c200.log_dir = dir.str("long");
  c200.checkpoint_every = 0;
  harness::run_experiment(c200);
  const auto short_log = harness::read_run_log(dir.path() / "full");
  const auto long_log = harness::read_run_log(dir.path() / "long");
  const auto resumed_log = harness::read_run_log(dir.path() / "doubled");
  std::vector<int> bounce_short, bounce_resumed;
  int final_short = 0, final_resumed = 0;
  for (const auto& e : short_log.events) {
    if (e.trigger == sched::Trigger::kBounce && e.epoch < 85) bounce_short.push_back(e.epoch);
    if (e.trigger == sched::Trigger::kFinalDecay) final_short = e.epoch;
  }
  for (const auto& e : resumed_log.events) {
    if (e.trigger == sched::Trigger::kBounce && e.epoch < 85) bounce_resumed.push_back(e.epoch);
    if (e.trigger == sched::Trigger::kFinalDecay) final_resumed = e.epoch;
  }
  if (bounce_short != bounce_resumed) failed.push_back("bounce decays changed");
  if (final_short != 85 || final_resumed != 170) failed.push_back("final decay not relocated");
  if (slurp(dir.path() / "long" / harness::kMetricsFile) != slurp(dir.path() / "doubled" / harness::kMetricsFile)) {
    failed.push_back("doubled-budget resume differs from an uninterrupted run");
  }

  // Cosine with a changed budget is refused through the command line.
  auto cos = base;
  harness::set_config_value(cos, "schedule.kind", "cosine");
  harness::set_config_value(cos, "epochs", "20");
  cos.checkpoint_every = 10;
  cos.log_dir = dir.str("cosine");
  std::ofstream(dir.path() / "cosine.cfg") << harness::print_config(cos);
  const int run_code = harness::cli_main({"run", dir.str("cosine.cfg")});
  const auto ck = harness::checkpoint_path(cos.log_dir, 10).string();
  const int refused = harness::cli_main({"resume", ck, "--epochs", "40", "--log-dir", dir.str("cosine40")});
  if (run_code != 0 || refused != 4) failed.push_back(fmt::format("cosine resume exit code {} (4)", refused));

  std::string detail = fmt::format("byte-identical resume at 50/100; bounce decays [{}] kept, final decay {} -> {}; "
                                   "cosine changed-T exit code {}",
                                   fmt::join(bounce_resumed, " "), final_short, final_resumed, refused);
  for (const auto& f : failed) detail += " [FAILED: " + f + "]";
  return outcome(failed.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string config_path = ABEL_CONFIG_DIR "/hard_blobs.cfg";
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--config", config_path, "hard task config")->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  const auto base = harness::load_config_file(config_path);
  Lab lab(base);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1},
      {2, criterion2},
      {3, criterion3},
      {4, criterion4},
      {5, criterion5},
      {6, [&] { return criterion6(lab); }},
      {7, [&] { return criterion7(lab); }},
      {8, [&] { return criterion8(lab); }},
      {9, [&] { return criterion9(base); }},
      {10, criterion10},
      {11, criterion11},
  };
  int failures = 0;
  for (const auto& [id, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = outcome(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    fmt::print("criterion {}: {}  {}  ({:.1f}s)\n", id, o.pass ? "PASS" : "FAIL", o.detail, secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
