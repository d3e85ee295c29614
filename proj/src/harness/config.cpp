#include "abel/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "abel/util/bytes.hpp"
#include "abel/util/error.hpp"
#include "abel/util/text.hpp"

namespace abel::harness {

namespace {

namespace fs = std::filesystem;

using sched::Kind;

class Entries {
 public:
  void add(std::string key, std::string value) {
    if (values_.count(key)) throw ConfigError(key, "duplicate key");
    values_.emplace(std::move(key), std::move(value));
  }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::optional<std::string> take(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void erase_section(const std::string& section, const std::set<std::string>& keep) {
    for (auto it = values_.begin(); it != values_.end();) {
      const bool in_section = it->first.rfind(section + ".", 0) == 0;
      if (in_section && !keep.count(it->first)) {
        it = values_.erase(it);
      } else {
        ++it;
      }
    }
  }

  double real(const std::string& key, double fallback, const std::function<bool(double)>& ok,
              const char* range) {
    const auto raw = take(key);
    if (!raw) return fallback;
    const auto v = parse_real(*raw);
    if (!v || !std::isfinite(*v)) throw ConfigError(key, "expected a real number, got '" + *raw + "'");
    if (!ok(*v)) throw ConfigError(key, std::string("out of range, must be ") + range);
    return *v;
  }
  int integer(const std::string& key, int fallback, int min_value) {
    const auto raw = take(key);
    if (!raw) return fallback;
    const auto v = parse_int(*raw);
    if (!v || *v > 1'000'000'000 || *v < -1'000'000'000) {
      throw ConfigError(key, "expected an integer, got '" + *raw + "'");
    }
    if (*v < min_value) throw ConfigError(key, "out of range, must be >= " + std::to_string(min_value));
    return static_cast<int>(*v);
  }
  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    const auto raw = take(key);
    if (!raw) return fallback;
    const auto v = parse_uint(*raw);
    if (!v) throw ConfigError(key, "expected a non-negative integer, got '" + *raw + "'");
    return *v;
  }
  bool boolean(const std::string& key, bool fallback) {
    const auto raw = take(key);
    if (!raw) return fallback;
    const auto v = parse_bool(*raw);
    if (!v) throw ConfigError(key, "expected true or false, got '" + *raw + "'");
    return *v;
  }
  std::vector<int> int_list(const std::string& key, std::vector<int> fallback, int min_value) {
    const auto raw = take(key);
    if (!raw) return fallback;
    std::vector<int> out;
    std::string text = *raw;
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream parts(text);
    for (std::string part; parts >> part;) {
      const auto v = parse_int(part);
      if (!v || *v < min_value || *v > 1'000'000'000) {
        throw ConfigError(key, "expected a list of integers >= " + std::to_string(min_value));
      }
      out.push_back(static_cast<int>(*v));
    }
    return out;
  }
  template <typename E>
  E choice(const std::string& key, E fallback, std::initializer_list<std::pair<const char*, E>> options) {
    const auto raw = take(key);
    if (!raw) return fallback;
    std::string names;
    for (const auto& [name, value] : options) {
      if (*raw == name) return value;
      names += names.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(key, "unknown value '" + *raw + "', expected one of: " + names);
  }

  void reject_unused() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key)) throw ConfigError(key, "unknown or inapplicable key");
    }
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

Entries tokenize(std::string_view text) {
  Entries entries;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const auto dot = key.find('.');
    if (key.empty() || dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
      throw ConfigError(key, "line " + std::to_string(line_no) + ": keys have the form section.name");
    }
    entries.add(key, std::string(trim(line.substr(eq + 1))));
  }
  return entries;
}

bool positive(double v) { return v > 0.0; }
bool non_negative(double v) { return v >= 0.0; }
bool open_unit(double v) { return v > 0.0 && v < 1.0; }
bool half_open_unit(double v) { return v >= 0.0 && v < 1.0; }
bool unit_upper(double v) { return v > 0.0 && v <= 1.0; }

std::string resolve_path(Entries& e, const std::string& key, const fs::path& base) {
  const auto raw = e.take(key);
  if (!raw || raw->empty()) throw ConfigError(key, "required for dataset.kind = idx");
  fs::path p(*raw);
  if (p.is_relative()) p = base / p;
  p = fs::absolute(p).lexically_normal();
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw ConfigError(key, "file not found: " + p.string());
  return p.string();
}

DatasetSpec build_dataset(Entries& e, const fs::path& base) {
  const std::string kind = e.take("dataset.kind").value_or("blobs");
  if (kind == "blobs") {
    SyntheticBlobs d;
    d.classes = e.integer("dataset.classes", d.classes, 2);
    d.dim = e.integer("dataset.dim", d.dim, 1);
    d.samples = e.integer("dataset.samples", d.samples, 1);
    d.test_samples = e.integer("dataset.test_samples", d.test_samples, 1);
    d.clusters_per_class = e.integer("dataset.clusters_per_class", d.clusters_per_class, 1);
    d.separation = e.real("dataset.separation", d.separation, non_negative, ">= 0");
    d.label_noise = e.real("dataset.label_noise", d.label_noise, half_open_unit, "in [0, 1)");
    d.seed = e.unsigned_int("dataset.seed", d.seed);
    return d;
  }
  if (kind == "spirals") {
    TwoSpirals d;
    d.samples = e.integer("dataset.samples", d.samples, 1);
    d.test_samples = e.integer("dataset.test_samples", d.test_samples, 1);
    d.turns = e.real("dataset.turns", d.turns, positive, "> 0");
    d.noise = e.real("dataset.noise", d.noise, non_negative, ">= 0");
    d.label_noise = e.real("dataset.label_noise", d.label_noise, half_open_unit, "in [0, 1)");
    d.seed = e.unsigned_int("dataset.seed", d.seed);
    return d;
  }
  if (kind == "idx") {
    IdxImages d;
    d.train_images = resolve_path(e, "dataset.train_images", base);
    d.train_labels = resolve_path(e, "dataset.train_labels", base);
    d.test_images = resolve_path(e, "dataset.test_images", base);
    d.test_labels = resolve_path(e, "dataset.test_labels", base);
    d.subsample = e.integer("dataset.subsample", d.subsample, 0);
    return d;
  }
  throw ConfigError("dataset.kind", "unknown value '" + kind + "', expected one of: blobs, spirals, idx");
}

nn::ModelArch build_arch(Entries& e) {
  nn::ModelArch a;
  a.kind = e.choice("arch.kind", nn::ArchKind::kMlp,
                    {{"mlp", nn::ArchKind::kMlp}, {"convnet", nn::ArchKind::kConvNet}});
  a.hidden = e.int_list("arch.hidden", {64, 64}, 1);
  a.activation = e.choice("arch.activation", nn::Activation::kRelu,
                          {{"relu", nn::Activation::kRelu}, {"tanh", nn::Activation::kTanh}});
  a.normalize = e.boolean("arch.normalize", false);
  a.normalize_output = e.boolean("arch.normalize_output", false);
  a.bias = e.boolean("arch.bias", true);
  a.l2_on_bias = e.boolean("arch.l2_on_bias", true);
  a.init_scale = e.real("arch.init_scale", 1.0, positive, "> 0");
  if (a.kind == nn::ArchKind::kConvNet) {
    a.conv_channels = e.int_list("arch.conv_channels", {8}, 1);
    a.kernel = e.integer("arch.kernel", 3, 1);
    if (a.kernel % 2 == 0) throw ConfigError("arch.kernel", "must be odd");
  }
  return a;
}

OptimizerConfig build_optimizer(Entries& e) {
  OptimizerConfig o;
  o.kind = e.choice("optimizer.kind", OptimizerKind::kMomentum,
                    {{"momentum", OptimizerKind::kMomentum}, {"adam", OptimizerKind::kAdam}});
  if (o.kind == OptimizerKind::kMomentum) {
    o.momentum = e.real("optimizer.momentum", o.momentum, half_open_unit, "in [0, 1)");
  } else {
    o.beta1 = e.real("optimizer.beta1", o.beta1, half_open_unit, "in [0, 1)");
    o.beta2 = e.real("optimizer.beta2", o.beta2, half_open_unit, "in [0, 1)");
    o.eps = e.real("optimizer.eps", o.eps, positive, "> 0");
  }
  return o;
}

std::vector<int> default_milestones(int epochs) {
  return {static_cast<int>(std::lround(0.3 * epochs)), static_cast<int>(std::lround(0.6 * epochs)),
          static_cast<int>(std::lround(0.8 * epochs))};
}

sched::ScheduleSpec build_schedule(Entries& e, double base_lr, int epochs) {
  sched::ScheduleSpec s;
  s.base_lr = base_lr;
  const auto kind_text = e.take("schedule.kind").value_or("abel");
  Kind kind;
  try {
    kind = sched::kind_from_name(kind_text);
  } catch (const InputError&) {
    throw ConfigError("schedule.kind", "unknown value '" + kind_text +
                                           "', expected one of: constant, stepwise, cosine, linear, "
                                           "simple_decay, abel, plateau");
  }
  s.warmup_epochs = e.integer("schedule.warmup_epochs", 0, 0);
  const bool cifar = e.choice("schedule.preset", false, {{"default", false}, {"cifar", true}});
  const double default_factor = cifar ? 0.2 : 0.1;
  auto factor = [&] { return e.real("schedule.decay_factor", default_factor, open_unit, "in (0, 1)"); };
  switch (kind) {
    case Kind::kConstant:
      s.params = sched::ConstantParams{};
      break;
    case Kind::kStepWise: {
      const double f = factor();
      sched::StepWiseParams p;
      for (int m : e.int_list("schedule.milestones", default_milestones(epochs), 0)) {
        p.milestones.push_back({m, f});
      }
      s.params = p;
      break;
    }
    case Kind::kCosine:
      s.params = sched::CosineParams{
          epochs, e.choice("schedule.form", sched::CosineForm::kQuarter,
                           {{"quarter", sched::CosineForm::kQuarter}, {"half", sched::CosineForm::kHalf}})};
      break;
    case Kind::kLinear:
      s.params = sched::LinearParams{epochs, e.real("schedule.final_lr", 0.0, non_negative, ">= 0")};
      break;
    case Kind::kSimpleDecay: {
      sched::SimpleDecayParams p;
      p.total_epochs = epochs;
      p.factor = factor();
      p.decay_fraction = e.real("schedule.decay_fraction", p.decay_fraction, unit_upper, "in (0, 1]");
      s.params = p;
      break;
    }
    case Kind::kAbel: {
      sched::AbelParams p;
      p.total_epochs = epochs;
      p.decay_factor = factor();
      p.last_decay_fraction =
          e.real("schedule.last_decay_fraction", p.last_decay_fraction, unit_upper, "in (0, 1]");
      p.smoothing_window = e.integer("schedule.smoothing_window", p.smoothing_window, 1);
      p.min_history = e.integer("schedule.min_history", p.min_history, 3);
      s.params = p;
      break;
    }
    case Kind::kPlateau: {
      sched::PlateauParams p;
      p.factor = factor();
      p.patience = e.integer("schedule.patience", p.patience, 0);
      p.threshold = e.real("schedule.threshold", p.threshold, non_negative, ">= 0");
      p.mode = e.choice("schedule.mode", sched::PlateauMode::kMin,
                        {{"min", sched::PlateauMode::kMin}, {"max", sched::PlateauMode::kMax}});
      s.params = p;
      break;
    }
  }
  try {
    s.validate();
  } catch (const InputError& err) {
    throw ConfigError(kind == Kind::kStepWise ? "schedule.milestones" : "schedule", err.what());
  }
  return s;
}

ExperimentConfig build(Entries& e, const fs::path& base) {
  ExperimentConfig c;
  c.dataset = build_dataset(e, base);
  c.arch = build_arch(e);
  c.optimizer = build_optimizer(e);
  c.epochs = e.integer("train.epochs", c.epochs, 1);
  c.batch_size = e.integer("train.batch_size", c.batch_size, 1);
  const double lr = e.real("train.lr", 0.1, positive, "> 0");
  c.l2 = e.real("train.l2", 0.0, non_negative, ">= 0");
  if (e.has("train.clip_norm")) c.clip_norm = e.real("train.clip_norm", 0.0, positive, "> 0");
  c.label_smoothing = e.real("train.label_smoothing", 0.0, half_open_unit, "in [0, 1)");
  c.seed = e.unsigned_int("train.seed", 0);
  c.checkpoint_every = e.integer("train.checkpoint_every", 0, 0);
  c.full_eval_every = e.integer("train.full_eval_every", 0, 0);
  if (e.has("train.auto_stop")) {
    c.auto_stop = AutoStop{e.real("train.auto_stop", 0.0, non_negative, ">= 0")};
  }
  c.schedule = build_schedule(e, lr, c.epochs);
  c.log_dir = e.take("log.dir").value_or(c.log_dir);
  if (c.log_dir.empty()) throw ConfigError("log.dir", "must not be empty");
  e.reject_unused();
  validate_config(c);
  return c;
}

class Printer {
 public:
  void put(const char* key, const std::string& value) { out_ << key << " = " << value << '\n'; }
  void put(const char* key, double v) { put(key, format_real(v)); }
  void put(const char* key, int v) { put(key, std::to_string(v)); }
  void put(const char* key, std::uint64_t v) { put(key, std::to_string(v)); }
  void put(const char* key, bool v) { put(key, std::string(v ? "true" : "false")); }
  void put(const char* key, const char* v) { put(key, std::string(v)); }
  void put(const char* key, const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
    put(key, s);
  }
  void blank() { out_ << '\n'; }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

}  // namespace

void validate_config(const ExperimentConfig& c) {
  if (c.epochs < 1) throw ConfigError("train.epochs", "must be >= 1");
  if (c.batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (!(c.l2 >= 0.0)) throw ConfigError("train.l2", "must be >= 0");
  if (c.clip_norm && !(*c.clip_norm > 0.0)) throw ConfigError("train.clip_norm", "must be > 0");
  const auto* blobs = std::get_if<SyntheticBlobs>(&c.dataset);
  if (blobs && c.arch.kind == nn::ArchKind::kConvNet) {
    throw ConfigError("arch.kind", "convnet requires an image dataset");
  }
  if (std::holds_alternative<TwoSpirals>(c.dataset) && c.arch.kind == nn::ArchKind::kConvNet) {
    throw ConfigError("arch.kind", "convnet requires an image dataset");
  }
  try {
    c.schedule.validate();
  } catch (const InputError& err) {
    throw ConfigError("schedule", err.what());
  }
  const auto k = c.schedule.kind();
  const bool needs_budget = c.schedule.depends_on_budget() || k == Kind::kAbel;
  if (needs_budget) {
    const int t = std::visit(
        [](const auto& p) {
          if constexpr (requires { p.total_epochs; }) {
            return p.total_epochs;
          } else {
            return 0;
          }
        },
        c.schedule.params);
    if (t != c.epochs) throw ConfigError("train.epochs", "schedule budget differs from train.epochs");
  }
}

ExperimentConfig parse_config(std::string_view text, const std::string& base_dir) {
  auto entries = tokenize(text);
  return build(entries, fs::path(base_dir));
}

std::string print_config(const ExperimentConfig& c) {
  Printer p;
  std::visit(
      [&p](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, SyntheticBlobs>) {
          p.put("dataset.kind", "blobs");
          p.put("dataset.classes", d.classes);
          p.put("dataset.dim", d.dim);
          p.put("dataset.samples", d.samples);
          p.put("dataset.test_samples", d.test_samples);
          p.put("dataset.clusters_per_class", d.clusters_per_class);
          p.put("dataset.separation", d.separation);
          p.put("dataset.label_noise", d.label_noise);
          p.put("dataset.seed", d.seed);
        } else if constexpr (std::is_same_v<D, TwoSpirals>) {
          p.put("dataset.kind", "spirals");
          p.put("dataset.samples", d.samples);
          p.put("dataset.test_samples", d.test_samples);
          p.put("dataset.turns", d.turns);
          p.put("dataset.noise", d.noise);
          p.put("dataset.label_noise", d.label_noise);
          p.put("dataset.seed", d.seed);
        } else {
          p.put("dataset.kind", "idx");
          p.put("dataset.train_images", d.train_images);
          p.put("dataset.train_labels", d.train_labels);
          p.put("dataset.test_images", d.test_images);
          p.put("dataset.test_labels", d.test_labels);
          p.put("dataset.subsample", d.subsample);
        }
      },
      c.dataset);
  p.blank();
  const auto& a = c.arch;
  p.put("arch.kind", std::string(nn::arch_kind_name(a.kind)));
  p.put("arch.hidden", a.hidden);
  p.put("arch.activation", std::string(nn::activation_name(a.activation)));
  p.put("arch.normalize", a.normalize);
  p.put("arch.normalize_output", a.normalize_output);
  p.put("arch.bias", a.bias);
  p.put("arch.l2_on_bias", a.l2_on_bias);
  p.put("arch.init_scale", a.init_scale);
  if (a.kind == nn::ArchKind::kConvNet) {
    p.put("arch.conv_channels", a.conv_channels);
    p.put("arch.kernel", a.kernel);
  }
  p.blank();
  if (c.optimizer.kind == OptimizerKind::kMomentum) {
    p.put("optimizer.kind", "momentum");
    p.put("optimizer.momentum", c.optimizer.momentum);
  } else {
    p.put("optimizer.kind", "adam");
    p.put("optimizer.beta1", c.optimizer.beta1);
    p.put("optimizer.beta2", c.optimizer.beta2);
    p.put("optimizer.eps", c.optimizer.eps);
  }
  p.blank();
  const auto& s = c.schedule;
  p.put("schedule.kind", std::string(sched::kind_name(s.kind())));
  p.put("schedule.warmup_epochs", s.warmup_epochs);
  std::visit(
      [&p, &c](const auto& sp) {
        using P = std::decay_t<decltype(sp)>;
        if constexpr (std::is_same_v<P, sched::StepWiseParams>) {
          std::vector<int> epochs;
          for (const auto& m : sp.milestones) epochs.push_back(m.epoch);
          // Default milestones are left implicit so they follow train.epochs.
          if (epochs != default_milestones(c.epochs)) p.put("schedule.milestones", epochs);
          if (!sp.milestones.empty()) p.put("schedule.decay_factor", sp.milestones.front().factor);
        } else if constexpr (std::is_same_v<P, sched::CosineParams>) {
          p.put("schedule.form", sp.form == sched::CosineForm::kQuarter ? "quarter" : "half");
        } else if constexpr (std::is_same_v<P, sched::LinearParams>) {
          p.put("schedule.final_lr", sp.final_lr);
        } else if constexpr (std::is_same_v<P, sched::SimpleDecayParams>) {
          p.put("schedule.decay_factor", sp.factor);
          p.put("schedule.decay_fraction", sp.decay_fraction);
        } else if constexpr (std::is_same_v<P, sched::AbelParams>) {
          p.put("schedule.decay_factor", sp.decay_factor);
          p.put("schedule.last_decay_fraction", sp.last_decay_fraction);
          p.put("schedule.smoothing_window", sp.smoothing_window);
          p.put("schedule.min_history", sp.min_history);
        } else if constexpr (std::is_same_v<P, sched::PlateauParams>) {
          p.put("schedule.decay_factor", sp.factor);
          p.put("schedule.patience", sp.patience);
          p.put("schedule.threshold", sp.threshold);
          p.put("schedule.mode", sp.mode == sched::PlateauMode::kMin ? "min" : "max");
        }
      },
      s.params);
  p.blank();
  p.put("train.epochs", c.epochs);
  p.put("train.batch_size", c.batch_size);
  p.put("train.lr", s.base_lr);
  p.put("train.l2", c.l2);
  if (c.clip_norm) p.put("train.clip_norm", *c.clip_norm);
  p.put("train.label_smoothing", c.label_smoothing);
  p.put("train.seed", c.seed);
  p.put("train.checkpoint_every", c.checkpoint_every);
  p.put("train.full_eval_every", c.full_eval_every);
  if (c.auto_stop) p.put("train.auto_stop", c.auto_stop->min_improvement);
  p.blank();
  p.put("log.dir", c.log_dir);
  return p.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) { return fnv1a64(print_config(config)); }

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"base_lr", "train.lr"},
      {"decay_factor", "schedule.decay_factor"},
      {"sigma_w", "arch.init_scale"},
      {"lambda", "train.l2"},
      {"epochs", "train.epochs"},
      {"seed", "train.seed"},
  };
  std::string full(key);
  if (const auto it = aliases.find(key); it != aliases.end()) full = it->second;
  auto entries = tokenize(print_config(config));
  // Changing a kind drops the old kind's settings.
  static const std::map<std::string, std::set<std::string>> kinds = {
      {"dataset.kind", {"dataset.seed"}},
      {"arch.kind", {"arch.init_scale"}},
      {"optimizer.kind", {}},
      {"schedule.kind", {"schedule.warmup_epochs"}},
  };
  if (const auto it = kinds.find(full); it != kinds.end()) {
    entries.erase_section(full.substr(0, full.find('.')), it->second);
  }
  entries.set(full, std::string(value));
  config = build(entries, fs::path("/"));
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), fs::path(path).parent_path().string());
}

}  // namespace abel::harness
