#include "abel/harness/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "abel/analysis/bounce.hpp"
#include "abel/harness/config.hpp"
#include "abel/harness/records.hpp"
#include "abel/harness/run.hpp"
#include "abel/harness/sweep.hpp"
#include "abel/util/error.hpp"
#include "abel/util/text.hpp"

namespace abel::harness {

namespace fs = std::filesystem;

namespace {

int exit_for(const RunState& state) {
  if (state.status == RunStatus::kDiverged) {
    std::cerr << "diverged: " << state.diagnostic << '\n';
    return kExitDiverged;
  }
  const auto s = summarize(state);
  std::cout << "status " << run_status_name(s.status) << ", epochs " << s.epochs_run << ", final test error "
            << format_real(s.final_test_error) << ", best " << format_real(s.best_test_error) << " at epoch "
            << s.best_epoch << '\n';
  return kExitOk;
}

void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("", "--set expects key=value, got '" + s + "'");
    set_config_value(config, trim(std::string_view(s).substr(0, eq)), trim(std::string_view(s).substr(eq + 1)));
  }
}

int do_run(const std::string& path, const std::optional<std::string>& log_dir,
           const std::vector<std::string>& sets, bool verbose) {
  auto config = load_config_file(path);
  apply_overrides(config, sets);
  if (log_dir) config.log_dir = *log_dir;
  RunOptions opts;
  opts.quiet = !verbose;
  return exit_for(run_experiment(config, opts));
}

std::optional<std::string> existing_hash(const fs::path& log_dir) {
  std::ifstream in(log_dir / kMetaFile);
  if (!in) return std::nullopt;
  try {
    const auto meta = nlohmann::json::parse(in);
    return meta.at("config_hash").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

int do_resume(const std::string& path, const std::optional<int>& epochs, const std::optional<std::string>& log_dir,
              bool force, bool verbose) {
  RunState state = [&] {
    try {
      return load_checkpoint(path);
    } catch (const DecodeError& err) {
      throw ResumeRefused(std::string("checkpoint rejected: ") + err.what());
    }
  }();
  const fs::path target = log_dir ? fs::path(*log_dir) : fs::path(state.config.log_dir);
  if (!force) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(state.config)));
    const auto found = existing_hash(target);
    if (found && *found != hash && !epochs) {
      throw ResumeRefused("log directory " + target.string() +
                          " belongs to a different configuration (hash " + *found + "); pass --force to overwrite");
    }
  }
  ResumeOptions ro;
  ro.total_epochs = epochs;
  ro.log_dir = target.string();
  prepare_resume(state, ro);
  const auto data = make_dataset(state.config.dataset);
  RunOptions opts;
  opts.quiet = !verbose;
  continue_run(state, data, opts);
  return exit_for(state);
}

int do_sweep(const std::string& path, const std::string& grid, int jobs, const std::optional<std::string>& log_dir) {
  auto config = load_config_file(path);
  if (log_dir) config.log_dir = *log_dir;
  const auto axes = parse_grid(grid);
  const auto rows = run_sweep(config, axes, {jobs, true});
  const auto csv = sweep_summary_csv(axes, rows);
  fs::create_directories(config.log_dir);
  std::ofstream(fs::path(config.log_dir) / "sweep_summary.csv") << csv;
  std::cout << csv;
  return kExitOk;
}

analysis::NormTrace trace_from(const RunLog& log) {
  return norm_trace(log.layer_names, log.records, log.events);
}

int do_analyze(const std::string& dir, double noise_tol, int window, int top_k) {
  const auto log = read_run_log(dir);
  const auto trace = trace_from(log);
  std::vector<double> errors;
  for (const auto& r : log.records) errors.push_back(r.test_error);
  analysis::AnalysisOptions opts;
  opts.noise_tol = noise_tol;
  opts.drop_window = window;
  opts.top_k = static_cast<std::size_t>(std::max(1, top_k));
  const auto report = analysis::analyze(trace, errors, opts);
  const auto text = analysis::report_text(trace, report);
  std::ofstream(fs::path(dir) / "analysis.txt") << text;
  std::ofstream(fs::path(dir) / "analysis.csv") << analysis::report_csv(trace, report);
  std::cout << text;
  return kExitOk;
}

int do_plotdata(const std::string& dir, const std::string& what, const std::optional<std::string>& out_path) {
  const auto log = read_run_log(dir);
  std::string out;
  if (what == "lr") {
    out = "epoch,lr\n";
    for (const auto& r : log.records) out += std::to_string(r.epoch) + ',' + format_real(r.lr) + '\n';
  } else if (what == "error") {
    out = "epoch,test_error\n";
    for (const auto& r : log.records) out += std::to_string(r.epoch) + ',' + format_real(r.test_error) + '\n';
  } else {
    out = "epoch,wsq_total\n";
    for (const auto& r : log.records) out += std::to_string(r.epoch) + ',' + format_real(r.wsq_total) + '\n';
  }
  if (out_path) {
    std::ofstream(*out_path) << out;
  } else {
    std::cout << out;
  }
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Learning-rate schedule experiments with weight-norm tracking", "abel"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Print one line per epoch");

  std::string config_path, checkpoint, grid, log_path, what = "wsq";
  std::optional<std::string> log_dir, out_path;
  std::optional<int> epochs;
  std::vector<std::string> sets;
  int jobs = 1, window = analysis::kDefaultDropWindow, top_k = 3;
  double noise_tol = analysis::kDefaultNoiseTol;
  bool force = false;

  auto* run = app.add_subcommand("run", "Train one configuration");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--log-dir", log_dir, "Override log.dir");
  run->add_option("--set", sets, "Override a config key (key=value), repeatable");

  auto* resume = app.add_subcommand("resume", "Continue a run from a checkpoint");
  resume->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  resume->add_option("--epochs", epochs, "New total epoch budget")->check(CLI::PositiveNumber);
  resume->add_option("--log-dir", log_dir, "Write logs here instead of the original directory");
  resume->add_flag("--force", force, "Overwrite a log directory that belongs to another configuration");

  auto* sweep = app.add_subcommand("sweep", "Run a grid of configurations");
  sweep->add_option("template", config_path, "Template config file")->required();
  sweep->add_option("--grid", grid, "Grid, e.g. base_lr=0.1,0.2;decay_factor=0.5,0.1")->required();
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--log-dir", log_dir, "Override log.dir");

  auto* analyze = app.add_subcommand("analyze", "Bounce analysis of a run log directory");
  analyze->add_option("log", log_path, "Log directory")->required();
  analyze->add_option("--noise-tol", noise_tol, "Relative noise tolerance")->check(CLI::NonNegativeNumber);
  analyze->add_option("--window", window, "Post-decay window in epochs")->check(CLI::PositiveNumber);
  analyze->add_option("--top-k", top_k, "Number of layers to rank")->check(CLI::PositiveNumber);

  auto* plot = app.add_subcommand("plotdata", "Two-column CSV of one logged quantity");
  plot->add_option("log", log_path, "Log directory")->required();
  plot->add_option("--what", what, "lr, error or wsq")->check(CLI::IsMember({"lr", "error", "wsq"}));
  plot->add_option("--out", out_path, "Output file (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return do_run(config_path, log_dir, sets, verbose);
    if (*resume) return do_resume(checkpoint, epochs, log_dir, force, verbose);
    if (*sweep) return do_sweep(config_path, grid, jobs, log_dir);
    if (*analyze) return do_analyze(log_path, noise_tol, window, top_k);
    if (*plot) return do_plotdata(log_path, what, out_path);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitConfig;
  } catch (const ResumeRefused& err) {
    std::cerr << "resume refused: " << err.what() << '\n';
    return kExitResumeRefused;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace abel::harness
