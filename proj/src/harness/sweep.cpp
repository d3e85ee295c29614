#include "abel/harness/sweep.hpp"

#include <atomic>
#include <filesystem>
#include <thread>

#include "abel/analysis/bounce.hpp"
#include "abel/util/text.hpp"

namespace abel::harness {

std::vector<GridAxis> parse_grid(std::string_view spec) {
  std::vector<GridAxis> axes;
  for (auto part : split(spec, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) throw ConfigError("", "grid axis '" + std::string(part) + "' lacks '='");
    GridAxis axis;
    axis.key = std::string(trim(part.substr(0, eq)));
    for (auto v : split(part.substr(eq + 1), ',')) {
      if (v.empty()) throw ConfigError(axis.key, "empty grid value");
      axis.values.emplace_back(v);
    }
    if (axis.key.empty()) throw ConfigError("", "grid axis without a key");
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw ConfigError("", "empty grid");
  return axes;
}

std::vector<std::vector<std::pair<std::string, std::string>>> grid_points(const std::vector<GridAxis>& axes) {
  std::vector<std::vector<std::pair<std::string, std::string>>> points{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& p : points) {
      for (const auto& v : axis.values) {
        auto q = p;
        q.emplace_back(axis.key, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

namespace {

SweepRow run_point(const ExperimentConfig& tmpl, std::size_t index,
                   const std::vector<std::pair<std::string, std::string>>& assignment, bool write_logs) {
  SweepRow row;
  row.index = index;
  row.assignment = assignment;
  char name[32];
  std::snprintf(name, sizeof name, "point_%03zu", index);
  row.log_dir = (std::filesystem::path(tmpl.log_dir) / name).string();
  try {
    auto config = tmpl;
    for (const auto& [k, v] : assignment) set_config_value(config, k, v);
    config.log_dir = row.log_dir;
    RunOptions opts;
    opts.write_logs = write_logs;
    const auto state = run_experiment(config, opts);
    row.summary = summarize(state);
    row.status = std::string(run_status_name(state.status));
    row.error = state.diagnostic;
    if (!state.records.empty()) {
      const auto trace = norm_trace({}, state.records, state.events);
      row.trace_class = std::string(analysis::trace_class_name(analysis::classify_trace(trace)));
    }
  } catch (const std::exception& err) {
    row.status = "failed";
    row.error = err.what();
  }
  return row;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& tmpl, const std::vector<GridAxis>& axes,
                                const SweepOptions& options) {
  const auto points = grid_points(axes);
  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      rows[i] = run_point(tmpl, i, points[i], options.write_logs);
    }
  };
  const auto jobs = static_cast<std::size_t>(std::max(1, options.jobs));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < std::min(jobs, points.size()); ++j) pool.emplace_back(worker);
  }
  return rows;
}

std::string sweep_summary_csv(const std::vector<GridAxis>& axes, const std::vector<SweepRow>& rows) {
  std::string out = "index";
  for (const auto& a : axes) out += ',' + a.key;
  out +=
      ",status,epochs_run,final_test_error,best_test_error,best_epoch,final_wsq,first_decay_epoch,"
      "decay_epochs,trace_class,error\n";
  for (const auto& r : rows) {
    out += std::to_string(r.index);
    for (const auto& [k, v] : r.assignment) out += ',' + csv_cell(v);
    const auto& s = r.summary;
    const bool ran = s.epochs_run > 0;
    out += ',' + r.status + ',' + std::to_string(s.epochs_run);
    out += ',' + (ran ? format_real(s.final_test_error) : "");
    out += ',' + (ran ? format_real(s.best_test_error) : "");
    out += ',' + (ran ? std::to_string(s.best_epoch) : "");
    out += ',' + (ran ? format_real(s.final_wsq) : "");
    out += ',' + (s.decay_epochs.empty() ? "" : std::to_string(s.decay_epochs.front()));
    std::string decays;
    for (int d : s.decay_epochs) decays += (decays.empty() ? "" : " ") + std::to_string(d);
    out += ',' + decays + ',' + r.trace_class + ',' + csv_cell(r.error) + '\n';
  }
  return out;
}

}  // namespace abel::harness
