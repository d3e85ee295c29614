#include "abel/harness/records.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "abel/harness/dataset.hpp"
#include "abel/util/text.hpp"

namespace abel::harness {

namespace fs = std::filesystem;

std::string metrics_header() {
  return "epoch,lr,train_loss,train_error,test_error,wsq_total,wsq_l2_only,gw_total\n";
}

std::string metrics_row(const EpochRecord& r) {
  std::string s = std::to_string(r.epoch);
  for (double v : {r.lr, r.train_loss, r.train_error, r.test_error, r.wsq_total, r.wsq_l2_only}) {
    s += ',' + format_real(v);
  }
  s += ',';
  if (r.gw_total) s += format_real(*r.gw_total);
  s += '\n';
  return s;
}

std::string layers_rows(const EpochRecord& r, const std::vector<std::string>& layer_names) {
  std::string s;
  for (std::size_t i = 0; i < r.per_layer.size() && i < layer_names.size(); ++i) {
    s += std::to_string(r.epoch) + ',' + layer_names[i] + ',' + format_real(r.per_layer[i]) + '\n';
  }
  return s;
}

std::string event_row(const sched::LrEvent& e) {
  return std::to_string(e.epoch) + ',' + format_real(e.old_lr) + ',' + format_real(e.new_lr) + ',' +
         std::string(sched::trigger_name(e.trigger)) + '\n';
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header,
                                               bool required) {
  std::ifstream in(path);
  if (!in) {
    if (required) throw LoadError("cannot open " + path.string());
    return {};
  }
  std::string line;
  if (!std::getline(in, line) || line + '\n' != header) {
    throw LoadError("unexpected header in " + path.string());
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (auto c : split(line, ',')) cells.emplace_back(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double real_cell(const std::string& cell, const fs::path& path) {
  const auto v = parse_real(cell);
  if (!v) throw LoadError("malformed number '" + cell + "' in " + path.string());
  return *v;
}

int int_cell(const std::string& cell, const fs::path& path) {
  const auto v = parse_int(cell);
  if (!v) throw LoadError("malformed integer '" + cell + "' in " + path.string());
  return static_cast<int>(*v);
}

sched::Trigger trigger_from(const std::string& name, const fs::path& path) {
  for (auto t : {sched::Trigger::kMilestone, sched::Trigger::kBounce, sched::Trigger::kFinalDecay,
                 sched::Trigger::kPlateau}) {
    if (sched::trigger_name(t) == name) return t;
  }
  throw LoadError("unknown trigger '" + name + "' in " + path.string());
}

}  // namespace

RunLog read_run_log(const fs::path& dir) {
  RunLog log;
  const auto metrics_path = dir / kMetricsFile;
  std::map<int, std::size_t> index;
  for (const auto& row : read_csv(metrics_path, metrics_header(), true)) {
    if (row.size() != 8) throw LoadError("expected 8 columns in " + metrics_path.string());
    EpochRecord r;
    r.epoch = int_cell(row[0], metrics_path);
    r.lr = real_cell(row[1], metrics_path);
    r.train_loss = real_cell(row[2], metrics_path);
    r.train_error = real_cell(row[3], metrics_path);
    r.test_error = real_cell(row[4], metrics_path);
    r.wsq_total = real_cell(row[5], metrics_path);
    r.wsq_l2_only = real_cell(row[6], metrics_path);
    if (!row[7].empty()) r.gw_total = real_cell(row[7], metrics_path);
    if (!log.records.empty() && r.epoch <= log.records.back().epoch) {
      throw LoadError("epochs not strictly increasing in " + metrics_path.string());
    }
    index[r.epoch] = log.records.size();
    log.records.push_back(r);
  }
  const auto layers_path = dir / kLayersFile;
  std::map<std::string, std::size_t> layer_index;
  for (const auto& row : read_csv(layers_path, "epoch,layer,wsq\n", false)) {
    if (row.size() != 3) throw LoadError("expected 3 columns in " + layers_path.string());
    const int epoch = int_cell(row[0], layers_path);
    auto [it, inserted] = layer_index.emplace(row[1], log.layer_names.size());
    if (inserted) log.layer_names.push_back(row[1]);
    const auto rec = index.find(epoch);
    if (rec == index.end()) throw LoadError("layer row for unknown epoch in " + layers_path.string());
    auto& per_layer = log.records[rec->second].per_layer;
    if (per_layer.size() != it->second) throw LoadError("layer rows out of order in " + layers_path.string());
    per_layer.push_back(real_cell(row[2], layers_path));
  }
  const auto events_path = dir / kEventsFile;
  for (const auto& row : read_csv(events_path, "epoch,old_lr,new_lr,trigger\n", false)) {
    if (row.size() != 4) throw LoadError("expected 4 columns in " + events_path.string());
    log.events.push_back({int_cell(row[0], events_path), real_cell(row[1], events_path),
                          real_cell(row[2], events_path), trigger_from(row[3], events_path)});
  }
  const auto timing_path = dir / kTimingFile;
  for (const auto& row : read_csv(timing_path, "epoch,wall_ms\n", false)) {
    if (row.size() != 2) throw LoadError("expected 2 columns in " + timing_path.string());
    const auto rec = index.find(int_cell(row[0], timing_path));
    if (rec != index.end()) log.records[rec->second].wall_ms = real_cell(row[1], timing_path);
  }
  return log;
}

analysis::NormTrace norm_trace(const std::vector<std::string>& layer_names,
                               const std::vector<EpochRecord>& records,
                               const std::vector<sched::LrEvent>& events) {
  analysis::NormTrace t;
  t.layer_names = layer_names;
  t.layers.assign(layer_names.size(), {});
  for (const auto& r : records) {
    t.epochs.push_back(r.epoch);
    t.wsq.push_back(r.wsq_total);
    for (std::size_t j = 0; j < t.layers.size(); ++j) {
      t.layers[j].push_back(j < r.per_layer.size() ? r.per_layer[j] : 0.0);
    }
  }
  for (const auto& e : events) t.decay_epochs.push_back(e.epoch);
  return t;
}

}  // namespace abel::harness
