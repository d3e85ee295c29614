#include "abel/analysis/bounce.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "abel/util/error.hpp"
#include "abel/util/text.hpp"

namespace abel::analysis {

void NormTrace::validate() const {
  if (wsq.size() != epochs.size()) throw InputError("trace epochs and wsq differ in length");
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (i > 0 && epochs[i] <= epochs[i - 1]) throw InputError("trace epochs must strictly increase");
    if (!(wsq[i] > 0.0) || !std::isfinite(wsq[i])) throw InputError("trace wsq must be positive and finite");
  }
  if (layers.size() != layer_names.size()) throw InputError("layer names and series differ in count");
  for (const auto& l : layers) {
    if (l.size() != epochs.size()) throw InputError("layer series length differs from the trace");
  }
  if (!std::is_sorted(decay_epochs.begin(), decay_epochs.end())) {
    throw InputError("decay epochs must be sorted");
  }
}

std::vector<std::size_t> bounce_positions(std::span<const double> v, double noise_tol) {
  if (!(noise_tol >= 0.0)) throw InputError("noise_tol must be >= 0");
  const std::size_t n = v.size();
  std::vector<std::size_t> found;
  if (n < static_cast<std::size_t>(kMinSegmentLength)) return found;
  for (std::size_t m = 2; m + 2 < n; ++m) {
    const double slack = noise_tol * v[m];
    std::size_t a = m;
    double drop = -INFINITY;
    while (a > 0 && v[a] <= v[a - 1] + slack) {
      --a;
      if (m - a >= 2) drop = std::max(drop, v[a] - v[m]);
    }
    if (m - a < 2 || !(drop > slack)) continue;
    std::size_t b = m;
    double rise = -INFINITY;
    while (b + 1 < n && v[b + 1] >= v[b] - slack) {
      ++b;
      if (b - m >= 2) rise = std::max(rise, v[b] - v[m]);
    }
    if (b - m < 2 || !(rise > slack)) continue;
    const auto lowest = std::min_element(v.begin() + static_cast<std::ptrdiff_t>(a),
                                         v.begin() + static_cast<std::ptrdiff_t>(b) + 1);
    found.push_back(static_cast<std::size_t>(lowest - v.begin()));
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  // Reports with no peak between them that clears the tolerance are one
  // bottom seen through different windows; keep the lower.
  std::vector<std::size_t> merged;
  for (auto p : found) {
    if (!merged.empty()) {
      const auto q = merged.back();
      const double peak = *std::max_element(v.begin() + static_cast<std::ptrdiff_t>(q),
                                            v.begin() + static_cast<std::ptrdiff_t>(p) + 1);
      if (peak <= std::max(v[p], v[q]) + noise_tol * std::min(v[p], v[q])) {
        if (v[p] < v[q]) merged.back() = p;
        continue;
      }
    }
    merged.push_back(p);
  }
  return merged;
}

std::string_view segment_verdict_name(SegmentVerdict v) {
  switch (v) {
    case SegmentVerdict::kDecreasing: return "decreasing";
    case SegmentVerdict::kIncreasing: return "increasing";
    case SegmentVerdict::kBounced: return "bounced";
    case SegmentVerdict::kFlat: return "flat";
    case SegmentVerdict::kInsufficient: return "insufficient";
  }
  return "unknown";
}

std::string_view trace_class_name(TraceClass c) {
  switch (c) {
    case TraceClass::kBouncing: return "bouncing";
    case TraceClass::kMonotoneIncreasing: return "monotone_increasing";
    case TraceClass::kMonotoneDecreasing: return "monotone_decreasing";
    case TraceClass::kFlat: return "flat";
  }
  return "unknown";
}

std::string_view alignment_name(Alignment a) {
  switch (a) {
    case Alignment::kAfterBounce: return "after_bounce";
    case Alignment::kBeforeBounce: return "before_bounce";
    case Alignment::kNoBounceSegment: return "no_bounce_segment";
  }
  return "unknown";
}

namespace {

TraceClass monotone_class(std::span<const double> v, double noise_tol) {
  if (v.size() < 2) return TraceClass::kFlat;
  bool up = true, down = true;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double slack = noise_tol * std::abs(v[i]);
    if (v[i + 1] < v[i] - slack) up = false;
    if (v[i + 1] > v[i] + slack) down = false;
  }
  const double net = v.back() - v.front();
  const double needed = noise_tol * std::abs(v.front());
  if (up && net > needed) return TraceClass::kMonotoneIncreasing;
  if (down && -net > needed) return TraceClass::kMonotoneDecreasing;
  return TraceClass::kFlat;
}

std::vector<Segment> split(const std::vector<int>& epochs, std::span<const double> values,
                           const std::vector<int>& decays, double noise_tol) {
  std::vector<Segment> out;
  std::size_t begin = 0;
  std::size_t next_decay = 0;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    while (next_decay < decays.size() && decays[next_decay] < epochs[i]) ++next_decay;
    const bool closes = next_decay < decays.size() && decays[next_decay] == epochs[i];
    if (closes || i + 1 == epochs.size()) {
      out.push_back({begin, i + 1, SegmentVerdict::kFlat, {}});
      begin = i + 1;
    }
  }
  for (auto& s : out) {
    const auto piece = values.subspan(s.begin, s.end - s.begin);
    if (piece.size() < static_cast<std::size_t>(kMinSegmentLength)) {
      s.verdict = SegmentVerdict::kInsufficient;
      continue;
    }
    for (auto p : bounce_positions(piece, noise_tol)) s.bounce_epochs.push_back(epochs[s.begin + p]);
    if (!s.bounce_epochs.empty()) {
      s.verdict = SegmentVerdict::kBounced;
    } else {
      switch (monotone_class(piece, noise_tol)) {
        case TraceClass::kMonotoneIncreasing: s.verdict = SegmentVerdict::kIncreasing; break;
        case TraceClass::kMonotoneDecreasing: s.verdict = SegmentVerdict::kDecreasing; break;
        default: s.verdict = SegmentVerdict::kFlat; break;
      }
    }
  }
  return out;
}

TraceClass classify_series(const std::vector<int>& epochs, std::span<const double> values,
                           const std::vector<int>& decays, double noise_tol) {
  for (const auto& s : split(epochs, values, decays, noise_tol)) {
    if (s.verdict == SegmentVerdict::kBounced) return TraceClass::kBouncing;
  }
  return monotone_class(values, noise_tol);
}

}  // namespace

std::vector<Segment> segments(const NormTrace& trace, double noise_tol) {
  trace.validate();
  return split(trace.epochs, trace.wsq, trace.decay_epochs, noise_tol);
}

std::vector<int> detect_bounce(const NormTrace& trace, double noise_tol) {
  std::vector<int> out;
  for (const auto& s : segments(trace, noise_tol)) {
    out.insert(out.end(), s.bounce_epochs.begin(), s.bounce_epochs.end());
  }
  return out;
}

TraceClass classify_values(std::span<const double> values, double noise_tol) {
  if (!(noise_tol >= 0.0)) throw InputError("noise_tol must be >= 0");
  if (!bounce_positions(values, noise_tol).empty()) return TraceClass::kBouncing;
  return monotone_class(values, noise_tol);
}

TraceClass classify_trace(const NormTrace& trace, double noise_tol) {
  trace.validate();
  return classify_series(trace.epochs, trace.wsq, trace.decay_epochs, noise_tol);
}

std::vector<DecayAlignment> decay_alignment(const NormTrace& trace, double noise_tol) {
  const auto segs = segments(trace, noise_tol);
  std::vector<DecayAlignment> out;
  for (int d : trace.decay_epochs) {
    DecayAlignment a;
    a.decay_epoch = d;
    std::size_t k = segs.size();
    for (std::size_t j = 0; j < segs.size(); ++j) {
      if (trace.epochs[segs[j].begin] <= d && d <= trace.epochs[segs[j].end - 1]) k = j;
    }
    if (k < segs.size()) {
      for (int b : segs[k].bounce_epochs) {
        if (b < d) a.epochs_since_bounce = d - b;
      }
      if (a.epochs_since_bounce) {
        a.verdict = Alignment::kAfterBounce;
      } else {
        for (std::size_t j = k + 1; j < segs.size(); ++j) {
          if (!segs[j].bounce_epochs.empty()) a.verdict = Alignment::kBeforeBounce;
        }
      }
    }
    out.push_back(a);
  }
  return out;
}

DropReport post_decay_drops(std::span<const int> epochs, std::span<const double> errors,
                            std::span<const int> decay_epochs, int window) {
  if (window < 1) throw InputError("window must be >= 1");
  if (epochs.size() != errors.size()) throw InputError("epochs and errors differ in length");
  DropReport report;
  if (epochs.empty()) return report;
  for (int d : decay_epochs) {
    double before = INFINITY, after = INFINITY;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      if (epochs[i] > d - window && epochs[i] <= d) before = std::min(before, errors[i]);
      if (epochs[i] > d && epochs[i] <= d + window) after = std::min(after, errors[i]);
    }
    DecayDrop drop;
    drop.decay_epoch = d;
    drop.partial = d - window + 1 < epochs.front() || d + window > epochs.back();
    drop.drop = std::isfinite(before) && std::isfinite(after) ? before - after : 0.0;
    report.drops.push_back(drop);
  }
  for (std::size_t i = 1; i < report.drops.size(); ++i) {
    if (report.drops[i].drop > report.drops[i - 1].drop) report.monotone_drops = false;
  }
  return report;
}

std::vector<LayerShare> top_layer_contribution(const NormTrace& trace, std::size_t k, double noise_tol) {
  if (trace.layers.empty()) throw InputError("trace has no per-layer series");
  const std::size_t n = trace.epochs.size();
  std::vector<double> total(n, 0.0);
  for (const auto& l : trace.layers) {
    for (std::size_t i = 0; i < n; ++i) total[i] += l[i];
  }
  const auto total_class = classify_series(trace.epochs, total, trace.decay_epochs, noise_tol);
  std::vector<LayerShare> all;
  for (std::size_t j = 0; j < trace.layers.size(); ++j) {
    const auto& l = trace.layers[j];
    LayerShare s;
    s.name = trace.layer_names[j];
    s.max_wsq = l.empty() ? 0.0 : *std::max_element(l.begin(), l.end());
    for (std::size_t i = 0; i < n; ++i) s.share.push_back(total[i] > 0.0 ? l[i] / total[i] : 0.0);
    s.trace_class = classify_series(trace.epochs, l, trace.decay_epochs, noise_tol);
    s.matches_total = s.trace_class == total_class;
    all.push_back(std::move(s));
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const LayerShare& a, const LayerShare& b) { return a.max_wsq > b.max_wsq; });
  all.resize(std::min(k, all.size()));
  return all;
}

std::vector<double> growth_rate_deciles(std::span<const double> v) {
  std::vector<double> rates;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (v[i] != 0.0) rates.push_back((v[i + 1] - v[i]) / v[i]);
  }
  std::vector<double> out;
  if (rates.empty()) return out;
  std::sort(rates.begin(), rates.end());
  for (int q = 1; q <= 9; ++q) {
    // Nearest rank.
    const auto rank = static_cast<std::size_t>(std::ceil(q / 10.0 * static_cast<double>(rates.size())));
    out.push_back(rates[std::max<std::size_t>(rank, 1) - 1]);
  }
  return out;
}

AnalysisReport analyze(const NormTrace& trace, std::span<const double> errors, const AnalysisOptions& o) {
  AnalysisReport r;
  r.segments = segments(trace, o.noise_tol);
  for (const auto& s : r.segments) {
    r.bounce_epochs.insert(r.bounce_epochs.end(), s.bounce_epochs.begin(), s.bounce_epochs.end());
  }
  r.trace_class = classify_trace(trace, o.noise_tol);
  r.alignments = decay_alignment(trace, o.noise_tol);
  if (!errors.empty()) r.drops = post_decay_drops(trace.epochs, errors, trace.decay_epochs, o.drop_window);
  if (!trace.layers.empty()) r.top_layers = top_layer_contribution(trace, o.top_k, o.noise_tol);
  r.growth_deciles = growth_rate_deciles(trace.wsq);
  return r;
}

namespace {

std::string join_ints(const std::vector<int>& v, char sep) {
  std::string s;
  for (int x : v) s += (s.empty() ? "" : std::string(1, sep)) + std::to_string(x);
  return s;
}

}  // namespace

std::string report_text(const NormTrace& trace, const AnalysisReport& r) {
  std::ostringstream out;
  out << "classification: " << trace_class_name(r.trace_class) << '\n';
  out << "bounce epochs: " << (r.bounce_epochs.empty() ? "none" : join_ints(r.bounce_epochs, ' ')) << '\n';
  out << "segments:\n";
  for (const auto& s : r.segments) {
    out << "  epochs " << trace.epochs[s.begin] << "-" << trace.epochs[s.end - 1] << ": "
        << segment_verdict_name(s.verdict);
    if (!s.bounce_epochs.empty()) out << " (bounce at " << join_ints(s.bounce_epochs, ' ') << ")";
    out << '\n';
  }
  if (!r.alignments.empty()) {
    out << "decays:\n";
    for (std::size_t i = 0; i < r.alignments.size(); ++i) {
      const auto& a = r.alignments[i];
      out << "  epoch " << a.decay_epoch << ": " << alignment_name(a.verdict);
      if (a.epochs_since_bounce) out << ", " << *a.epochs_since_bounce << " epochs after bounce";
      if (i < r.drops.drops.size()) {
        const auto& d = r.drops.drops[i];
        out << ", error drop " << format_real(d.drop) << (d.partial ? " (partial window)" : "");
      }
      out << '\n';
    }
    if (!r.drops.drops.empty()) {
      out << "drops non-increasing: " << (r.drops.monotone_drops ? "yes" : "no") << '\n';
    }
  }
  if (!r.top_layers.empty()) {
    out << "top layers by max wsq:\n";
    for (const auto& l : r.top_layers) {
      out << "  " << l.name << ": final share " << format_real(l.share.empty() ? 0.0 : l.share.back())
          << ", " << trace_class_name(l.trace_class) << (l.matches_total ? " (matches total)" : "") << '\n';
    }
  }
  if (!r.growth_deciles.empty()) {
    out << "relative growth deciles:";
    for (double d : r.growth_deciles) out << ' ' << format_real(d);
    out << '\n';
  }
  return out.str();
}

std::string report_csv(const NormTrace& trace, const AnalysisReport& r) {
  std::ostringstream out;
  out << "section,key,value\n";
  out << "trace,classification," << trace_class_name(r.trace_class) << '\n';
  out << "trace,bounce_epochs," << join_ints(r.bounce_epochs, ' ') << '\n';
  for (const auto& s : r.segments) {
    out << "segment," << trace.epochs[s.begin] << '-' << trace.epochs[s.end - 1] << ','
        << segment_verdict_name(s.verdict) << '\n';
  }
  for (std::size_t i = 0; i < r.alignments.size(); ++i) {
    const auto& a = r.alignments[i];
    out << "decay," << a.decay_epoch << ',' << alignment_name(a.verdict) << '\n';
    if (a.epochs_since_bounce) out << "decay_since_bounce," << a.decay_epoch << ',' << *a.epochs_since_bounce << '\n';
    if (i < r.drops.drops.size()) {
      out << "decay_drop," << a.decay_epoch << ',' << format_real(r.drops.drops[i].drop) << '\n';
      out << "decay_partial," << a.decay_epoch << ',' << (r.drops.drops[i].partial ? "true" : "false") << '\n';
    }
  }
  if (!r.drops.drops.empty()) out << "drops,monotone," << (r.drops.monotone_drops ? "true" : "false") << '\n';
  for (const auto& l : r.top_layers) {
    out << "layer_final_share," << l.name << ',' << format_real(l.share.empty() ? 0.0 : l.share.back()) << '\n';
    out << "layer_class," << l.name << ',' << trace_class_name(l.trace_class) << '\n';
  }
  for (std::size_t i = 0; i < r.growth_deciles.size(); ++i) {
    out << "growth_decile," << (i + 1) * 10 << ',' << format_real(r.growth_deciles[i]) << '\n';
  }
  return out.str();
}

}  // namespace abel::analysis
