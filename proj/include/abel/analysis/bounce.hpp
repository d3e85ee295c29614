#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abel::analysis {

inline constexpr double kDefaultNoiseTol = 0.005;
inline constexpr int kMinSegmentLength = 5;
inline constexpr int kDefaultDropWindow = 5;

// Squared weight norm per epoch, optionally with per-layer series and the
// epochs at whose end the learning rate was decayed (the new rate applies from
// the next epoch).
struct NormTrace {
  std::vector<int> epochs;
  std::vector<double> wsq;
  std::vector<std::string> layer_names;
  std::vector<std::vector<double>> layers;  // layers[j][i] is layer j at epochs[i]
  std::vector<int> decay_epochs;

  // Throws InputError unless epochs strictly increase, wsq > 0 and all series
  // have matching lengths.
  void validate() const;
};

// Positions (indices into a single fixed-lr series) of bounces: a window
// [a, b] around m with m - a >= 2 and b - m >= 2 where the series is
// non-increasing on [a, m] and non-decreasing on [m, b], each up to steps of
// noise_tol * v[m] against the direction, and the total drop v[a] - v[m] and
// rise v[b] - v[m] both exceed noise_tol * v[m]. Each bounce is reported at the
// first minimum of its window. Series shorter than kMinSegmentLength yield
// nothing. Throws InputError for negative noise_tol.
std::vector<std::size_t> bounce_positions(std::span<const double> values, double noise_tol);

enum class SegmentVerdict : std::uint8_t { kDecreasing, kIncreasing, kBounced, kFlat, kInsufficient };
std::string_view segment_verdict_name(SegmentVerdict v);

// Fixed-lr piece of a trace: indices [begin, end).
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  SegmentVerdict verdict = SegmentVerdict::kFlat;
  std::vector<int> bounce_epochs;
};

// Splits at decay epochs: a decay at epoch d closes the segment that contains d.
std::vector<Segment> segments(const NormTrace& trace, double noise_tol = kDefaultNoiseTol);

// Bounce epochs over all segments.
std::vector<int> detect_bounce(const NormTrace& trace, double noise_tol = kDefaultNoiseTol);

enum class TraceClass : std::uint8_t { kBouncing, kMonotoneIncreasing, kMonotoneDecreasing, kFlat };
std::string_view trace_class_name(TraceClass c);

// Monotone classes tolerate per-epoch steps of noise_tol * v against the trend
// and need a net change above noise_tol * v[0].
TraceClass classify_values(std::span<const double> values, double noise_tol = kDefaultNoiseTol);
TraceClass classify_trace(const NormTrace& trace, double noise_tol = kDefaultNoiseTol);

enum class Alignment : std::uint8_t { kAfterBounce, kBeforeBounce, kNoBounceSegment };
std::string_view alignment_name(Alignment a);

struct DecayAlignment {
  int decay_epoch = 0;
  Alignment verdict = Alignment::kNoBounceSegment;
  std::optional<int> epochs_since_bounce;  // from the last bounce before the decay
};

// after_bounce: the decayed segment has a bounce before the decay epoch.
// before_bounce: it has none, but a later segment does.
// no_bounce_segment: otherwise.
std::vector<DecayAlignment> decay_alignment(const NormTrace& trace, double noise_tol = kDefaultNoiseTol);

struct DecayDrop {
  int decay_epoch = 0;
  double drop = 0.0;  // min error in the window before minus min error in the window after
  bool partial = false;  // a window ran past either end of the series
};

struct DropReport {
  std::vector<DecayDrop> drops;
  // Every drop is at most the previous one. Reported, never enforced.
  bool monotone_drops = true;
};

// Windows: epochs (d - window, d] before and (d, d + window] after.
// Throws InputError for window < 1 or mismatched series.
DropReport post_decay_drops(std::span<const int> epochs, std::span<const double> errors,
                            std::span<const int> decay_epochs, int window = kDefaultDropWindow);

struct LayerShare {
  std::string name;
  double max_wsq = 0.0;
  std::vector<double> share;  // layer / total, per epoch
  TraceClass trace_class = TraceClass::kFlat;
  bool matches_total = false;
};

// Top-k layers by max wsq over training (all layers when fewer than k). The
// total is the sum over all layers.
std::vector<LayerShare> top_layer_contribution(const NormTrace& trace, std::size_t k,
                                               double noise_tol = kDefaultNoiseTol);

// Deciles (10%, ..., 90%) of the per-epoch relative growth (v[i+1] - v[i]) / v[i].
std::vector<double> growth_rate_deciles(std::span<const double> values);

struct AnalysisReport {
  TraceClass trace_class = TraceClass::kFlat;
  std::vector<Segment> segments;
  std::vector<int> bounce_epochs;
  std::vector<DecayAlignment> alignments;
  DropReport drops;
  std::vector<LayerShare> top_layers;
  std::vector<double> growth_deciles;
};

struct AnalysisOptions {
  double noise_tol = kDefaultNoiseTol;
  int drop_window = kDefaultDropWindow;
  std::size_t top_k = 3;
};

// errors may be empty (no drop analysis).
AnalysisReport analyze(const NormTrace& trace, std::span<const double> errors,
                       const AnalysisOptions& options = {});

// Human-readable summary and a flat CSV (section,key,value).
std::string report_text(const NormTrace& trace, const AnalysisReport& report);
std::string report_csv(const NormTrace& trace, const AnalysisReport& report);

}  // namespace abel::analysis
