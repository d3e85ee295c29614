#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "abel/analysis/bounce.hpp"
#include "abel/sched/abel.hpp"
#include "abel/util/error.hpp"
#include "doctest.h"
#include "support/bounce_oracle.hpp"

using namespace abel::analysis;

namespace {

NormTrace trace_of(std::vector<double> wsq, std::vector<int> decays = {}) {
  NormTrace t;
  t.epochs.resize(wsq.size());
  std::iota(t.epochs.begin(), t.epochs.end(), 1);
  t.wsq = std::move(wsq);
  t.decay_epochs = std::move(decays);
  return t;
}

}  // namespace

TEST_CASE("V-shaped segment bounces at its minimum") {
  const auto t = trace_of({10, 8, 6, 7, 8.5});
  CHECK(detect_bounce(t, 0.0) == std::vector<int>{3});
  CHECK(classify_trace(t, 0.0) == TraceClass::kBouncing);
}

TEST_CASE("monotone and constant traces") {
  CHECK(detect_bounce(trace_of({1, 2, 3, 4, 5, 6}), 0.0).empty());
  CHECK(classify_trace(trace_of({1, 2, 3, 4, 5, 6})) == TraceClass::kMonotoneIncreasing);
  CHECK(classify_trace(trace_of({6, 5, 4, 3, 2, 1})) == TraceClass::kMonotoneDecreasing);
  CHECK(classify_trace(trace_of(std::vector<double>(20, 3.0))) == TraceClass::kFlat);
  CHECK(classify_trace(trace_of(std::vector<double>(20, 3.0)), 0.0) == TraceClass::kFlat);
}

TEST_CASE("flanks need two epochs and a net change") {
  CHECK(detect_bounce(trace_of({10, 6, 7, 8, 9}), 0.0).empty());  // one epoch down
  CHECK(detect_bounce(trace_of({10, 8, 6, 7, 6}), 0.0).empty());  // one epoch up
  CHECK(detect_bounce(trace_of({6, 6, 6, 7, 8}), 0.0).empty());   // no drop
  // Flat bottom: reported at its first epoch.
  CHECK(detect_bounce(trace_of({3, 2, 2, 2, 3, 4}), 0.0) == std::vector<int>{2});
}

TEST_CASE("small wiggles are absorbed by the tolerance") {
  const std::vector<double> clean = {10, 9, 8, 7, 6, 6.5, 7, 7.5, 8};
  // Same V with a 0.05% dip on the way up.
  const std::vector<double> wiggled = {10, 9, 8, 7, 6, 6.5, 6.497, 7, 7.5, 8};
  const auto strict = abel::testing::brute_force_bounces(clean);
  REQUIRE(strict == std::vector<std::size_t>{4});
  CHECK(detect_bounce(trace_of(wiggled), 0.005) == std::vector<int>{5});
  // Without tolerance the dip breaks the rising flank.
  CHECK(detect_bounce(trace_of(wiggled), 0.0).empty());
  // Noise around the minimum does not produce duplicates.
  CHECK(detect_bounce(trace_of({10, 8, 6, 6.003, 5.999, 7, 8.5}), 0.005) == std::vector<int>{5});
}

TEST_CASE("tolerance demands rise and drop beyond the noise level") {
  CHECK(detect_bounce(trace_of({100, 99.9, 99.8, 99.85, 99.9}), 0.005).empty());
  CHECK(detect_bounce(trace_of({100, 99.9, 99.8, 99.85, 99.9}), 0.0) == std::vector<int>{3});
  CHECK_THROWS_AS(bounce_positions(std::vector<double>{1, 2, 3, 4, 5}, -0.1), abel::InputError);
}

TEST_CASE("detector matches the brute-force checker at zero tolerance") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> step(-2, 2);
  for (int trial = 0; trial < 4000; ++trial) {
    std::vector<double> v = {50.0};
    const int len = 5 + trial % 10;
    while (static_cast<int>(v.size()) < len) v.push_back(v.back() + step(rng));
    const auto fast = bounce_positions(v, 0.0);
    const auto brute = abel::testing::brute_force_bounces(v);
    REQUIRE(fast == brute);
  }
}

TEST_CASE("short segments are insufficient") {
  const auto t = trace_of({10, 8, 6, 7, 8.5, 9, 5, 4, 5}, {6});
  const auto segs = segments(t, 0.0);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].verdict == SegmentVerdict::kBounced);
  CHECK(segs[1].verdict == SegmentVerdict::kInsufficient);
  CHECK(segs[1].bounce_epochs.empty());
}

TEST_CASE("segment classification is additive") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v;
    for (int i = 0; i < 60; ++i) v.push_back(40.0 + 0.02 * (i - 20) * (i - 20) + noise(rng));
    const std::vector<int> decays = {10 + trial % 7, 25 + trial % 5, 41};
    const auto whole = segments(trace_of(v, decays), 0.005);
    for (const auto& s : whole) {
      std::vector<double> piece(v.begin() + static_cast<std::ptrdiff_t>(s.begin),
                                v.begin() + static_cast<std::ptrdiff_t>(s.end));
      auto alone = trace_of(piece);
      for (auto& e : alone.epochs) e += static_cast<int>(s.begin);
      const auto solo = segments(alone, 0.005);
      REQUIRE(solo.size() == 1);
      CHECK(solo[0].verdict == s.verdict);
      CHECK(solo[0].bounce_epochs == s.bounce_epochs);
    }
  }
}

TEST_CASE("decay alignment verdicts") {
  // Bounce at epoch 20, decay at 170.
  std::vector<double> v;
  for (int e = 1; e <= 200; ++e) v.push_back(e <= 20 ? 100.0 - e : 80.0 + 0.1 * (e - 20));
  auto t = trace_of(v, {170});
  auto a = decay_alignment(t, 0.0);
  REQUIRE(a.size() == 1);
  CHECK(a[0].verdict == Alignment::kAfterBounce);
  CHECK(a[0].epochs_since_bounce == 150);

  t.decay_epochs = {5};
  a = decay_alignment(t, 0.0);
  CHECK(a[0].verdict == Alignment::kBeforeBounce);
  CHECK_FALSE(a[0].epochs_since_bounce.has_value());

  std::vector<double> up(50);
  std::iota(up.begin(), up.end(), 1.0);
  a = decay_alignment(trace_of(up, {30}), 0.0);
  CHECK(a[0].verdict == Alignment::kNoBounceSegment);
}

TEST_CASE("ABEL decays on noiseless piecewise traces follow detected bounces") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> run_len(4, 8);
  std::uniform_real_distribution<double> slope(0.2, 2.0);
  int decays_seen = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v = {200.0};
    int dir = -1;
    while (v.size() < 80) {
      const int len = run_len(rng);
      const double s = slope(rng);
      for (int i = 0; i < len; ++i) v.push_back(v.back() + dir * s);
      dir = -dir;
    }
    v.resize(80);
    auto state = abel::sched::make_abel_state(
        1.0, {.decay_factor = 0.5, .last_decay_fraction = 1.0, .total_epochs = 1000});
    std::vector<int> bounce_decays;
    for (double w : v) {
      for (const auto& ev : abel::sched::abel_observe_epoch(state, w).events) {
        if (ev.trigger == abel::sched::Trigger::kBounce) bounce_decays.push_back(ev.epoch);
      }
    }
    const auto report = decay_alignment(trace_of(v, bounce_decays), 0.0);
    for (const auto& a : report) {
      CHECK(a.verdict == Alignment::kAfterBounce);
      ++decays_seen;
    }
  }
  CHECK(decays_seen > 300);
}

TEST_CASE("post-decay drops") {
  const std::vector<int> epochs = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  // Decays at 3, 6, 9 with drops of 3%, 1%, 0.2%.
  const std::vector<double> err = {0.20, 0.20, 0.20, 0.17, 0.17, 0.17, 0.16, 0.16, 0.16, 0.158, 0.158, 0.158};
  auto r = post_decay_drops(epochs, err, std::vector<int>{3, 6, 9}, 3);
  REQUIRE(r.drops.size() == 3);
  CHECK(r.drops[0].drop == doctest::Approx(0.03));
  CHECK(r.drops[1].drop == doctest::Approx(0.01));
  CHECK(r.drops[2].drop == doctest::Approx(0.002));
  CHECK(r.monotone_drops);
  CHECK_FALSE(r.drops[0].partial);

  const std::vector<double> err2 = {0.2, 0.2, 0.2, 0.19, 0.19, 0.19, 0.17, 0.17, 0.17, 0.17, 0.17, 0.17};
  r = post_decay_drops(epochs, err2, std::vector<int>{3, 6}, 3);
  CHECK(r.drops[0].drop == doctest::Approx(0.01));
  CHECK(r.drops[1].drop == doctest::Approx(0.02));
  CHECK_FALSE(r.monotone_drops);

  r = post_decay_drops(epochs, err2, std::vector<int>{10}, 5);
  CHECK(r.drops[0].partial);
  CHECK_THROWS_AS(post_decay_drops(epochs, err2, std::vector<int>{3}, 0), abel::InputError);
}

TEST_CASE("top layer contribution") {
  auto t = trace_of({2, 2, 2, 2, 2});
  t.layer_names = {"a", "b"};
  t.layers = {{1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}};
  auto top = top_layer_contribution(t, 1);
  REQUIRE(top.size() == 1);
  for (double s : top[0].share) CHECK(s == 0.5);

  t = trace_of({6, 5, 4, 5, 6, 7});
  t.layer_names = {"small", "big", "mid"};
  t.layers = {{1, 1, 1, 1, 1, 1}, {4, 3, 2, 3, 4, 5}, {1, 1, 1, 1, 1, 1}};
  top = top_layer_contribution(t, 5);
  REQUIRE(top.size() == 3);
  CHECK(top[0].name == "big");
  CHECK(top[0].trace_class == TraceClass::kBouncing);
  CHECK(top[0].matches_total);
  CHECK_FALSE(top[1].matches_total);
  for (std::size_t i = 0; i < t.epochs.size(); ++i) {
    double sum = 0.0;
    for (const auto& l : top) sum += l.share[i];
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("trace validation") {
  auto t = trace_of({1, 2, 3});
  t.epochs = {1, 1, 2};
  CHECK_THROWS_AS(classify_trace(t), abel::InputError);
  CHECK_THROWS_AS(classify_trace(trace_of({1, 0, 3})), abel::InputError);
}

TEST_CASE("growth deciles and report output") {
  const auto d = growth_rate_deciles(std::vector<double>{1, 2, 4, 8});
  REQUIRE(d.size() == 9);
  for (double x : d) CHECK(x == doctest::Approx(1.0));
  const auto t = trace_of({10, 8, 6, 7, 8.5, 9, 9.5}, {6});
  const std::vector<double> errors = {0.5, 0.4, 0.3, 0.3, 0.3, 0.3, 0.2};
  const auto report = analyze(t, errors);
  CHECK(report.trace_class == TraceClass::kBouncing);
  CHECK(report_text(t, report).find("classification: bouncing") != std::string::npos);
  CHECK(report_csv(t, report).find("decay,6,after_bounce") != std::string::npos);
}
