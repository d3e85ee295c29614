#include <cmath>

#include "abel/sched/plateau.hpp"
#include "abel/util/error.hpp"
#include "doctest.h"

using namespace abel::sched;

TEST_CASE("constant stream decays on the 12th observation with patience 10") {
  auto s = make_plateau_state(1.0, {.factor = 0.1, .patience = 10, .threshold = 1e-4});
  int first = -1;
  for (int i = 1; i <= 40; ++i) {
    const auto step = plateau_observe_epoch(s, 2.5);
    if (step.event && first < 0) {
      first = i;
      CHECK(step.event->new_lr == doctest::Approx(0.1));
      CHECK(step.event->trigger == Trigger::kPlateau);
    }
  }
  CHECK(first == 12);
  // Decays recur every patience + 1 observations afterwards.
  CHECK(s.current_lr == doctest::Approx(1e-3));
}

TEST_CASE("strictly improving stream never decays") {
  auto s = make_plateau_state(1.0, {.patience = 2});
  double loss = 10.0;
  for (int i = 0; i < 500; ++i) {
    CHECK_FALSE(plateau_observe_epoch(s, loss).event);
    loss *= 0.99;
  }
  CHECK(s.current_lr == 1.0);
}

TEST_CASE("improvements below the relative threshold do not count") {
  auto s = make_plateau_state(1.0, {.patience = 1, .threshold = 0.01});
  plateau_observe_epoch(s, 1.0);
  plateau_observe_epoch(s, 0.995);  // only 0.5% better
  CHECK(s.epochs_since_improvement == 1);
  plateau_observe_epoch(s, 0.98);
  CHECK(s.epochs_since_improvement == 0);
  CHECK(s.best_metric == 0.98);
}

TEST_CASE("max mode") {
  auto s = make_plateau_state(1.0, {.factor = 0.2, .patience = 0, .mode = PlateauMode::kMax});
  CHECK_FALSE(plateau_observe_epoch(s, 0.5).event);
  CHECK_FALSE(plateau_observe_epoch(s, 0.6).event);
  const auto step = plateau_observe_epoch(s, 0.6);
  REQUIRE(step.event);
  CHECK(step.lr == doctest::Approx(0.2));
}

TEST_CASE("non-finite metric is rejected") {
  auto s = make_plateau_state(1.0, {});
  CHECK_THROWS_AS(plateau_observe_epoch(s, NAN), abel::InputError);
  CHECK(s.epoch == 0);
}
