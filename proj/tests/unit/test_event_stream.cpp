#include <cmath>

#include "chronogaze/error.hpp"
#include "chronogaze/event_stream.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace chronogaze;

TEST_CASE("slice counts follow floor arithmetic") {
  const auto t60 = testing::simple_trial("p", "t", 60.0, 1, 10.0);
  CHECK(slice_trial(t60, 60.0).slices().size() == 1);
  CHECK(slice_trial(t60, 45.0).slices().size() == 1);
  CHECK(slice_trial(t60, 1.0).slices().size() == 60);
  CHECK(slice_trial(t60, 30.0).slices().size() == 2);
  const auto t300 = testing::simple_trial("p", "t", 300.0, 1, 10.0);
  CHECK(slice_trial(t300, 30.0).slices().size() == 10);
  CHECK(slice_trial(t300, 45.0).slices().size() == 6);
  CHECK(slice_count(180.0, 0.1) == 1800);
  CHECK(slice_count(180.0, 7.0) == 25);
  CHECK_THROWS_AS(slice_count(60.0, 0.0), Error);
}

TEST_CASE("window longer than the trial yields no slices") {
  const auto t = testing::simple_trial("p", "t", 60.0, 1, 10.0);
  const auto s = slice_trial(t, 61.0);
  CHECK(s.slices().empty());
  CHECK(s.window_longer_than_trial());
}

TEST_CASE("every sample and event lands in exactly the window containing its start") {
  const auto generated = synth::generate_dataset(testing::small_config(2));
  for (const auto& trial : generated.dataset.trials) {
    for (double t_w : {1.0, 7.0, 20.0}) {
      const auto sliced = slice_trial(trial, t_w);
      const auto n = slice_count(trial.planned_duration, t_w);
      REQUIRE(sliced.slices().size() == n);
      const double covered = static_cast<double>(n) * t_w;
      std::size_t gaze_total = 0, fix_total = 0, sac_total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& w = sliced.slices()[i];
        CHECK(w.t_start == static_cast<double>(i) * t_w);
        for (const auto& s : w.gaze) CHECK((s.timestamp >= w.t_start && s.timestamp < w.t_start + t_w));
        for (const auto& f : w.fixations) CHECK((f.start >= w.t_start && f.start < w.t_start + t_w));
        for (const auto& s : w.saccades) CHECK((s.start >= w.t_start && s.start < w.t_start + t_w));
        gaze_total += w.gaze.size();
        fix_total += w.fixations.size();
        sac_total += w.saccades.size();
      }
      std::size_t gaze_expected = 0, fix_expected = 0, sac_expected = 0;
      for (const auto& s : trial.gaze) gaze_expected += s.timestamp < covered;
      for (const auto& f : trial.fixations) fix_expected += f.start < covered;
      for (const auto& s : sliced.saccades()) sac_expected += s.start < covered;
      CHECK(gaze_total == gaze_expected);
      CHECK(fix_total == fix_expected);
      CHECK(sac_total == sac_expected);
    }
  }
}

TEST_CASE("saccades are the positive gaps between fixations") {
  std::vector<FixationEvent> f = {
      {1, 0.0, 0.2, 0.5, 0.1, 0.1}, {2, 0.3, 0.2, 0.5, 0.4, 0.5}, {3, 0.5, 0.1, 0.5, 0.4, 0.5}};
  const auto s = derive_saccades(f);
  REQUIRE(s.size() == 1);  // the second pair touches, gap 0
  CHECK(s[0].start == doctest::Approx(0.2));
  CHECK(s[0].duration == doctest::Approx(0.1));
  CHECK(s[0].amplitude == doctest::Approx(0.5));
  CHECK(s[0].speed == doctest::Approx(5.0));
  CHECK(derive_saccades(std::span<const FixationEvent>(f.data(), 1)).empty());
}
