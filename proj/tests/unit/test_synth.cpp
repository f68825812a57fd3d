#include <cmath>

#include "chronogaze/csv.hpp"
#include "chronogaze/error.hpp"
#include "chronogaze/features.hpp"
#include "chronogaze/labeling.hpp"
#include "chronogaze/rng.hpp"
#include "chronogaze/synth.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace chronogaze;
using namespace chronogaze::synth;

namespace {

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("two participants by four trials") {
  testing::TempDir dir;
  const auto paths = generate(testing::small_config(), dir.path());
  CHECK(line_count(testing::read_file(paths.trials)) == 1 + 8);
  CHECK(line_count(testing::read_file(paths.questionnaire)) == 1 + 8);
  const auto d = load_dataset(paths);
  CHECK(d.trials.size() == 8);
  CHECK(d.screening_log.empty());
  CHECK(d.trials.front().key.participant_id == "p001");
  CHECK(d.trials.front().key.trial_id == "t001");
}

TEST_CASE("same seed gives byte-identical files") {
  testing::TempDir a, b, c;
  auto config = testing::small_config(5);
  const auto pa = generate(config, a.path());
  const auto pb = generate(config, b.path());
  for (auto member : {&DatasetPaths::gaze, &DatasetPaths::fixations, &DatasetPaths::trials, &DatasetPaths::questionnaire})
    CHECK(testing::read_file(pa.*member) == testing::read_file(pb.*member));
  config.seed = 6;
  const auto pc = generate(config, c.path());
  CHECK(testing::read_file(pa.gaze) != testing::read_file(pc.gaze));
}

TEST_CASE("generated data survives loading unchanged") {
  testing::TempDir dir;
  const auto config = testing::small_config(2);
  const auto generated = generate_dataset(config);
  const auto loaded = load_dataset(generate(config, dir.path()));
  REQUIRE(loaded.trials.size() == generated.dataset.trials.size());
  for (std::size_t i = 0; i < loaded.trials.size(); ++i) {
    const auto& a = loaded.trials[i];
    const auto& b = generated.dataset.trials[i];
    CHECK(a.key == b.key);
    CHECK(a.gaze.size() == b.gaze.size());
    CHECK(a.fixations.size() == b.fixations.size());
    CHECK(a.answer == b.answer);
  }
}

TEST_CASE("planted labels are reproduced exactly") {
  for (auto family : {LabelFamily::duration_estimate, LabelFamily::ppot})
    for (int n_classes : {2, 3}) {
      auto config = testing::small_config(3);
      config.n_participants = 3;
      config.trials_per_participant = 9;
      config.durations = {60.0, 180.0, 300.0};
      config.family = family;
      config.n_classes = n_classes;
      const auto g = generate_dataset(config);
      const auto spec = LabelSpec::make(family, n_classes);
      std::vector<int> seen(static_cast<std::size_t>(n_classes), 0);
      for (std::size_t i = 0; i < g.dataset.trials.size(); ++i) {
        CHECK(trial_label(g.dataset.trials[i], spec) == g.planted[i]);
        ++seen[static_cast<std::size_t>(g.planted[i])];
      }
      for (int s : seen) CHECK(s > 0);
    }
}

TEST_CASE("planted trial mix") {
  auto config = testing::small_config(4);
  config.durations = {60.0, 180.0};
  config.trials_per_participant = 6;
  const auto g = generate_dataset(config);
  for (const auto& t : g.dataset.trials) {
    CHECK((t.planned_duration == 60.0 || t.planned_duration == 180.0));
    CHECK(t.n_active % 2 == 1);
    CHECK(t.gaze.size() == static_cast<std::size_t>(std::floor(t.planned_duration * config.gaze_rate_hz)));
  }
}

TEST_CASE("config json") {
  const auto c = config_from_json(R"({"n_participants": 3, "durations": [60], "family": "ppot", "n_classes": 3,
                                      "experiment_shifts": [{"participant": 1, "sigma": 2.0}], "seed": 9})");
  CHECK(c.n_participants == 3);
  CHECK(c.durations == std::vector<double>{60.0});
  CHECK(c.family == LabelFamily::ppot);
  CHECK(c.n_classes == 3);
  REQUIRE(c.experiment_shifts.size() == 1);
  CHECK(c.experiment_shifts[0].sigma == 2.0);
  CHECK(c.seed == 9);

  const auto back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));

  CHECK_THROWS_AS(config_from_json(R"({"n_participant": 3})"), Error);
  CHECK_THROWS_AS(config_from_json(R"({"gaze_rate_hz": -1})"), Error);
  CHECK_THROWS_AS(config_from_json(R"({"durations": []})"), Error);
  CHECK_THROWS_AS(config_from_json("[1, 2"), Error);
}

TEST_CASE("oracle examples") {
  std::vector<FixationEvent> fix;
  for (int i = 0; i < 12; ++i) fix.push_back({i + 1, 0.1 + 0.8 * i, 0.3, 0.5, 0.5, 0.5});
  std::vector<GazeSample> gaze(2);
  gaze[0].timestamp = 1.0;
  gaze[1].timestamp = 2.0;
  gaze[0].diam2d_left = 2.0;
  gaze[1].diam2d_left = 4.0;
  gaze[0].confidence = gaze[1].confidence = 1.0;
  OracleInput in;
  in.gaze = gaze;
  in.fixations = fix;
  in.t_start = 0.0;
  in.t_w = 10.0;
  CHECK(oracle_feature("fixation_freq", in) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(oracle_feature("diam2d_left_std", in) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(oracle_feature("diam2d_left_mean", in) == doctest::Approx(3.0).epsilon(1e-15));
  try {
    oracle_feature("pupil_area", in);
    FAIL("expected unknown_feature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_feature);
  }
}

TEST_CASE("oracle ipa tracks a constructed spike train") {
  // k three-sample pulses over s seconds of a noisy, otherwise flat 3D diameter.
  const double s = 60.0, rate = 120.0;
  const int n = static_cast<int>(s * rate);
  for (int k : {6, 12, 30}) {
    Rng rng(static_cast<std::uint64_t>(k));
    std::normal_distribution<double> noise(0.0, 0.02);
    std::vector<GazeSample> gaze(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto& g = gaze[static_cast<std::size_t>(i)];
      g.timestamp = i / rate;
      g.confidence = 1.0;
      g.diam3d_left = 3.0 + noise(rng);
    }
    for (int p = 0; p < k; ++p) {
      const int at = static_cast<int>((p + 0.5) * n / k);
      for (int j = 0; j < 3; ++j) gaze[static_cast<std::size_t>(at + j)].diam3d_left += 0.5;
    }
    OracleInput in;
    in.gaze = gaze;
    in.t_start = 0.0;
    in.t_w = s;
    CHECK(std::fabs(oracle_feature("ipa_3d_left", in) - k / s) <= 1.0 / s + 1e-12);
  }
}
