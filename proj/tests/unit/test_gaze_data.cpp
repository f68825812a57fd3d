#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "chronogaze/error.hpp"
#include "chronogaze/gaze_data.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace chronogaze;
using testing::simple_trial;

namespace {

ErrorCode load_error(const DatasetPaths& paths) {
  try {
    load_dataset(paths);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("load_dataset did not throw");
  return ErrorCode::io;
}

Dataset two_trials() {
  Dataset d;
  d.trials.push_back(simple_trial("p1", "t1", 60.0, 1, 5.0));
  d.trials.push_back(simple_trial("p1", "t2", 180.0, 3, 5.0));
  return d;
}

}  // namespace

TEST_CASE("two well-formed trials load with an empty screening log") {
  testing::TempDir dir;
  const auto paths = DatasetPaths::in_directory(dir.path());
  write_dataset(two_trials(), paths);
  const auto d = load_dataset(paths);
  CHECK(d.trials.size() == 2);
  CHECK(d.screening_log.empty());
  REQUIRE(d.find({"p1", "t2"}) != nullptr);
  CHECK(d.find({"p1", "t2"})->planned_duration == 180.0);
  CHECK(d.find({"p9", "t1"}) == nullptr);
}

TEST_CASE("round trip preserves every field") {
  testing::TempDir dir;
  const auto generated = synth::generate_dataset(testing::small_config(5));
  const auto paths = DatasetPaths::in_directory(dir.path());
  write_dataset(generated.dataset, paths);
  const auto loaded = load_dataset(paths);
  CHECK(loaded.screening_log.empty());
  REQUIRE(loaded.trials.size() == generated.dataset.trials.size());
  for (std::size_t i = 0; i < loaded.trials.size(); ++i) CHECK(loaded.trials[i] == generated.dataset.trials[i]);

  // and again from the reloaded copy
  testing::TempDir dir2;
  const auto paths2 = DatasetPaths::in_directory(dir2.path());
  write_dataset(loaded, paths2);
  CHECK(testing::read_file(paths.gaze) == testing::read_file(paths2.gaze));
  CHECK(testing::read_file(paths.fixations) == testing::read_file(paths2.fixations));
}

TEST_CASE("timestamps are normalized per phase") {
  testing::TempDir dir;
  auto d = two_trials();
  for (auto& s : d.trials[0].gaze) s.timestamp += 1000.0;
  for (auto& f : d.trials[0].fixations) f.start += 1000.0;
  for (auto& s : d.trials[0].baseline_gaze) s.timestamp += 50.0;
  for (auto& f : d.trials[0].baseline_fixations) f.start += 50.0;
  const auto paths = DatasetPaths::in_directory(dir.path());
  write_dataset(d, paths);
  const auto loaded = load_dataset(paths);
  const auto& t = loaded.trials[0];
  CHECK(t.gaze.front().timestamp == 0.0);
  CHECK(t.baseline_gaze.front().timestamp == 0.0);
  CHECK(t.fixations.front().start == doctest::Approx(0.1));
}

TEST_CASE("screen_trial verdicts") {
  auto t = simple_trial("p", "t", 60.0, 1, 5.0);
  CHECK_FALSE(screen_trial(t).has_value());

  auto empty = t;
  empty.fixations.clear();
  CHECK(screen_trial(empty) == ExclusionReason::empty_stream);
  CHECK(to_string(*screen_trial(empty)) == "empty stream");

  auto regress = t;
  std::swap(regress.gaze[10].timestamp, regress.gaze[11].timestamp);
  CHECK(screen_trial(regress) == ExclusionReason::non_monotone_timestamps);
  CHECK(to_string(*screen_trial(regress)) == "non-monotone timestamps");

  auto overlap = t;
  overlap.fixations[1].start = overlap.fixations[0].start + 0.05;
  CHECK(screen_trial(overlap) == ExclusionReason::non_monotone_timestamps);

  auto good = t;
  for (auto& s : good.gaze) s.confidence = 0.95;
  CHECK_FALSE(screen_trial(good).has_value());

  // mean confidence exactly 0.3
  auto low = t;
  for (std::size_t i = 0; i < low.gaze.size(); ++i) low.gaze[i].confidence = i % 2 ? 0.2 : 0.4;
  CHECK(screen_trial(low) == ExclusionReason::low_confidence);
  ScreeningPolicy lenient;
  lenient.reject_low_confidence = false;
  CHECK_FALSE(screen_trial(low, lenient).has_value());

  auto no_baseline = t;
  no_baseline.baseline_gaze.clear();
  CHECK(screen_trial(no_baseline) == ExclusionReason::missing_baseline);
  CHECK(to_string(*screen_trial(no_baseline)) == "baseline missing");
}

TEST_CASE("timestamp regression in the file excludes the trial") {
  testing::TempDir dir;
  auto d = two_trials();
  std::swap(d.trials[1].gaze[3].timestamp, d.trials[1].gaze[4].timestamp);
  const auto paths = DatasetPaths::in_directory(dir.path());
  write_dataset(d, paths);
  const auto loaded = load_dataset(paths);
  CHECK(loaded.trials.size() == 1);
  REQUIRE(loaded.screening_log.size() == 1);
  CHECK(loaded.screening_log[0].trial == TrialKey{"p1", "t2"});
  CHECK(loaded.screening_log[0].reason == ExclusionReason::non_monotone_timestamps);
}

TEST_CASE("504 trials with 99 faulty ones leave 405") {
  testing::TempDir dir;
  Dataset d;
  std::mt19937_64 rng(42);
  std::vector<int> faulty(504, 0);
  std::fill(faulty.begin(), faulty.begin() + 99, 1);
  std::shuffle(faulty.begin(), faulty.end(), rng);
  std::map<ExclusionReason, int> expected;
  int k = 0;
  for (int i = 0; i < 504; ++i) {
    char pid[8], tid[8];
    std::snprintf(pid, sizeof pid, "p%02d", i / 24);
    std::snprintf(tid, sizeof tid, "t%02d", i % 24);
    auto t = simple_trial(pid, tid, 60.0, 1, 1.0);
    t.baseline_gaze.resize(4);
    if (faulty[static_cast<std::size_t>(i)]) {
      switch (k++ % 4) {
        case 0: t.fixations.clear(); ++expected[ExclusionReason::empty_stream]; break;
        case 1: std::swap(t.gaze[5].timestamp, t.gaze[6].timestamp); ++expected[ExclusionReason::non_monotone_timestamps]; break;
        case 2: for (auto& s : t.gaze) s.confidence = 0.3; ++expected[ExclusionReason::low_confidence]; break;
        default: t.baseline_gaze.clear(); t.baseline_fixations.clear(); ++expected[ExclusionReason::missing_baseline];
      }
    }
    d.trials.push_back(std::move(t));
  }
  const auto paths = DatasetPaths::in_directory(dir.path());
  write_dataset(d, paths);
  const auto loaded = load_dataset(paths);
  CHECK(loaded.trials.size() == 405);
  CHECK(loaded.screening_log.size() == 99);
  std::map<ExclusionReason, int> got;
  for (const auto& e : loaded.screening_log) ++got[e.reason];
  CHECK(got == expected);
}

TEST_CASE("row order across trials does not change the result") {
  testing::TempDir a, b;
  auto d = two_trials();
  d.trials.push_back(simple_trial("p0", "t9", 300.0, 5, 5.0));
  d.trials[1].fixations.clear();
  write_dataset(d, DatasetPaths::in_directory(a.path()));
  std::reverse(d.trials.begin(), d.trials.end());
  write_dataset(d, DatasetPaths::in_directory(b.path()));
  const auto da = load_dataset(DatasetPaths::in_directory(a.path()));
  const auto db = load_dataset(DatasetPaths::in_directory(b.path()));
  CHECK(da.trials == db.trials);
  REQUIRE(da.screening_log.size() == 1);
  CHECK(db.screening_log.size() == 1);
  CHECK(da.screening_log[0].trial == db.screening_log[0].trial);
}

TEST_CASE("loading errors") {
  testing::TempDir dir;
  const auto paths = DatasetPaths::in_directory(dir.path());
  write_dataset(two_trials(), paths);

  SUBCASE("missing file") {
    std::filesystem::remove(paths.questionnaire);
    CHECK(load_error(paths) == ErrorCode::missing_file);
  }
  SUBCASE("schema mismatch") {
    testing::write_file(paths.trials, "participant_id,trial_id,planned_duration_s\np1,t1,60\n");
    CHECK(load_error(paths) == ErrorCode::schema_mismatch);
  }
  SUBCASE("row parse error carries the line") {
    auto text = testing::read_file(paths.gaze);
    // corrupt the confidence of the third data row (file line 4)
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
    const auto end = text.find('\n', pos);
    const auto comma = text.rfind(',', end);
    text.replace(comma + 1, end - comma - 1, "high");
    testing::write_file(paths.gaze, text);
    try {
      load_dataset(paths);
      FAIL("expected row_parse");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::row_parse);
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("out-of-range values") {
    testing::write_file(paths.trials, "participant_id,trial_id,planned_duration_s,n_active\np1,t1,90,1\np1,t2,180,3\n");
    CHECK(load_error(paths) == ErrorCode::row_parse);
    testing::write_file(paths.trials, "participant_id,trial_id,planned_duration_s,n_active\np1,t1,60,2\np1,t2,180,3\n");
    CHECK(load_error(paths) == ErrorCode::row_parse);
  }
  SUBCASE("questionnaire row without a trial") {
    auto text = testing::read_file(paths.questionnaire);
    text += "p7,t7,60,3\n";
    testing::write_file(paths.questionnaire, text);
    CHECK(load_error(paths) == ErrorCode::cross_reference);
  }
}

TEST_CASE("ten items, five per class, fraction 0.2") {
  const std::vector<int> labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const auto a = split_analysis_test(labels, {}, 0.2, 9, SplitGranularity::slice);
  const auto b = split_analysis_test(labels, {}, 0.2, 9, SplitGranularity::slice);
  REQUIRE(a.test.size() == 2);
  CHECK(labels[a.test[0]] != labels[a.test[1]]);
  CHECK(a.analysis.size() == 8);
  CHECK(a.test == b.test);
  CHECK(a.analysis == b.analysis);
}

TEST_CASE("stratification holds for any seed") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 50; ++round) {
    const int n = 20 + static_cast<int>(rng() % 300);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng() % 3);
    if (std::set<int>(labels.begin(), labels.end()).size() < 2) continue;
    const auto s = split_analysis_test(labels, {}, 0.2, rng(), SplitGranularity::slice);
    std::set<std::size_t> all(s.analysis.begin(), s.analysis.end());
    for (auto i : s.test) CHECK(all.insert(i).second);
    CHECK(all.size() == labels.size());
    std::map<int, int> total, test;
    for (int l : labels) ++total[l];
    for (auto i : s.test) ++test[labels[i]];
    for (auto [label, count] : total) CHECK(std::abs(test[label] - 0.2 * count) <= 1.0);
  }
}

TEST_CASE("slice-level test size over 405 trials of mixed durations") {
  // 405 trials of 60/180/300 s at t_w = 2 s, labels alternate by trial.
  std::vector<int> labels;
  std::map<int, int> per_class;
  for (int i = 0; i < 405; ++i) {
    const int span = (i % 3 == 0) ? 60 : (i % 3 == 1) ? 180 : 300;
    for (int s = 0; s < span / 2; ++s) labels.push_back(i % 2);
    per_class[i % 2] += span / 2;
  }
  const auto split = split_analysis_test(labels, {}, 0.2, 1, SplitGranularity::slice);
  std::map<int, int> test;
  for (auto i : split.test) ++test[labels[i]];
  for (auto [label, n] : per_class) CHECK(std::abs(test[label] - std::lround(0.2 * n)) <= 1);
}

TEST_CASE("trial-level split keeps trials whole") {
  std::vector<int> labels;
  std::vector<std::size_t> groups;
  for (std::size_t g = 0; g < 40; ++g)
    for (int s = 0; s < 7; ++s) {
      labels.push_back(static_cast<int>(g % 2));
      groups.push_back(g);
    }
  const auto split = split_analysis_test(labels, groups, 0.2, 4, SplitGranularity::trial);
  std::set<std::size_t> test_groups, analysis_groups;
  for (auto i : split.test) test_groups.insert(groups[i]);
  for (auto i : split.analysis) analysis_groups.insert(groups[i]);
  for (auto g : test_groups) CHECK_FALSE(analysis_groups.contains(g));
  CHECK(test_groups.size() == 8);
}

TEST_CASE("split errors") {
  const std::vector<int> none;
  const std::vector<int> one = {1, 1, 1};
  try {
    split_analysis_test(none, {}, 0.2, 1, SplitGranularity::slice);
    FAIL("expected empty_dataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_dataset);
  }
  try {
    split_analysis_test(one, {}, 0.2, 1, SplitGranularity::slice);
    FAIL("expected single_class");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::single_class);
  }
}
