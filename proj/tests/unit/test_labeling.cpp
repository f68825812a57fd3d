#include <algorithm>
#include <cmath>

#include "chronogaze/error.hpp"
#include "chronogaze/features.hpp"
#include "chronogaze/labeling.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace chronogaze;

TEST_CASE("relative estimation error") {
  CHECK(relative_estimation_error(90, 60) == 1.5);
  CHECK(relative_estimation_error(270, 300) == 0.9);
  CHECK(relative_estimation_error(0, 180) == 0.0);
  try {
    relative_estimation_error(10, 0);
    FAIL("expected non_positive_actual");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_positive_actual);
  }
}

TEST_CASE("duration boundaries follow the inequalities literally") {
  CHECK(duration_label(0.9, 2) == kUnder);
  CHECK(duration_label(std::nextafter(0.9, 1.0), 2) == 1);
  CHECK(duration_label(0.75, 3) == kCorrect);
  CHECK(duration_label(std::nextafter(0.75, 0.0), 3) == kUnder);
  CHECK(duration_label(1.05, 3) == kCorrect);
  CHECK(duration_label(std::nextafter(1.05, 2.0), 3) == kOver);
  CHECK(duration_label(1.2, 3) == kOver);
  CHECK(duration_label(0.9, 3) == kCorrect);
  CHECK(class_name(LabelFamily::duration_estimate, 2, 0) == "under");
  CHECK(class_name(LabelFamily::duration_estimate, 2, 1) == "over");
  CHECK(class_name(LabelFamily::duration_estimate, 3, 1) == "correct");
}

TEST_CASE("duration label is monotone") {
  int prev2 = 0, prev3 = 0;
  for (int i = 0; i <= 3000; ++i) {
    const double e = i / 1000.0;
    const int l2 = duration_label(e, 2), l3 = duration_label(e, 3);
    CHECK(l2 >= prev2);
    CHECK(l3 >= prev3);
    prev2 = l2;
    prev3 = l3;
  }
}

TEST_CASE("ppot mapping") {
  CHECK(ppot_label(3, 2) == 1);
  CHECK(ppot_label(3, 3) == kNeutral);
  CHECK(ppot_label(1, 2) == kSlow);
  const int binary[] = {0, 0, 1, 1, 1};
  const int three[] = {kSlow, kSlow, kNeutral, kFast, kFast};
  for (int l = 1; l <= 5; ++l) {
    CHECK(ppot_label(l, 2) == binary[l - 1]);
    CHECK(ppot_label(l, 3) == three[l - 1]);
  }
  for (int bad : {0, 6}) {
    try {
      ppot_label(bad, 2);
      FAIL("expected out_of_range_likert");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::out_of_range_likert);
    }
  }
  CHECK(class_name(LabelFamily::ppot, 2, 1) == "fast");
  CHECK(class_name(LabelFamily::ppot, 3, 1) == "neutral");
}

namespace {

std::vector<FeatureVector> slices_of(const TrialRecord& t, int n) {
  std::vector<FeatureVector> out;
  for (int i = 0; i < n; ++i) {
    FeatureVector f;
    f.provenance = {t.key.participant_id, t.key.trial_id, 10.0 * i, 10.0, t.planned_duration, t.n_active};
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST_CASE("slices inherit their trial's label") {
  Dataset d;
  auto t = testing::simple_trial("p", "t", 60.0, 1, 1.0);
  t.answer = QuestionnaireAnswer{30.0, 3};  // e_rel 0.5
  d.trials.push_back(t);
  const auto f = slices_of(t, 6);
  const auto r = label_dataset(f, d, LabelSpec::duration(2));
  REQUIRE(r.samples.size() == 6);
  for (const auto& s : r.samples) CHECK(s.label == kUnder);
  CHECK(r.distribution.majority_share == 1.0);
}

TEST_CASE("all five Likert values, three-class ppot") {
  Dataset d;
  std::vector<FeatureVector> f;
  for (int l = 1; l <= 5; ++l) {
    auto t = testing::simple_trial("p", "t" + std::to_string(l), 60.0, 1, 1.0);
    t.answer = QuestionnaireAnswer{60.0, l};
    d.trials.push_back(t);
    const auto s = slices_of(t, 1);
    f.insert(f.end(), s.begin(), s.end());
  }
  const auto r = label_dataset(f, d, LabelSpec::ppot(3));
  CHECK(r.distribution.counts == std::vector<std::size_t>{2, 1, 2});
  CHECK(r.distribution.majority_share == doctest::Approx(0.4));
}

TEST_CASE("majority share of an engineered 59 % set") {
  Dataset d;
  std::vector<FeatureVector> f;
  for (int i = 0; i < 100; ++i) {
    auto t = testing::simple_trial("p", "t" + std::to_string(100 + i), 60.0, 1, 1.0);
    t.answer = QuestionnaireAnswer{i < 59 ? 30.0 : 80.0, 3};
    d.trials.push_back(t);
    const auto s = slices_of(t, 1);
    f.insert(f.end(), s.begin(), s.end());
  }
  std::sort(d.trials.begin(), d.trials.end(), [](auto& a, auto& b) { return a.key < b.key; });
  const auto r = label_dataset(f, d, LabelSpec::duration(2));
  CHECK(r.distribution.majority_share == doctest::Approx(0.59));
}

TEST_CASE("missing questionnaire") {
  Dataset d;
  auto t = testing::simple_trial("p", "t", 60.0, 1, 1.0);
  t.answer.reset();
  d.trials.push_back(t);
  try {
    label_dataset(slices_of(t, 2), d, LabelSpec::duration(2));
    FAIL("expected missing_questionnaire");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_questionnaire);
  }
}

TEST_CASE("labels csv round trip joins by provenance") {
  testing::TempDir dir;
  Dataset d;
  std::vector<FeatureVector> f;
  for (int i = 0; i < 4; ++i) {
    auto t = testing::simple_trial("p", "t" + std::to_string(i), 60.0, 1, 1.0);
    t.answer = QuestionnaireAnswer{i % 2 ? 90.0 : 30.0, 1 + i};
    d.trials.push_back(t);
    const auto s = slices_of(t, 3);
    f.insert(f.end(), s.begin(), s.end());
  }
  const auto spec = LabelSpec::duration(3);
  const auto r = label_dataset(f, d, spec);
  write_labels(dir / "labels.csv", f, r);
  const auto loaded = read_labels(dir / "labels.csv", f);
  const auto expected = make_labeled_data(f, r);
  CHECK(loaded.labels == expected.labels);
  CHECK(loaded.rows == expected.rows);
  CHECK(loaded.n_classes == 3);
}
