#include <atomic>

#include "chronogaze/automl.hpp"
#include "chronogaze/error.hpp"
#include "doctest.h"

using namespace chronogaze;
using namespace chronogaze::automl;
using namespace chronogaze::learn;

namespace {

const DataShape kShape{26, 26, 200, 1.0};

/// Counts calls; phase-1 calls (the first 12) all score 0.5, phase-2 call i
/// scores score(i).
Evaluator rigged(std::function<double(int)> score) {
  auto calls = std::make_shared<std::atomic<int>>(0);
  return [calls, score](const PipelineSpec&) {
    const int i = (*calls)++;
    const double m = i < 12 ? 0.5 : score(i - 12);
    return EvalOutcome{{m}, m};
  };
}

SearchConfig config_with(int steps, int patience) {
  SearchConfig c;
  c.max_hpo_steps = steps;
  c.early_stop_patience = patience;
  c.seed = 7;
  return c;
}

struct Data {
  Matrix x;
  std::vector<int> y;
};

Data planted(std::size_t n, std::size_t d, std::size_t constant_cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Data out{Matrix(n, d + constant_cols, 2.0), std::vector<int>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    out.y[r] = static_cast<int>(r % 2);
    for (std::size_t c = 0; c < d; ++c) out.x(r, c) = g(rng);
    out.x(r, 0) += 4.0 * out.y[r];
  }
  return out;
}

}  // namespace

TEST_CASE("constant accuracy stops after exactly patience evaluations") {
  const auto r = run_search(rigged([](int) { return 0.5; }), kShape, config_with(1024, 100));
  CHECK(r.ledger.count(1) == 12);
  CHECK(r.ledger.count(2) == 100);
  CHECK(r.early_stopped);
}

TEST_CASE("strictly improving accuracy consumes the whole budget") {
  const auto r = run_search(rigged([](int i) { return 0.5 + 1e-6 * (i + 1); }), kShape, config_with(1024, 100));
  CHECK(r.ledger.count(2) == 1024);
  CHECK_FALSE(r.early_stopped);
  CHECK(r.best_mean == doctest::Approx(0.5 + 1e-6 * 1024));
}

TEST_CASE("improvement every 50 steps consumes the whole budget") {
  const auto r = run_search(rigged([](int i) { return 0.5 + 1e-4 * ((i + 1) / 50); }), kShape, config_with(1024, 100));
  CHECK(r.ledger.count(2) == 1024);
  CHECK_FALSE(r.early_stopped);
}

TEST_CASE("ties do not reset patience") {
  // Step 10 matches the incumbent exactly; it still counts as no improvement.
  const auto r = run_search(rigged([](int i) { return i == 9 ? 0.5 : 0.4; }), kShape, config_with(1024, 20));
  CHECK(r.ledger.count(2) == 20);
}

TEST_CASE("invalid evaluations do not count toward patience") {
  const auto r = run_search(rigged([](int i) -> double {
                              if (i % 2) throw Error(ErrorCode::invalid_argument, "rigged");
                              return 0.5;
                            }),
                            kShape, config_with(1024, 10));
  CHECK(r.ledger.valid_count(2) == 10);
  CHECK(r.ledger.count(2) == 19);
}

TEST_CASE("incumbent is monotone and the winner pair is kept") {
  const auto data = planted(120, 6, 0, 1);
  auto config = config_with(30, 10);
  const auto r = run_search(data.x, data.y, 2, config);
  const auto history = r.ledger.incumbent_history();
  REQUIRE(history.size() == r.ledger.entries.size());
  for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] >= history[i - 1]);
  CHECK(r.ledger.count(1) == 12);
  CHECK(r.ledger.count(2) <= 30);

  // Phase-1 winner: first entry attaining the best phase-1 mean.
  const LedgerEntry* winner = nullptr;
  for (const auto& e : r.ledger.entries)
    if (e.phase == 1 && e.valid && (!winner || e.mean > winner->mean)) winner = &e;
  REQUIRE(winner);
  CHECK(winner->mean >= 0.9);
  CHECK(r.best.preprocessor == winner->spec.preprocessor);
  CHECK(r.best.classifier == winner->spec.classifier);
  CHECK(r.best_mean == history.back());

  const auto fitted = finalize(data.x, data.y, 2, r.best, 3);
  CHECK(accuracy(data.y, fitted.predict(data.x)) >= 0.95);
  CHECK(serialize(fitted) == serialize(finalize(data.x, data.y, 2, r.best, 3)));
}

TEST_CASE("search is reproducible") {
  const auto data = planted(80, 4, 0, 2);
  const auto config = config_with(12, 5);
  const auto a = run_search(data.x, data.y, 2, config);
  const auto b = run_search(data.x, data.y, 2, config);
  CHECK(a.ledger.to_csv(false) == b.ledger.to_csv(false));
  CHECK(a.best == b.best);
}

TEST_CASE("constant columns make default pca invalid") {
  // 6 informative + 6 constant columns: centered rank 6 < default k 10.
  const auto data = planted(100, 6, 6, 3);
  SearchConfig config = config_with(1, 1);
  SearchLedger ledger;
  const auto shape = data_shape(data.x, data.y, config);
  CHECK(shape.rank == 6);
  phase1_enumerate(make_evaluator(data.x, data.y, 2, config), shape, ledger);
  REQUIRE(ledger.entries.size() == 12);
  for (const auto& e : ledger.entries) CHECK(e.valid == (e.spec.preprocessor != PreprocessorKind::pca));
}

TEST_CASE("all combos invalid") {
  SearchLedger ledger;
  try {
    phase1_enumerate([](const PipelineSpec&) -> EvalOutcome { throw Error(ErrorCode::invalid_argument, "no"); },
                     kShape, ledger);
    FAIL("expected all_combos_invalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::all_combos_invalid);
  }
  CHECK(ledger.entries.size() == 12);
}

TEST_CASE("sampled hyperparameters stay in range and are valid") {
  Rng rng(1);
  const DataShape shape{26, 20, 30, 0.3};
  for (auto pre : kSearchPreprocessors)
    for (auto clf : kSearchClassifiers)
      for (int i = 0; i < 200; ++i) {
        const auto s = sample_hyperparameters(pre, clf, shape, rng);
        CHECK(s.preprocessor == pre);
        CHECK(s.classifier == clf);
        if (clf == ClassifierKind::knn) {
          CHECK(s.knn.k >= 1);
          CHECK(s.knn.k <= 50);
        } else {
          CHECK(s.forest.n_trees >= 10);
          CHECK(s.forest.n_trees <= 500);
          CHECK(s.forest.min_samples_split >= 2);
          CHECK(s.forest.min_samples_split <= 20);
          CHECK((s.forest.max_depth == 0 || (s.forest.max_depth >= 2 && s.forest.max_depth <= 32)));
          CHECK(s.forest.max_features != MaxFeatures::all);
        }
        if (pre == PreprocessorKind::pca) {
          CHECK(s.preprocessor_params.pca_components >= 1);
          CHECK(s.preprocessor_params.pca_components <= 26);
        }
        if (pre == PreprocessorKind::variance_threshold) {
          CHECK(s.preprocessor_params.variance_threshold >= 0.0);
          CHECK(s.preprocessor_params.variance_threshold <= 0.5);
        }
      }
  auto bad = PipelineSpec::defaults(PreprocessorKind::pca, ClassifierKind::knn);
  bad.preprocessor_params.pca_components = 21;
  CHECK_FALSE(validity_issue(bad, shape).empty());
  bad.preprocessor_params.pca_components = 20;
  CHECK(validity_issue(bad, shape).empty());
  bad.knn.k = 31;
  CHECK_FALSE(validity_issue(bad, shape).empty());
}

TEST_CASE("config validation") {
  SearchConfig c;
  CHECK_NOTHROW(c.validate());
  c.early_stop_patience = 2000;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SearchConfig{};
  c.train_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("single-class finalize is a flagged constant predictor") {
  const auto data = planted(20, 3, 0, 4);
  const std::vector<int> y(20, 0);
  const auto fitted = finalize(data.x, y, 2, PipelineSpec{}, 1);
  CHECK(fitted.degenerate);
  for (int v : fitted.predict(data.x)) CHECK(v == 0);
}
