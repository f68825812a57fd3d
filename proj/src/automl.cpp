#include "chronogaze/automl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "chronogaze/csv.hpp"
#include "chronogaze/error.hpp"
#include "chronogaze/gaze_data.hpp"
#include "chronogaze/parallel.hpp"

namespace chronogaze::automl {

using learn::ClassifierKind;
using learn::PipelineSpec;
using learn::PreprocessorKind;

void SearchConfig::validate() const {
  if (max_hpo_steps < 0) throw Error(ErrorCode::invalid_argument, "max_hpo_steps must be non-negative");
  if (early_stop_patience < 1 || early_stop_patience > std::max(max_hpo_steps, 1))
    throw Error(ErrorCode::invalid_argument, "patience must lie in [1, max_hpo_steps]");
  if (n_eval_splits < 1) throw Error(ErrorCode::invalid_argument, "n_eval_splits must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::invalid_argument, "train_fraction must lie in (0, 1)");
  if (max_resample_attempts < 1) throw Error(ErrorCode::invalid_argument, "max_resample_attempts must be positive");
}

DataShape data_shape(const learn::Matrix& x, std::span<const int> y, const SearchConfig& config) {
  DataShape shape;
  shape.n_features = x.cols();
  shape.rank = learn::centered_rank(x);
  // Partition sizes do not depend on the seed.
  shape.min_train_size = stratified_partition(y, 1.0 - config.train_fraction, 0).first.size();
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= static_cast<double>(std::max<std::size_t>(x.rows(), 1));
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) ss += (x(r, c) - mean) * (x(r, c) - mean);
    shape.max_column_variance =
        std::max(shape.max_column_variance, ss / static_cast<double>(std::max<std::size_t>(x.rows(), 1)));
  }
  return shape;
}

std::string validity_issue(const PipelineSpec& spec, const DataShape& shape) {
  if (spec.preprocessor == PreprocessorKind::pca) {
    const int k = spec.preprocessor_params.pca_components > 0 ? spec.preprocessor_params.pca_components
                                                              : learn::default_pca_components(shape.n_features);
    if (static_cast<std::size_t>(k) > shape.rank)
      return "pca k=" + std::to_string(k) + " exceeds rank " + std::to_string(shape.rank);
  }
  if (spec.preprocessor == PreprocessorKind::variance_threshold &&
      !(shape.max_column_variance > spec.preprocessor_params.variance_threshold))
    return "variance threshold removes every column";
  if (spec.classifier == ClassifierKind::knn && static_cast<std::size_t>(spec.knn.k) > shape.min_train_size)
    return "knn k=" + std::to_string(spec.knn.k) + " exceeds training size " + std::to_string(shape.min_train_size);
  return {};
}

PipelineSpec sample_hyperparameters(PreprocessorKind preprocessor, ClassifierKind classifier, const DataShape& shape,
                                    Rng& rng) {
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  PipelineSpec s = PipelineSpec::defaults(preprocessor, classifier);

  if (preprocessor == PreprocessorKind::variance_threshold)
    s.preprocessor_params.variance_threshold = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
  if (preprocessor == PreprocessorKind::pca)
    s.preprocessor_params.pca_components = uniform_int(1, static_cast<int>(std::max<std::size_t>(shape.n_features, 1)));

  if (classifier == ClassifierKind::random_forest || classifier == ClassifierKind::extra_trees) {
    s.forest.n_trees = uniform_int(10, 500);
    const int depth_choice = uniform_int(1, 32);  // 1 encodes unlimited, 2..32 literal
    s.forest.max_depth = depth_choice == 1 ? 0 : depth_choice;
    s.forest.min_samples_split = uniform_int(2, 20);
    constexpr learn::MaxFeatures choices[] = {learn::MaxFeatures::sqrt, learn::MaxFeatures::log2,
                                              learn::MaxFeatures::half};
    s.forest.max_features = choices[uniform_int(0, 2)];
  } else if (classifier == ClassifierKind::knn) {
    s.knn.k = uniform_int(1, 50);
    s.knn.vote = uniform_int(0, 1) == 0 ? learn::Vote::uniform : learn::Vote::distance;
  }
  return s;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Runs the evaluator and fills the outcome part of an entry.
void score(const Evaluator& evaluate, LedgerEntry& entry) {
  const auto start = std::chrono::steady_clock::now();
  try {
    auto outcome = evaluate(entry.spec);
    entry.valid = true;
    entry.split_accuracies = std::move(outcome.split_accuracies);
    entry.mean = outcome.mean;
  } catch (const Error& e) {
    entry.valid = false;
    entry.error = e.what();
  }
  entry.wall_seconds = seconds_since(start);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

std::size_t SearchLedger::count(int phase) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const LedgerEntry& e) { return e.phase == phase; }));
}

std::size_t SearchLedger::valid_count(int phase) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [&](const LedgerEntry& e) { return e.phase == phase && e.valid; }));
}

std::vector<double> SearchLedger::incumbent_history() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.incumbent_mean);
  return out;
}

std::string SearchLedger::to_csv(bool include_timing) const {
  std::string out = "phase,step,valid,mean_accuracy,split_accuracies,incumbent_mean,improved,";
  if (include_timing) out += "wall_seconds,";
  out += "preprocessor,classifier,spec,error\n";
  for (const auto& e : entries) {
    std::string splits;
    for (std::size_t i = 0; i < e.split_accuracies.size(); ++i) {
      if (i) splits += ';';
      splits += csv::format_double(e.split_accuracies[i]);
    }
    out += std::to_string(e.phase) + ',' + std::to_string(e.step) + ',' + (e.valid ? "1" : "0") + ',' +
           (e.valid ? csv::format_double(e.mean) : std::string()) + ',' + splits + ',' +
           csv::format_double(e.incumbent_mean) + ',' + (e.improved ? "1" : "0") + ',';
    if (include_timing) out += csv::format_double(e.wall_seconds) + ',';
    out += std::string(learn::to_string(e.spec.preprocessor)) + ',' + std::string(learn::to_string(e.spec.classifier)) +
           ',' + quote(e.spec.describe()) + ',' + quote(e.error) + '\n';
  }
  return out;
}

Phase1Result phase1_enumerate(const Evaluator& evaluate, const DataShape& shape, SearchLedger& ledger) {
  std::vector<LedgerEntry> combos;
  for (auto pre : learn::kSearchPreprocessors)
    for (auto clf : learn::kSearchClassifiers) {
      LedgerEntry e;
      e.phase = 1;
      e.step = static_cast<int>(combos.size());
      e.spec = PipelineSpec::defaults(pre, clf);
      combos.push_back(std::move(e));
    }

  parallel_for(combos.size(), [&](std::size_t i) {
    auto& e = combos[i];
    if (auto issue = validity_issue(e.spec, shape); !issue.empty()) {
      e.valid = false;
      e.error = issue;
      return;
    }
    score(evaluate, e);
  });

  Phase1Result best;
  bool found = false;
  for (auto& e : combos) {
    if (e.valid && (!found || e.mean > best.mean)) {
      best = {e.spec, e.mean};
      found = true;
      e.improved = true;
    }
    e.incumbent_mean = found ? best.mean : 0.0;
    ledger.entries.push_back(std::move(e));
  }
  if (!found) throw Error(ErrorCode::all_combos_invalid, "no preprocessor/classifier pair could be evaluated");
  return best;
}

SearchResult phase2_random_search(const Evaluator& evaluate, const DataShape& shape, const Phase1Result& winner,
                                  const SearchConfig& config, SearchLedger ledger) {
  config.validate();
  SearchResult result;
  result.best = winner.spec;
  result.best_mean = winner.mean;

  Rng rng(derive_seed(config.seed, {2}));
  int stale = 0;
  for (int step = 0; step < config.max_hpo_steps; ++step) {
    LedgerEntry e;
    e.phase = 2;
    e.step = step;

    bool drawn = false;
    for (int attempt = 0; attempt < config.max_resample_attempts; ++attempt) {
      e.spec = sample_hyperparameters(winner.spec.preprocessor, winner.spec.classifier, shape, rng);
      if (validity_issue(e.spec, shape).empty()) {
        drawn = true;
        break;
      }
    }

    if (!drawn) {
      e.valid = false;
      e.error = "no valid configuration within the resampling cap";
    } else {
      score(evaluate, e);
    }

    if (e.valid) {
      if (e.mean > result.best_mean) {
        result.best = e.spec;
        result.best_mean = e.mean;
        e.improved = true;
        stale = 0;
      } else {
        ++stale;
      }
    }
    e.incumbent_mean = result.best_mean;
    ledger.entries.push_back(std::move(e));
    if (stale >= config.early_stop_patience) {
      result.early_stopped = true;
      break;
    }
  }
  result.ledger = std::move(ledger);
  return result;
}

Evaluator make_evaluator(const learn::Matrix& x, std::span<const int> y, int n_classes, const SearchConfig& config) {
  const std::uint64_t split_seed = derive_seed(config.seed, {1});
  return [&x, y, n_classes, split_seed, splits = config.n_eval_splits,
          fraction = config.train_fraction](const PipelineSpec& spec) {
    auto r = learn::evaluate_pipeline(spec, x, y, n_classes, splits, fraction, split_seed);
    return EvalOutcome{std::move(r.accuracies), r.mean};
  };
}

SearchResult run_search(const Evaluator& evaluate, const DataShape& shape, const SearchConfig& config) {
  config.validate();
  SearchLedger ledger;
  const auto winner = phase1_enumerate(evaluate, shape, ledger);
  return phase2_random_search(evaluate, shape, winner, config, std::move(ledger));
}

SearchResult run_search(const learn::Matrix& x, std::span<const int> y, int n_classes, const SearchConfig& config) {
  return run_search(make_evaluator(x, y, n_classes, config), data_shape(x, y, config), config);
}

learn::FittedPipeline finalize(const learn::Matrix& x, std::span<const int> y, int n_classes,
                               const learn::PipelineSpec& spec, std::uint64_t seed) {
  return learn::fit_pipeline(spec, x, y, n_classes, seed);
}

}  // namespace chronogaze::automl
