#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chronogaze/learn/pipeline.hpp"
#include "chronogaze/rng.hpp"

namespace chronogaze::automl {

struct SearchConfig {
  int max_hpo_steps = 1024;
  int early_stop_patience = 100;
  int n_eval_splits = 5;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  int max_resample_attempts = 1000;

  /// Throws invalid_argument when an invariant is violated.
  void validate() const;
};

struct EvalOutcome {
  std::vector<double> split_accuracies;
  double mean = 0.0;
};

/// Scores one spec. Throwing chronogaze::Error marks the spec invalid.
using Evaluator = std::function<EvalOutcome(const learn::PipelineSpec&)>;

/// What hyperparameter validity depends on.
struct DataShape {
  std::size_t n_features = 0;
  std::size_t rank = 0;            // centered rank, bounds pca k
  std::size_t min_train_size = 0;  // bounds knn k
  double max_column_variance = 0;  // bounds the variance threshold
};

DataShape data_shape(const learn::Matrix& x, std::span<const int> y, const SearchConfig& config);

/// Empty string when valid, otherwise the reason.
std::string validity_issue(const learn::PipelineSpec& spec, const DataShape& shape);

/// Uniform draw from the declared ranges for the given pair.
learn::PipelineSpec sample_hyperparameters(learn::PreprocessorKind preprocessor, learn::ClassifierKind classifier,
                                           const DataShape& shape, Rng& rng);

struct LedgerEntry {
  int phase = 1;
  int step = 0;  // 0-based within its phase
  learn::PipelineSpec spec;
  bool valid = false;
  std::string error;
  std::vector<double> split_accuracies;
  double mean = 0.0;
  double wall_seconds = 0.0;
  double incumbent_mean = 0.0;  // after this entry
  bool improved = false;
};

struct SearchLedger {
  std::vector<LedgerEntry> entries;

  std::size_t count(int phase) const;
  std::size_t valid_count(int phase) const;
  std::vector<double> incumbent_history() const;
  /// One row per evaluation. Wall time is the only non-deterministic column
  /// and is omitted when include_timing is false.
  std::string to_csv(bool include_timing = true) const;
};

struct Phase1Result {
  learn::PipelineSpec spec;
  double mean = 0.0;
};

/// Evaluates all preprocessor x classifier pairs with default
/// hyperparameters in enumeration order; the first best mean wins. Throws
/// all_combos_invalid.
Phase1Result phase1_enumerate(const Evaluator& evaluate, const DataShape& shape, SearchLedger& ledger);

struct SearchResult {
  learn::PipelineSpec best;
  double best_mean = 0.0;
  SearchLedger ledger;
  bool early_stopped = false;
};

/// Random search over the winner's hyperparameters. Invalid draws are
/// resampled without consuming budget (up to max_resample_attempts, after
/// which the step is consumed as invalid). Stops after max_hpo_steps steps or
/// after early_stop_patience consecutive valid evaluations without a strict
/// improvement of the incumbent.
SearchResult phase2_random_search(const Evaluator& evaluate, const DataShape& shape, const Phase1Result& winner,
                                  const SearchConfig& config, SearchLedger ledger);

/// Paired evaluator: all specs share the split seed derived from config.seed.
Evaluator make_evaluator(const learn::Matrix& x, std::span<const int> y, int n_classes, const SearchConfig& config);

SearchResult run_search(const Evaluator& evaluate, const DataShape& shape, const SearchConfig& config);
SearchResult run_search(const learn::Matrix& x, std::span<const int> y, int n_classes, const SearchConfig& config);

/// Refits the chosen spec on all samples.
learn::FittedPipeline finalize(const learn::Matrix& x, std::span<const int> y, int n_classes,
                               const learn::PipelineSpec& spec, std::uint64_t seed);

}  // namespace chronogaze::automl
