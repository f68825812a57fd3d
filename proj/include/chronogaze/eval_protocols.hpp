#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chronogaze/labeling.hpp"
#include "chronogaze/learn/pipeline.hpp"

namespace chronogaze::eval {

enum class ConditionKey { n_active, planned_duration };

std::string_view to_string(ConditionKey key);

struct Setting {
  LabelFamily family = LabelFamily::duration_estimate;
  int n_classes = 2;
  double t_w = 0.0;
  std::string protocol;  // "holdout", "n_active", "planned_duration"
  std::string subset;    // "all" or the condition value

  /// "duration_2_tw10"
  std::string tag() const;
};

struct EvaluationReport {
  Setting setting;
  std::vector<double> accuracies;  // one per repetition
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single repetition
  int repetitions = 0;
  std::size_t n_samples = 0;  // size of the evaluated subset
  std::size_t n_trials = 0;
  std::vector<std::size_t> class_counts;
  double majority_share = 0.0;
  bool single_repetition = false;
  bool degenerate = false;
  std::string note;
};

/// Mean and sample standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

/// Each repetition refits on a fresh stratified 80 % of `analysis`
/// (derive_seed(seed, {r})) and scores every test sample. Majority share and
/// class counts describe the test set. Throws leakage when a test row's
/// (participant, trial, t_start) also occurs in the analysis set, and
/// stratification_impossible for fewer than two analysis samples.
EvaluationReport holdout_eval(const learn::PipelineSpec& spec, const LabeledData& analysis, const LabeledData& test,
                              int repetitions, std::uint64_t seed, double train_fraction = 0.8);

/// One report per distinct key value, ascending. Each subset gets a
/// stratified shuffle split per repetition. Degenerate subsets (one slice per
/// trial, a class with fewer than two members, or a failed fit) are reported
/// with a flag instead of aborting.
std::vector<EvaluationReport> condition_split_eval(const learn::PipelineSpec& spec, const LabeledData& data,
                                                   ConditionKey key, int repetitions, std::uint64_t seed,
                                                   double train_fraction = 0.8);

/// Slices that may be used for personalization: those ending by the setup
/// window, or the first slice of each trial when t_w exceeds it.
bool is_setup_slice(const Provenance& p, double setup_window);

struct FinetuneEntry {
  double t_w = 0.0;
  std::vector<double> with_setup;     // per repetition
  std::vector<double> without_setup;  // per repetition
  double accuracy_with = 0.0;
  double accuracy_without = 0.0;
  double delta_pp = 0.0;  // 100 * (accuracy_with - accuracy_without)
  std::size_t n_setup = 0;
  std::size_t n_eval = 0;
};

struct FinetuneReport {
  std::string participant_id;
  std::vector<FinetuneEntry> entries;  // one per t_w
};

/// Condition A trains on other participants plus the target's setup slices,
/// condition B on other participants only; both score the target's remaining
/// slices. Repetition r fits both with derive_seed(seed, {r}). Throws
/// invalid_argument (unknown target or no other participant) and
/// no_eval_slices.
FinetuneEntry finetune_eval(const learn::PipelineSpec& spec, const LabeledData& data,
                            std::string_view target_participant, int repetitions, std::uint64_t seed,
                            double setup_window = 30.0);

/// Evaluates a majority-vote dummy in the same holdout protocol.
EvaluationReport majority_baseline(const LabeledData& analysis, const LabeledData& test, int repetitions,
                                   std::uint64_t seed);

struct ReportBundle {
  std::vector<EvaluationReport> reports;
  std::vector<FinetuneReport> finetune;
};

/// protocol -> setting -> subset -> metrics.
std::string report_json(const ReportBundle& bundle);
/// One flat row per EvaluationReport.
std::string report_csv(const ReportBundle& bundle);
std::string finetune_csv(std::span<const FinetuneReport> reports);

/// Accuracy against condition value with +-1 std bars and the majority share
/// as a dashed reference line.
std::string condition_plot_svg(std::span<const EvaluationReport> reports, std::string_view title);

}  // namespace chronogaze::eval
