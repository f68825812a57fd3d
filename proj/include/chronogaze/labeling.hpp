#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chronogaze/features.hpp"
#include "chronogaze/gaze_data.hpp"

namespace chronogaze {

enum class LabelFamily { duration_estimate, ppot };

std::string_view to_string(LabelFamily family);
LabelFamily parse_label_family(std::string_view text);  // "duration" | "ppot"

/// Binary: e_rel <= 0.9 is under-estimation. Three classes: e_rel < 0.75 is
/// under, 0.75 <= e_rel <= 1.05 is correct, e_rel > 1.05 is over.
struct LabelSpec {
  LabelFamily family = LabelFamily::duration_estimate;
  int n_classes = 2;
  std::vector<double> thresholds;  // duration family only

  static LabelSpec duration(int n_classes);
  static LabelSpec ppot(int n_classes);
  static LabelSpec make(LabelFamily family, int n_classes);

  /// "duration_2", "ppot_3", ...
  std::string tag() const;
};

enum DurationClass : int { kUnder = 0, kCorrect = 1, kOver = 2 };
enum PpotClass : int { kSlow = 0, kNeutral = 1, kFast = 2 };

/// Binary duration labels use 0 = under, 1 = over. Binary PPOT labels use
/// 0 = slow, 1 = fast.
std::string_view class_name(LabelFamily family, int n_classes, int label);

double relative_estimation_error(double estimated, double actual);
int duration_label(double e_rel, int n_classes);
int ppot_label(int likert, int n_classes);

/// Label of one trial's questionnaire answer under `spec`.
int trial_label(const TrialRecord& trial, const LabelSpec& spec);

struct LabeledSample {
  std::size_t feature_index = 0;
  int label = 0;
  LabelFamily family = LabelFamily::duration_estimate;
  int n_classes = 2;
};

struct ClassDistribution {
  std::vector<std::size_t> counts;  // indexed by class
  double majority_share = 0.0;
};

ClassDistribution class_distribution(std::span<const int> labels, int n_classes);

struct LabelingResult {
  std::vector<LabeledSample> samples;
  ClassDistribution distribution;
};

/// Every slice inherits its trial's label. Throws missing_questionnaire.
LabelingResult label_dataset(std::span<const FeatureVector> features, const Dataset& dataset, const LabelSpec& spec);

/// Feature rows with their labels; the unit the learners and protocols work on.
struct LabeledData {
  std::vector<FeatureVector> rows;
  std::vector<int> labels;
  int n_classes = 2;

  std::size_t size() const { return rows.size(); }
  LabeledData subset(std::span<const std::size_t> indices) const;
};

LabeledData make_labeled_data(std::span<const FeatureVector> features, const LabelingResult& labeling);

std::string labels_csv(std::span<const FeatureVector> features, const LabelingResult& labeling);
void write_labels(const std::filesystem::path& path, std::span<const FeatureVector> features,
                  const LabelingResult& labeling);

/// Reads labels.csv and joins it onto `features` by provenance.
LabeledData read_labels(const std::filesystem::path& path, std::span<const FeatureVector> features);

}  // namespace chronogaze
