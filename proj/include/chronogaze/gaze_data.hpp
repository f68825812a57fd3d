#pragma once

// Canonical data model for eye-tracking trials and the four-file CSV
// ingestion/serialization path.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chronogaze {

struct GazeSample {
  double timestamp = 0.0;     // s
  double pupil_x = 0.0;       // normalized [0,1]
  double pupil_y = 0.0;       // normalized [0,1]
  double diam2d_left = 0.0;   // px
  double diam2d_right = 0.0;  // px
  double diam3d_left = 0.0;   // mm
  double diam3d_right = 0.0;  // mm
  double confidence = 0.0;    // [0,1]

  bool operator==(const GazeSample&) const = default;
};

struct FixationEvent {
  std::int64_t id = 0;
  double start = 0.0;       // s
  double duration = 0.0;    // s, > 0
  double dispersion = 0.0;  // deg
  double x = 0.0;           // normalized centroid
  double y = 0.0;

  double end() const { return start + duration; }
  bool operator==(const FixationEvent&) const = default;
};

struct TrialKey {
  std::string participant_id;
  std::string trial_id;

  auto operator<=>(const TrialKey&) const = default;
  bool operator==(const TrialKey&) const = default;
};

std::string to_string(const TrialKey& key);

inline constexpr double kBaselineMaxSpan = 120.0;
inline constexpr double kMaxEstimatedDuration = 600.0;

bool is_valid_planned_duration(double seconds);
bool is_valid_n_active(int n);

struct QuestionnaireAnswer {
  double estimated_duration = 0.0;  // s, [0, 600]
  int ppot_likert = 3;              // 1 = very slow ... 5 = very fast

  bool operator==(const QuestionnaireAnswer&) const = default;
};

/// One experiment run. Timestamps of each phase are relative to that phase's
/// earliest gaze sample or fixation start.
struct TrialRecord {
  TrialKey key;
  double planned_duration = 0.0;  // s, one of {60, 180, 300}
  int n_active = 1;               // one of {1, 3, ..., 15}
  std::vector<GazeSample> gaze;
  std::vector<FixationEvent> fixations;
  std::vector<GazeSample> baseline_gaze;
  std::vector<FixationEvent> baseline_fixations;
  std::optional<QuestionnaireAnswer> answer;

  bool operator==(const TrialRecord&) const = default;
};

enum class ExclusionReason { empty_stream, non_monotone_timestamps, low_confidence, missing_baseline };

std::string_view to_string(ExclusionReason reason);

struct ScreeningEntry {
  TrialKey trial;
  ExclusionReason reason;
};

/// Retained trials, ordered by key; excluded trials are only in the log.
struct Dataset {
  std::vector<TrialRecord> trials;
  std::vector<ScreeningEntry> screening_log;

  const TrialRecord* find(const TrialKey& key) const;
};

struct ScreeningPolicy {
  bool reject_empty_streams = true;
  bool reject_non_monotone = true;
  bool reject_low_confidence = true;
  bool reject_missing_baseline = true;
  double min_mean_confidence = 0.6;
};

/// Total and deterministic. Checks run in a fixed order and the first failure
/// is reported.
std::optional<ExclusionReason> screen_trial(const TrialRecord& trial, const ScreeningPolicy& policy = {});

struct DatasetPaths {
  std::filesystem::path gaze;
  std::filesystem::path fixations;
  std::filesystem::path trials;
  std::filesystem::path questionnaire;

  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

/// Loads, validates, normalizes and screens. Throws Error with missing_file,
/// schema_mismatch, row_parse (first offending line) or cross_reference.
Dataset load_dataset(const DatasetPaths& paths, const ScreeningPolicy& policy = {});

/// Trials + questionnaire only; streams are left empty and no screening runs.
Dataset load_metadata(const std::filesystem::path& trials_path, const std::filesystem::path& questionnaire_path);

/// Writes the retained trials in the four-file layout (atomically per file).
void write_dataset(const Dataset& dataset, const DatasetPaths& paths);

/// Shifts each phase so its earliest event is at t = 0.
void normalize_timestamps(TrialRecord& trial);

enum class SplitGranularity { slice, trial };

std::string_view to_string(SplitGranularity g);
SplitGranularity parse_split_granularity(std::string_view text);

struct IndexSplit {
  std::vector<std::size_t> analysis;
  std::vector<std::size_t> test;
};

/// Stratified, seeded analysis/test partition of labeled items. With trial
/// granularity `groups` holds one group id per item; a group goes wholly to one
/// side and is stratified by its first item's label. Both index lists are
/// returned sorted. Throws empty_dataset or single_class.
IndexSplit split_analysis_test(std::span<const int> labels, std::span<const std::size_t> groups,
                               double test_fraction, std::uint64_t seed, SplitGranularity granularity);

/// Per-class stratified subset draw used throughout: in each class, after a
/// seeded shuffle, round(fraction * n_c) members go to the "second" side,
/// clamped to [1, n_c - 1] when n_c >= 2 (classes of one stay on the first
/// side). Returns {first, second}, each sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_partition(
    std::span<const int> labels, double second_fraction, std::uint64_t seed);

}  // namespace chronogaze
