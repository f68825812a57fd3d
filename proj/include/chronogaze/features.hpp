#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chronogaze/event_stream.hpp"
#include "chronogaze/gaze_data.hpp"

namespace chronogaze {

inline constexpr std::size_t kFeatureCount = 26;
inline constexpr std::size_t kEyeMovementFeatureCount = 10;
inline constexpr std::size_t kPupilStatFeatureCount = 12;
inline constexpr std::size_t kIpaFeatureCount = 4;

using FeatureValues = std::array<double, kFeatureCount>;

/// Fixed, ordered feature vocabulary (eye movement, pupil statistics, IPA).
std::span<const std::string_view, kFeatureCount> feature_names();

/// Index of `name` in the vocabulary; throws unknown_feature.
std::size_t feature_index(std::string_view name);

struct Provenance {
  std::string participant_id;
  std::string trial_id;
  double t_start = 0.0;
  double t_w = 0.0;
  double planned_duration = 0.0;
  int n_active = 0;

  TrialKey trial() const { return {participant_id, trial_id}; }
  bool operator==(const Provenance&) const = default;
};

struct FeatureVector {
  Provenance provenance;
  FeatureValues values{};

  bool operator==(const FeatureVector&) const = default;
};

struct BaselineProfile {
  FeatureValues values{};
};

enum class EmptyWindowPolicy {
  zero,  // empty aggregates contribute 0
  drop,  // windows without fixations, saccades or valid samples are skipped
};

struct FeatureOptions {
  double min_confidence = 0.6;
  double ipa_rate_hz = 120.0;
  EmptyWindowPolicy empty_policy = EmptyWindowPolicy::zero;
};

/// Thread-safe counters for non-fatal extraction conditions.
struct FeatureDiagnostics {
  std::atomic<std::size_t> short_ipa_series{0};
  std::atomic<std::size_t> dropped_windows{0};
  std::atomic<std::size_t> trials_without_slices{0};
};

/// Raw (not baseline-subtracted) features over an arbitrary window.
struct WindowData {
  double t_start = 0.0;
  double t_w = 0.0;
  std::span<const GazeSample> gaze;
  std::span<const FixationEvent> fixations;
  std::span<const SaccadeEvent> saccades;
};

std::array<double, kEyeMovementFeatureCount> eye_movement_features(const WindowData& w);
std::array<double, kPupilStatFeatureCount> pupil_stat_features(const WindowData& w, double min_confidence);

struct IpaResult {
  double value = 0.0;     // surviving maxima per second
  std::size_t count = 0;  // surviving maxima
  bool too_short = false; // interpolated grid shorter than one filter length
};

/// Index of Pupillary Activity of a (timestamp, diameter) series over
/// [t_start, t_start + span): linear interpolation onto a uniform grid,
/// two-level sym16 periodized decomposition, modulus maxima of the level-2
/// detail, hard universal threshold median(|d|)/0.6745 * sqrt(2 ln n).
IpaResult ipa(std::span<const double> times, std::span<const double> diameters, double t_start, double span,
              double rate_hz = 120.0);

FeatureValues window_features(const WindowData& w, const FeatureOptions& options,
                              FeatureDiagnostics* diagnostics = nullptr);

WindowData window_data(const WindowSlice& slice);

/// Baseline window: starts at the first baseline gaze sample and lasts until
/// the last one plus the median sampling interval. All baseline fixations and
/// saccades belong to it.
WindowData baseline_window(const TrialRecord& trial, std::vector<SaccadeEvent>& saccade_storage);

/// Throws missing_baseline when the baseline gaze stream is empty.
BaselineProfile baseline_profile(const TrialRecord& trial, const FeatureOptions& options = {},
                                 FeatureDiagnostics* diagnostics = nullptr);

/// Baseline-subtracted features of every slice of every trial, in trial order
/// then slice order. Parallel over trials; output is order-deterministic.
std::vector<FeatureVector> extract_all(const Dataset& dataset, double t_w, const FeatureOptions& options = {},
                                       FeatureDiagnostics* diagnostics = nullptr);

std::string features_csv(std::span<const FeatureVector> features);
void write_features(const std::filesystem::path& path, std::span<const FeatureVector> features);
std::vector<FeatureVector> read_features(const std::filesystem::path& path);

}  // namespace chronogaze
