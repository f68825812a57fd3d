#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chronogaze/gaze_data.hpp"

namespace chronogaze {

/// Gap between two consecutive fixations. Amplitude is in normalized screen
/// units, so speed is normalized-units per second.
struct SaccadeEvent {
  double start = 0.0;
  double duration = 0.0;
  double amplitude = 0.0;
  double speed = 0.0;

  bool operator==(const SaccadeEvent&) const = default;
};

/// One saccade per adjacent fixation pair with a positive gap.
std::vector<SaccadeEvent> derive_saccades(std::span<const FixationEvent> fixations);

inline constexpr double kStandardWindows[] = {1, 2, 5, 10, 15, 20, 30, 45, 60};

/// Non-owning view of one window. Gaze samples fall in [t_start, t_start + t_w);
/// fixations and saccades are assigned by start time.
struct WindowSlice {
  const TrialRecord* trial = nullptr;
  double t_start = 0.0;
  double t_w = 0.0;
  std::span<const GazeSample> gaze;
  std::span<const FixationEvent> fixations;
  std::span<const SaccadeEvent> saccades;
};

/// Slices of one trial. Owns the derived saccades the slices point into, so it
/// is move-only.
class TrialSlices {
 public:
  TrialSlices() = default;
  TrialSlices(const TrialSlices&) = delete;
  TrialSlices& operator=(const TrialSlices&) = delete;
  TrialSlices(TrialSlices&&) = default;
  TrialSlices& operator=(TrialSlices&&) = default;

  std::span<const WindowSlice> slices() const { return slices_; }
  std::span<const SaccadeEvent> saccades() const { return saccades_; }
  /// Set when t_w exceeds the trial span and no slice could be produced.
  bool window_longer_than_trial() const { return window_longer_than_trial_; }

 private:
  friend TrialSlices slice_trial(const TrialRecord& trial, double t_w);
  std::vector<SaccadeEvent> saccades_;
  std::vector<WindowSlice> slices_;
  bool window_longer_than_trial_ = false;
};

/// The sliced span of a trial is its planned duration.
double trial_span(const TrialRecord& trial);

/// floor(span / t_w), tolerant to representation error in the ratio.
std::size_t slice_count(double span, double t_w);

/// Contiguous non-overlapping windows from t = 0; the trailing remainder
/// shorter than t_w is discarded. Requires a screened (time-ordered) trial.
TrialSlices slice_trial(const TrialRecord& trial, double t_w);

}  // namespace chronogaze
