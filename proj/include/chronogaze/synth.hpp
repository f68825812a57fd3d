#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chronogaze/gaze_data.hpp"
#include "chronogaze/labeling.hpp"

namespace chronogaze::synth {

/// Experiment-only pupil offset for one participant, in units of noise_sigma.
struct ParticipantShift {
  int participant = 0;  // 0-based index
  double sigma = 0.0;
};

struct SynthConfig {
  int n_participants = 4;
  int trials_per_participant = 24;
  std::vector<double> durations = {60.0, 180.0, 300.0};
  double gaze_rate_hz = 120.0;
  double baseline_duration = 120.0;

  double fixation_rate_hz = 3.0;       // expected fixations per second
  double fixation_gamma_shape = 4.0;
  double fixation_gamma_scale = 0.06;  // s

  double pupil_base_mm = 3.5;
  double noise_sigma_mm = 0.1;
  double class_shift_sigma = 4.0;      // per-class mean step, in noise_sigma
  double user_offset_sigma = 2.0;      // spread of per-user offsets (both phases)
  std::vector<ParticipantShift> experiment_shifts;
  double px_per_mm = 20.0;

  double ipa_base_rate_hz = 0.5;       // pulses per second
  double ipa_class_rate_hz = 0.0;      // added per class index
  double ipa_pulse_mm = 0.3;
  double ipa_pulse_duration = 0.05;    // s

  double blink_fraction = 0.02;

  LabelFamily family = LabelFamily::duration_estimate;
  int n_classes = 2;
  std::uint64_t seed = 1;

  /// Throws invalid_argument.
  void validate() const;
};

SynthConfig config_from_json(std::string_view text);
SynthConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const SynthConfig& config);

std::string participant_id(int index);
std::string trial_id(int index);

struct GeneratedData {
  Dataset dataset;
  std::vector<int> planted;  // planted class per trial, parallel to dataset.trials
};

/// Deterministic per (seed, participant, trial); trials are generated in
/// parallel. Timestamps start at 0 in each phase.
GeneratedData generate_dataset(const SynthConfig& config);

/// Writes the four CSV files into `dir` and returns their paths.
DatasetPaths generate(const SynthConfig& config, const std::filesystem::path& dir);

/// Raw data of one window for the oracle. Streams are whole phases; the
/// oracle selects the window's samples and events itself unless
/// whole_phase is set.
struct OracleInput {
  std::span<const GazeSample> gaze;
  std::span<const FixationEvent> fixations;
  double t_start = 0.0;
  double t_w = 0.0;
  bool whole_phase = false;
  double min_confidence = 0.6;
  double ipa_rate_hz = 120.0;
};

/// Recomputes one feature from its definition. Throws unknown_feature.
double oracle_feature(std::string_view name, const OracleInput& input);

/// Oracle window covering a trial's baseline phase.
OracleInput oracle_baseline(const TrialRecord& trial);

/// Baseline-subtracted oracle value for the experiment window
/// [t_start, t_start + t_w) of `trial`.
double oracle_slice_feature(std::string_view name, const TrialRecord& trial, double t_start, double t_w,
                            double min_confidence = 0.6);

}  // namespace chronogaze::synth
