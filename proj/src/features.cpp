#include "chronogaze/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chronogaze/csv.hpp"
#include "chronogaze/error.hpp"
#include "chronogaze/parallel.hpp"
#include "chronogaze/wavelet.hpp"

namespace chronogaze {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "fixation_freq",      "fixation_dur_mean",  "fixation_dur_max",  "fixation_disp_mean", "fixation_disp_max",
    "saccade_freq",       "saccade_dur_mean",   "saccade_dur_max",   "saccade_speed_mean", "saccade_speed_max",
    "diam2d_left_mean",   "diam2d_left_max",    "diam2d_left_std",   "diam2d_right_mean",  "diam2d_right_max",
    "diam2d_right_std",   "diam3d_left_mean",   "diam3d_left_max",   "diam3d_left_std",    "diam3d_right_mean",
    "diam3d_right_max",   "diam3d_right_std",   "ipa_2d_left",       "ipa_2d_right",       "ipa_3d_left",
    "ipa_3d_right"};

constexpr double kIpaZeroTolerance = 1e-12;

struct MeanMax {
  double mean = 0.0;
  double max = 0.0;
};

template <class Range, class Proj>
MeanMax mean_max(const Range& items, Proj proj) {
  if (items.empty()) return {};
  double sum = 0.0;
  double max = -std::numeric_limits<double>::infinity();
  for (const auto& item : items) {
    const double v = proj(item);
    sum += v;
    max = std::max(max, v);
  }
  return {sum / static_cast<double>(items.size()), max};
}

/// mean, max, population std.
std::array<double, 3> describe(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0, 0.0};
  double sum = 0.0;
  double max = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    sum += x;
    max = std::max(max, x);
  }
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, max, std::sqrt(ss / static_cast<double>(v.size()))};
}

using DiameterField = double GazeSample::*;
constexpr std::array<DiameterField, 4> kDiameterFields = {&GazeSample::diam2d_left, &GazeSample::diam2d_right,
                                                          &GazeSample::diam3d_left, &GazeSample::diam3d_right};

/// Modulus maxima test on |d| with edge replication at both ends.
bool is_modulus_maximum(std::span<const double> magnitude, std::size_t i) {
  const double here = magnitude[i];
  const double left = i > 0 ? magnitude[i - 1] : here;
  const double right = i + 1 < magnitude.size() ? magnitude[i + 1] : here;
  return left <= here && here >= right && (left < here || here > right);
}

double median_of(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

double median_interval(std::span<const GazeSample> gaze) {
  if (gaze.size() < 2) return 0.0;
  std::vector<double> dt;
  dt.reserve(gaze.size() - 1);
  for (std::size_t i = 1; i < gaze.size(); ++i) dt.push_back(gaze[i].timestamp - gaze[i - 1].timestamp);
  return median_of(std::move(dt));
}

}  // namespace

std::span<const std::string_view, kFeatureCount> feature_names() { return kNames; }

std::size_t feature_index(std::string_view name) {
  auto it = std::find(kNames.begin(), kNames.end(), name);
  if (it == kNames.end()) throw Error(ErrorCode::unknown_feature, std::string(name));
  return static_cast<std::size_t>(it - kNames.begin());
}

std::array<double, kEyeMovementFeatureCount> eye_movement_features(const WindowData& w) {
  const auto fix_dur = mean_max(w.fixations, [](const FixationEvent& f) { return f.duration; });
  const auto fix_disp = mean_max(w.fixations, [](const FixationEvent& f) { return f.dispersion; });
  const auto sac_dur = mean_max(w.saccades, [](const SaccadeEvent& s) { return s.duration; });
  const auto sac_speed = mean_max(w.saccades, [](const SaccadeEvent& s) { return s.speed; });
  return {static_cast<double>(w.fixations.size()) / w.t_w,
          fix_dur.mean,
          fix_dur.max,
          fix_disp.mean,
          fix_disp.max,
          static_cast<double>(w.saccades.size()) / w.t_w,
          sac_dur.mean,
          sac_dur.max,
          sac_speed.mean,
          sac_speed.max};
}

std::array<double, kPupilStatFeatureCount> pupil_stat_features(const WindowData& w, double min_confidence) {
  std::array<double, kPupilStatFeatureCount> out{};
  std::vector<double> values;
  values.reserve(w.gaze.size());
  for (std::size_t k = 0; k < kDiameterFields.size(); ++k) {
    values.clear();
    for (const auto& s : w.gaze)
      if (s.confidence >= min_confidence) values.push_back(s.*kDiameterFields[k]);
    const auto d = describe(values);
    std::copy(d.begin(), d.end(), out.begin() + static_cast<std::ptrdiff_t>(3 * k));
  }
  return out;
}

IpaResult ipa(std::span<const double> times, std::span<const double> diameters, double t_start, double span,
              double rate_hz) {
  IpaResult result;
  if (times.empty() || !(span > 0.0)) return result;

  const auto n = static_cast<std::size_t>(std::floor(span * rate_hz + 1e-9));
  if (n < wavelet::kSym16Lowpass.size()) {
    result.too_short = true;
    return result;
  }

  std::vector<double> grid(n);
  std::size_t j = 0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t_start + static_cast<double>(i) / rate_hz;
    while (j + 1 < times.size() && times[j + 1] <= t) ++j;
    double v;
    if (t <= times.front()) {
      v = diameters.front();
    } else if (j + 1 >= times.size()) {
      v = diameters.back();
    } else {
      const double dt = times[j + 1] - times[j];
      const double a = dt > 0.0 ? (t - times[j]) / dt : 1.0;
      v = diameters[j] + a * (diameters[j + 1] - diameters[j]);
    }
    grid[i] = v;
    scale = std::max(scale, std::abs(v));
  }

  auto detail = wavelet::level2_detail(grid);
  std::vector<double> magnitude(detail.size());
  const double zero_below = kIpaZeroTolerance * scale;
  for (std::size_t i = 0; i < detail.size(); ++i) {
    const double m = std::abs(detail[i]);
    magnitude[i] = m <= zero_below ? 0.0 : m;
  }

  const double sigma = median_of(magnitude) / 0.6745;
  const double lambda = sigma * std::sqrt(2.0 * std::log(static_cast<double>(magnitude.size())));
  for (std::size_t i = 0; i < magnitude.size(); ++i)
    if (is_modulus_maximum(magnitude, i) && magnitude[i] > lambda) ++result.count;
  result.value = static_cast<double>(result.count) / span;
  return result;
}

FeatureValues window_features(const WindowData& w, const FeatureOptions& options, FeatureDiagnostics* diagnostics) {
  FeatureValues out{};
  const auto eye = eye_movement_features(w);
  const auto pupil = pupil_stat_features(w, options.min_confidence);
  std::copy(eye.begin(), eye.end(), out.begin());
  std::copy(pupil.begin(), pupil.end(), out.begin() + kEyeMovementFeatureCount);

  std::vector<double> times, values;
  times.reserve(w.gaze.size());
  values.reserve(w.gaze.size());
  for (std::size_t k = 0; k < kDiameterFields.size(); ++k) {
    times.clear();
    values.clear();
    for (const auto& s : w.gaze) {
      if (s.confidence < options.min_confidence) continue;
      times.push_back(s.timestamp);
      values.push_back(s.*kDiameterFields[k]);
    }
    const auto r = ipa(times, values, w.t_start, w.t_w, options.ipa_rate_hz);
    if (r.too_short && diagnostics) ++diagnostics->short_ipa_series;
    // Vocabulary order is ipa_2d_left, ipa_2d_right, ipa_3d_left, ipa_3d_right,
    // which matches kDiameterFields.
    out[kEyeMovementFeatureCount + kPupilStatFeatureCount + k] = r.value;
  }
  return out;
}

WindowData window_data(const WindowSlice& slice) {
  return {slice.t_start, slice.t_w, slice.gaze, slice.fixations, slice.saccades};
}

WindowData baseline_window(const TrialRecord& trial, std::vector<SaccadeEvent>& saccade_storage) {
  const auto& gaze = trial.baseline_gaze;
  if (gaze.empty()) throw Error(ErrorCode::missing_baseline, to_string(trial.key));
  saccade_storage = derive_saccades(trial.baseline_fixations);
  WindowData w;
  w.t_start = gaze.front().timestamp;
  w.t_w = gaze.back().timestamp - gaze.front().timestamp + median_interval(gaze);
  if (!(w.t_w > 0.0)) throw Error(ErrorCode::missing_baseline, to_string(trial.key) + ": zero-length baseline");
  w.gaze = gaze;
  w.fixations = trial.baseline_fixations;
  w.saccades = saccade_storage;
  return w;
}

BaselineProfile baseline_profile(const TrialRecord& trial, const FeatureOptions& options,
                                 FeatureDiagnostics* diagnostics) {
  std::vector<SaccadeEvent> saccades;
  const auto w = baseline_window(trial, saccades);
  return {window_features(w, options, diagnostics)};
}

std::vector<FeatureVector> extract_all(const Dataset& dataset, double t_w, const FeatureOptions& options,
                                       FeatureDiagnostics* diagnostics) {
  std::vector<std::vector<FeatureVector>> per_trial(dataset.trials.size());
  parallel_for(dataset.trials.size(), [&](std::size_t i) {
    const auto& trial = dataset.trials[i];
    const auto sliced = slice_trial(trial, t_w);
    if (sliced.slices().empty()) {
      if (diagnostics) ++diagnostics->trials_without_slices;
      return;
    }
    const auto baseline = baseline_profile(trial, options, diagnostics);
    auto& out = per_trial[i];
    out.reserve(sliced.slices().size());
    for (const auto& slice : sliced.slices()) {
      if (options.empty_policy == EmptyWindowPolicy::drop) {
        const bool any_valid = std::any_of(slice.gaze.begin(), slice.gaze.end(), [&](const GazeSample& s) {
          return s.confidence >= options.min_confidence;
        });
        if (slice.fixations.empty() || slice.saccades.empty() || !any_valid) {
          if (diagnostics) ++diagnostics->dropped_windows;
          continue;
        }
      }
      FeatureVector fv;
      fv.provenance = {trial.key.participant_id, trial.key.trial_id, slice.t_start,
                       slice.t_w,                trial.planned_duration, trial.n_active};
      fv.values = window_features(window_data(slice), options, diagnostics);
      for (std::size_t k = 0; k < kFeatureCount; ++k) fv.values[k] -= baseline.values[k];
      out.push_back(std::move(fv));
    }
  });

  std::vector<FeatureVector> all;
  for (auto& v : per_trial) std::move(v.begin(), v.end(), std::back_inserter(all));
  return all;
}

namespace {
constexpr std::array<std::string_view, 6> kProvenanceColumns = {"participant_id", "trial_id",           "t_start_s",
                                                                "t_w_s",          "planned_duration_s", "n_active"};
}

std::string features_csv(std::span<const FeatureVector> features) {
  std::string out;
  for (auto c : kProvenanceColumns) {
    out += c;
    out += ',';
  }
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    out += kNames[k];
    out += k + 1 < kFeatureCount ? ',' : '\n';
  }
  for (const auto& f : features) {
    const auto& p = f.provenance;
    out += p.participant_id + ',' + p.trial_id + ',' + csv::format_double(p.t_start) + ',' +
           csv::format_double(p.t_w) + ',' + csv::format_double(p.planned_duration) + ',' +
           std::to_string(p.n_active);
    for (double v : f.values) {
      out += ',';
      out += csv::format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_features(const std::filesystem::path& path, std::span<const FeatureVector> features) {
  csv::write_atomic(path, features_csv(features));
}

std::vector<FeatureVector> read_features(const std::filesystem::path& path) {
  std::vector<std::string_view> columns(kProvenanceColumns.begin(), kProvenanceColumns.end());
  columns.insert(columns.end(), kNames.begin(), kNames.end());
  std::vector<FeatureVector> out;
  csv::read(path, columns, [&](std::span<const std::string_view> f, std::size_t line) {
    auto real = [&](std::size_t i) {
      auto v = csv::parse_double(f[i]);
      if (!v) throw Error(ErrorCode::row_parse, path.string() + ": bad number '" + std::string(f[i]) + "'", line);
      return *v;
    };
    FeatureVector fv;
    fv.provenance.participant_id = std::string(f[0]);
    fv.provenance.trial_id = std::string(f[1]);
    fv.provenance.t_start = real(2);
    fv.provenance.t_w = real(3);
    fv.provenance.planned_duration = real(4);
    auto n_active = csv::parse_int(f[5]);
    if (!n_active) throw Error(ErrorCode::row_parse, path.string() + ": bad n_active", line);
    fv.provenance.n_active = static_cast<int>(*n_active);
    for (std::size_t k = 0; k < kFeatureCount; ++k) fv.values[k] = real(6 + k);
    out.push_back(std::move(fv));
  });
  return out;
}

}  // namespace chronogaze
