#include "chronogaze/event_stream.hpp"

#include <algorithm>
#include <cmath>

#include "chronogaze/error.hpp"

namespace chronogaze {

std::vector<SaccadeEvent> derive_saccades(std::span<const FixationEvent> fixations) {
  std::vector<SaccadeEvent> out;
  if (fixations.size() < 2) return out;
  out.reserve(fixations.size() - 1);
  for (std::size_t i = 1; i < fixations.size(); ++i) {
    const auto& a = fixations[i - 1];
    const auto& b = fixations[i];
    const double gap = b.start - a.end();
    if (!(gap > 0.0)) continue;
    SaccadeEvent s;
    s.start = a.end();
    s.duration = gap;
    s.amplitude = std::hypot(b.x - a.x, b.y - a.y);
    s.speed = s.amplitude / s.duration;
    out.push_back(s);
  }
  return out;
}

double trial_span(const TrialRecord& trial) { return trial.planned_duration; }

std::size_t slice_count(double span, double t_w) {
  if (!(t_w > 0.0)) throw Error(ErrorCode::invalid_argument, "window length must be positive");
  if (!(span > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(span / t_w + 1e-9));
}

TrialSlices slice_trial(const TrialRecord& trial, double t_w) {
  TrialSlices out;
  const std::size_t n = slice_count(trial_span(trial), t_w);
  if (n == 0) {
    out.window_longer_than_trial_ = true;
    return out;
  }
  out.saccades_ = derive_saccades(trial.fixations);
  out.slices_.reserve(n);

  std::span<const GazeSample> gaze(trial.gaze);
  std::span<const FixationEvent> fix(trial.fixations);
  std::span<const SaccadeEvent> sac(out.saccades_);

  auto gaze_at = [&](double t) {
    return static_cast<std::size_t>(
        std::lower_bound(gaze.begin(), gaze.end(), t, [](const GazeSample& s, double v) { return s.timestamp < v; }) -
        gaze.begin());
  };
  auto fix_at = [&](double t) {
    return static_cast<std::size_t>(
        std::lower_bound(fix.begin(), fix.end(), t, [](const FixationEvent& e, double v) { return e.start < v; }) -
        fix.begin());
  };
  auto sac_at = [&](double t) {
    return static_cast<std::size_t>(
        std::lower_bound(sac.begin(), sac.end(), t, [](const SaccadeEvent& e, double v) { return e.start < v; }) -
        sac.begin());
  };

  std::size_t g0 = gaze_at(0.0), f0 = fix_at(0.0), s0 = sac_at(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t_start = static_cast<double>(i) * t_w;
    const double t_end = static_cast<double>(i + 1) * t_w;
    const std::size_t g1 = gaze_at(t_end), f1 = fix_at(t_end), s1 = sac_at(t_end);
    WindowSlice w;
    w.trial = &trial;
    w.t_start = t_start;
    w.t_w = t_w;
    w.gaze = gaze.subspan(g0, g1 - g0);
    w.fixations = fix.subspan(f0, f1 - f0);
    w.saccades = sac.subspan(s0, s1 - s0);
    out.slices_.push_back(w);
    g0 = g1;
    f0 = f1;
    s0 = s1;
  }
  return out;
}

}  // namespace chronogaze
