// Definition-level recomputation of the 26 window features. Written
// independently of the extraction code: windows are selected by linear
// scans, saccades are re-derived, and the level-2 wavelet detail uses a
// composite filter instead of two cascaded passes where possible.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chronogaze/error.hpp"
#include "chronogaze/synth.hpp"
#include "chronogaze/wavelet.hpp"

namespace chronogaze::synth {

namespace {

struct Gap {
  double start;
  double duration;
  double speed;
};

struct Window {
  std::vector<const GazeSample*> gaze;
  std::vector<const FixationEvent*> fixations;
  std::vector<Gap> gaps;
};

Window select(const OracleInput& in) {
  Window w;
  const double end = in.t_start + in.t_w;
  auto inside = [&](double t) { return in.whole_phase || (t >= in.t_start && t < end); };
  for (const auto& s : in.gaze)
    if (inside(s.timestamp)) w.gaze.push_back(&s);
  for (const auto& f : in.fixations)
    if (inside(f.start)) w.fixations.push_back(&f);
  for (std::size_t i = 0; i + 1 < in.fixations.size(); ++i) {
    const auto& a = in.fixations[i];
    const auto& b = in.fixations[i + 1];
    const double a_end = a.start + a.duration;
    const double gap = b.start - a_end;
    if (gap > 0.0 && inside(a_end)) {
      const double dx = b.x - a.x, dy = b.y - a.y;
      w.gaps.push_back({a_end, gap, std::sqrt(dx * dx + dy * dy) / gap});
    }
  }
  return w;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double max_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = v[0];
  for (double x : v) m = x > m ? x : m;
  return m;
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

double numpy_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double diameter(const GazeSample& s, bool three_d, bool left) {
  if (three_d) return left ? s.diam3d_left : s.diam3d_right;
  return left ? s.diam2d_left : s.diam2d_right;
}

std::array<double, 32> lowpass() {
  std::array<double, 32> lo{};
  std::copy(wavelet::kSym16Lowpass.begin(), wavelet::kSym16Lowpass.end(), lo.begin());
  return lo;
}

/// Quadrature mirror: hi[k] = (-1)^(k+1) lo[31-k].
std::array<double, 32> highpass() {
  const auto lo = lowpass();
  std::array<double, 32> hi{};
  for (int k = 0; k < 32; ++k) hi[k] = (k % 2 == 1 ? 1.0 : -1.0) * lo[31 - k];
  return hi;
}

long wrap(long i, long n) { return ((i % n) + n) % n; }

/// One periodized analysis stage: y[i] = sum_j f[j] x[(2i + 16 - j) mod n],
/// with odd-length input extended by repeating its last sample.
std::vector<double> stage(std::vector<double> x, const std::array<double, 32>& f) {
  if (x.size() % 2) x.push_back(x.back());
  const long n = static_cast<long>(x.size());
  std::vector<double> y(x.size() / 2);
  for (long i = 0; i < static_cast<long>(y.size()); ++i) {
    double acc = 0.0;
    for (long j = 0; j < 32; ++j) acc += f[j] * x[wrap(2 * i + 16 - j, n)];
    y[i] = acc;
  }
  return y;
}

/// Level-2 detail. For lengths divisible by 4 the two stages collapse into a
/// single 94-tap filter g[q] = sum_{2m + l = q} hi[m] lo[l] applied at stride 4.
std::vector<double> detail2(const std::vector<double>& x) {
  const auto lo = lowpass();
  const auto hi = highpass();
  if (x.size() % 4 != 0) return stage(stage(x, lo), hi);
  std::array<double, 94> g{};
  for (int m = 0; m < 32; ++m)
    for (int l = 0; l < 32; ++l) g[2 * m + l] += hi[m] * lo[l];
  const long n = static_cast<long>(x.size());
  std::vector<double> d(x.size() / 4);
  for (long k = 0; k < static_cast<long>(d.size()); ++k) {
    double acc = 0.0;
    for (long q = 0; q < 94; ++q) acc += g[q] * x[wrap(4 * k + 48 - q, n)];
    d[k] = acc;
  }
  return d;
}

double ipa_oracle(const std::vector<double>& t, const std::vector<double>& v, double t_start, double span,
                  double rate) {
  if (t.empty() || span <= 0.0) return 0.0;
  const auto n = static_cast<std::size_t>(std::floor(span * rate + 1e-9));
  if (n < 32) return 0.0;
  std::vector<double> grid(n);
  double peak = 0.0;
  std::size_t k = 0;  // grid times increase, so the bracket only moves forward
  for (std::size_t i = 0; i < n; ++i) {
    const double g = t_start + static_cast<double>(i) / rate;
    double value;
    if (g <= t.front()) {
      value = v.front();
    } else if (g >= t.back()) {
      value = v.back();
    } else {
      while (t[k + 1] <= g) ++k;  // t[k] <= g < t[k + 1]
      value = v[k] + (g - t[k]) / (t[k + 1] - t[k]) * (v[k + 1] - v[k]);
    }
    grid[i] = value;
    peak = std::max(peak, std::fabs(value));
  }
  auto d = detail2(grid);
  for (auto& c : d) c = std::fabs(c) <= 1e-12 * peak ? 0.0 : std::fabs(c);
  const double lambda = numpy_median(d) / 0.6745 * std::sqrt(2.0 * std::log(static_cast<double>(d.size())));
  std::size_t count = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double l = i == 0 ? d[i] : d[i - 1];
    const double r = i + 1 == d.size() ? d[i] : d[i + 1];
    const bool peak_here = d[i] >= l && d[i] >= r && (d[i] > l || d[i] > r);
    if (peak_here && d[i] > lambda) ++count;
  }
  return static_cast<double>(count) / span;
}

}  // namespace

double oracle_feature(std::string_view name, const OracleInput& in) {
  const Window w = select(in);
  std::vector<double> fd, fdisp, sd, ss;
  for (const auto* f : w.fixations) {
    fd.push_back(f->duration);
    fdisp.push_back(f->dispersion);
  }
  for (const auto& g : w.gaps) {
    sd.push_back(g.duration);
    ss.push_back(g.speed);
  }

  if (name == "fixation_freq") return static_cast<double>(w.fixations.size()) / in.t_w;
  if (name == "fixation_dur_mean") return mean_of(fd);
  if (name == "fixation_dur_max") return max_of(fd);
  if (name == "fixation_disp_mean") return mean_of(fdisp);
  if (name == "fixation_disp_max") return max_of(fdisp);
  if (name == "saccade_freq") return static_cast<double>(w.gaps.size()) / in.t_w;
  if (name == "saccade_dur_mean") return mean_of(sd);
  if (name == "saccade_dur_max") return max_of(sd);
  if (name == "saccade_speed_mean") return mean_of(ss);
  if (name == "saccade_speed_max") return max_of(ss);

  const std::string n(name);
  const bool pupil_stat = n.starts_with("diam");
  const bool ipa = n.starts_with("ipa_");
  if (pupil_stat || ipa) {
    const bool three_d = n.find("3d") != std::string::npos;
    const bool left = n.find("left") != std::string::npos;
    const bool right = n.find("right") != std::string::npos;
    if (left == right) throw Error(ErrorCode::unknown_feature, n);
    std::vector<double> times, values;
    for (const auto* s : w.gaze) {
      if (s->confidence < in.min_confidence) continue;
      times.push_back(s->timestamp);
      values.push_back(diameter(*s, three_d, left));
    }
    if (ipa) {
      const std::string expected = std::string("ipa_") + (three_d ? "3d" : "2d") + (left ? "_left" : "_right");
      if (n != expected) throw Error(ErrorCode::unknown_feature, n);
      return ipa_oracle(times, values, in.t_start, in.t_w, in.ipa_rate_hz);
    }
    const std::string stem = std::string("diam") + (three_d ? "3d" : "2d") + (left ? "_left_" : "_right_");
    if (n == stem + "mean") return mean_of(values);
    if (n == stem + "max") return max_of(values);
    if (n == stem + "std") return population_std(values);
  }
  throw Error(ErrorCode::unknown_feature, n);
}

OracleInput oracle_baseline(const TrialRecord& trial) {
  if (trial.baseline_gaze.empty()) throw Error(ErrorCode::missing_baseline, to_string(trial.key));
  const auto& g = trial.baseline_gaze;
  std::vector<double> dt;
  for (std::size_t i = 1; i < g.size(); ++i) dt.push_back(g[i].timestamp - g[i - 1].timestamp);
  OracleInput in;
  in.gaze = g;
  in.fixations = trial.baseline_fixations;
  in.t_start = g.front().timestamp;
  in.t_w = g.back().timestamp - g.front().timestamp + (dt.empty() ? 0.0 : numpy_median(dt));
  in.whole_phase = true;
  return in;
}

double oracle_slice_feature(std::string_view name, const TrialRecord& trial, double t_start, double t_w,
                            double min_confidence) {
  OracleInput slice;
  slice.gaze = trial.gaze;
  slice.fixations = trial.fixations;
  slice.t_start = t_start;
  slice.t_w = t_w;
  slice.min_confidence = min_confidence;
  auto base = oracle_baseline(trial);
  base.min_confidence = min_confidence;
  return oracle_feature(name, slice) - oracle_feature(name, base);
}

}  // namespace chronogaze::synth
