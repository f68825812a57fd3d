#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "chronogaze/gaze_data.hpp"
#include "chronogaze/synth.hpp"

namespace testing {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("chronogaze_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool close_rel(double a, double b, double rel = 1e-9, double abs_floor = 1e-12) {
  return std::fabs(a - b) <= rel * std::max(std::fabs(a), std::fabs(b)) + abs_floor;
}

/// Small, fast synthetic configuration (low sampling rate, short baseline).
inline chronogaze::synth::SynthConfig small_config(std::uint64_t seed = 1) {
  chronogaze::synth::SynthConfig c;
  c.n_participants = 2;
  c.trials_per_participant = 4;
  c.durations = {60.0};
  c.gaze_rate_hz = 30.0;
  c.baseline_duration = 20.0;
  c.seed = seed;
  return c;
}

/// A clean trial with uniform gaze at `rate` Hz, evenly spaced fixations and
/// a 10 s baseline.
inline chronogaze::TrialRecord simple_trial(std::string participant, std::string trial, double planned = 60.0,
                                            int n_active = 1, double rate = 60.0) {
  using namespace chronogaze;
  TrialRecord t;
  t.key = {std::move(participant), std::move(trial)};
  t.planned_duration = planned;
  t.n_active = n_active;
  auto fill = [rate](std::vector<GazeSample>& gaze, std::vector<FixationEvent>& fix, double span) {
    const int n = static_cast<int>(span * rate);
    for (int i = 0; i < n; ++i) {
      GazeSample s;
      s.timestamp = i / rate;
      s.pupil_x = 0.5;
      s.pupil_y = 0.5;
      s.diam2d_left = s.diam2d_right = 60.0 + std::sin(i * 0.1);
      s.diam3d_left = s.diam3d_right = 3.0 + 0.01 * std::sin(i * 0.1);
      s.confidence = 0.95;
      gaze.push_back(s);
    }
    std::int64_t id = 1;
    for (double t0 = 0.1; t0 + 0.2 < span; t0 += 0.5) {
      FixationEvent f;
      f.id = id++;
      f.start = t0;
      f.duration = 0.2;
      f.dispersion = 0.5;
      f.x = 0.4 + 0.01 * static_cast<double>(id % 5);
      f.y = 0.5;
      fix.push_back(f);
    }
  };
  fill(t.gaze, t.fixations, planned);
  fill(t.baseline_gaze, t.baseline_fixations, 10.0);
  t.answer = QuestionnaireAnswer{planned, 3};
  return t;
}

}  // namespace testing
