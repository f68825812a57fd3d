#include "chronogaze/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "chronogaze/error.hpp"
#include "chronogaze/parallel.hpp"
#include "chronogaze/rng.hpp"
#include "json.hpp"

namespace chronogaze::synth {

namespace {

struct Phase {
  std::vector<GazeSample> gaze;
  std::vector<FixationEvent> fixations;
};

std::vector<FixationEvent> generate_fixations(const SynthConfig& c, double duration, Rng& rng) {
  std::gamma_distribution<double> fix_duration(c.fixation_gamma_shape, c.fixation_gamma_scale);
  const double mean_gap =
      std::max(1.0 / c.fixation_rate_hz - c.fixation_gamma_shape * c.fixation_gamma_scale, 0.02);
  std::exponential_distribution<double> gap(1.0 / mean_gap);
  std::uniform_real_distribution<double> dispersion(0.2, 1.5), position(0.1, 0.9);

  std::vector<FixationEvent> out;
  double t = gap(rng);
  std::int64_t id = 1;
  while (true) {
    const double d = std::max(fix_duration(rng), 1e-3);
    if (t + d > duration) break;
    FixationEvent f;
    f.id = id++;
    f.start = t;
    f.duration = d;
    f.dispersion = dispersion(rng);
    f.x = position(rng);
    f.y = position(rng);
    out.push_back(f);
    t += d + gap(rng);
  }
  return out;
}

/// `level_mm` is the phase's mean 3d diameter before pulses.
Phase generate_phase(const SynthConfig& c, double duration, double level_mm, double pulse_rate, Rng& rng) {
  Phase phase;
  phase.fixations = generate_fixations(c, duration, rng);

  std::vector<double> pulses;
  if (pulse_rate > 0.0) {
    std::exponential_distribution<double> next(pulse_rate);
    for (double t = next(rng); t < duration; t += next(rng)) pulses.push_back(t);
  }

  std::normal_distribution<double> noise(0.0, c.noise_sigma_mm), jitter(0.0, 0.01);
  std::uniform_real_distribution<double> unit(0.0, 1.0), good(0.85, 1.0), blink(0.0, 0.5);
  const auto n = static_cast<std::size_t>(std::floor(duration * c.gaze_rate_hz + 1e-9));
  phase.gaze.reserve(n);
  std::size_t fix = 0, pulse = 0;
  double cx = 0.5, cy = 0.5;
  for (std::size_t i = 0; i < n; ++i) {
    GazeSample s;
    s.timestamp = static_cast<double>(i) / c.gaze_rate_hz;
    while (fix < phase.fixations.size() && phase.fixations[fix].start <= s.timestamp) {
      cx = phase.fixations[fix].x;
      cy = phase.fixations[fix].y;
      ++fix;
    }
    while (pulse < pulses.size() && pulses[pulse] + c.ipa_pulse_duration <= s.timestamp) ++pulse;
    const bool in_pulse = pulse < pulses.size() && pulses[pulse] <= s.timestamp;
    const double level = level_mm + (in_pulse ? c.ipa_pulse_mm : 0.0);

    s.pupil_x = std::clamp(cx + jitter(rng), 0.0, 1.0);
    s.pupil_y = std::clamp(cy + jitter(rng), 0.0, 1.0);
    s.diam3d_left = std::max(level + noise(rng), 0.0);
    s.diam3d_right = std::max(level + 0.05 + noise(rng), 0.0);
    s.diam2d_left = std::max(level * c.px_per_mm + c.px_per_mm * noise(rng), 0.0);
    s.diam2d_right = std::max((level + 0.05) * c.px_per_mm + c.px_per_mm * noise(rng), 0.0);
    s.confidence = unit(rng) < c.blink_fraction ? blink(rng) : good(rng);
    phase.gaze.push_back(s);
  }
  return phase;
}

QuestionnaireAnswer planted_answer(const SynthConfig& c, double planned, int cls, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto pick = [&](std::initializer_list<int> options) {
    const auto k = std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng);
    return *(options.begin() + static_cast<std::ptrdiff_t>(k));
  };

  // Duration answer: planted class when the duration family is planted,
  // otherwise a random class.
  const int duration_class = c.family == LabelFamily::duration_estimate
                                 ? cls
                                 : std::uniform_int_distribution<int>(0, c.n_classes - 1)(rng);
  double e_rel;
  if (c.n_classes == 2)
    e_rel = duration_class == 0 ? in(0.5, 0.85) : in(0.95, 1.5);
  else
    e_rel = duration_class == 0 ? in(0.4, 0.7) : duration_class == 1 ? in(0.8, 1.0) : in(1.1, 1.6);

  const int ppot_class =
      c.family == LabelFamily::ppot ? cls : std::uniform_int_distribution<int>(0, c.n_classes - 1)(rng);
  int likert;
  if (c.n_classes == 2)
    likert = ppot_class == 0 ? pick({1, 2}) : pick({3, 4, 5});
  else
    likert = ppot_class == 0 ? pick({1, 2}) : ppot_class == 1 ? 3 : pick({4, 5});

  return {std::min(e_rel * planned, kMaxEstimatedDuration), likert};
}

}  // namespace

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::invalid_argument, std::string("synth config: ") + what);
  };
  require(n_participants >= 1, "n_participants must be positive");
  require(trials_per_participant >= 1, "trials_per_participant must be positive");
  require(!durations.empty(), "durations must not be empty");
  for (double d : durations) require(is_valid_planned_duration(d), "durations must be 60, 180 or 300");
  require(gaze_rate_hz > 0.0 && std::isfinite(gaze_rate_hz), "gaze_rate_hz must be positive");
  require(baseline_duration > 0.0 && baseline_duration <= kBaselineMaxSpan, "baseline_duration must lie in (0, 120]");
  require(baseline_duration * gaze_rate_hz >= 2.0, "baseline needs at least two samples");
  require(fixation_rate_hz > 0.0, "fixation_rate_hz must be positive");
  require(fixation_gamma_shape > 0.0 && fixation_gamma_scale > 0.0, "fixation gamma parameters must be positive");
  require(pupil_base_mm > 0.0, "pupil_base_mm must be positive");
  require(noise_sigma_mm > 0.0 && std::isfinite(noise_sigma_mm), "noise_sigma_mm must be positive");
  require(std::isfinite(class_shift_sigma), "class_shift_sigma must be finite");
  require(user_offset_sigma >= 0.0 && std::isfinite(user_offset_sigma), "user_offset_sigma must be non-negative");
  for (const auto& s : experiment_shifts) {
    require(s.participant >= 0 && s.participant < n_participants, "experiment shift participant out of range");
    require(std::isfinite(s.sigma), "experiment shift must be finite");
  }
  require(px_per_mm > 0.0, "px_per_mm must be positive");
  require(ipa_base_rate_hz >= 0.0 && std::isfinite(ipa_base_rate_hz), "ipa_base_rate_hz must be non-negative");
  require(std::isfinite(ipa_class_rate_hz) && ipa_base_rate_hz + ipa_class_rate_hz * (n_classes - 1) >= 0.0,
          "ipa rates must be finite and non-negative");
  require(ipa_pulse_duration > 0.0, "ipa_pulse_duration must be positive");
  require(blink_fraction >= 0.0 && blink_fraction < 0.5, "blink_fraction must lie in [0, 0.5)");
  require(n_classes == 2 || n_classes == 3, "n_classes must be 2 or 3");
}

SynthConfig config_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("synth config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "synth config must be a JSON object");

  SynthConfig c;
  static const std::set<std::string> known = {
      "n_participants",   "trials_per_participant", "durations",          "gaze_rate_hz",
      "baseline_duration", "fixation_rate_hz",      "fixation_gamma_shape", "fixation_gamma_scale",
      "pupil_base_mm",    "noise_sigma_mm",         "class_shift_sigma",  "user_offset_sigma",
      "experiment_shifts", "px_per_mm",             "ipa_base_rate_hz",   "ipa_class_rate_hz",
      "ipa_pulse_mm",     "ipa_pulse_duration",     "blink_fraction",     "family",
      "n_classes",        "seed"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw Error(ErrorCode::invalid_argument, "synth config: unknown key '" + key + "'");

  try {
    c.n_participants = j.value("n_participants", c.n_participants);
    c.trials_per_participant = j.value("trials_per_participant", c.trials_per_participant);
    c.durations = j.value("durations", c.durations);
    c.gaze_rate_hz = j.value("gaze_rate_hz", c.gaze_rate_hz);
    c.baseline_duration = j.value("baseline_duration", c.baseline_duration);
    c.fixation_rate_hz = j.value("fixation_rate_hz", c.fixation_rate_hz);
    c.fixation_gamma_shape = j.value("fixation_gamma_shape", c.fixation_gamma_shape);
    c.fixation_gamma_scale = j.value("fixation_gamma_scale", c.fixation_gamma_scale);
    c.pupil_base_mm = j.value("pupil_base_mm", c.pupil_base_mm);
    c.noise_sigma_mm = j.value("noise_sigma_mm", c.noise_sigma_mm);
    c.class_shift_sigma = j.value("class_shift_sigma", c.class_shift_sigma);
    c.user_offset_sigma = j.value("user_offset_sigma", c.user_offset_sigma);
    if (j.contains("experiment_shifts"))
      for (const auto& s : j.at("experiment_shifts"))
        c.experiment_shifts.push_back({s.at("participant").get<int>(), s.at("sigma").get<double>()});
    c.px_per_mm = j.value("px_per_mm", c.px_per_mm);
    c.ipa_base_rate_hz = j.value("ipa_base_rate_hz", c.ipa_base_rate_hz);
    c.ipa_class_rate_hz = j.value("ipa_class_rate_hz", c.ipa_class_rate_hz);
    c.ipa_pulse_mm = j.value("ipa_pulse_mm", c.ipa_pulse_mm);
    c.ipa_pulse_duration = j.value("ipa_pulse_duration", c.ipa_pulse_duration);
    c.blink_fraction = j.value("blink_fraction", c.blink_fraction);
    if (j.contains("family")) c.family = parse_label_family(j.at("family").get<std::string>());
    c.n_classes = j.value("n_classes", c.n_classes);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_argument, std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

SynthConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const SynthConfig& c) {
  nlohmann::json j;
  j["n_participants"] = c.n_participants;
  j["trials_per_participant"] = c.trials_per_participant;
  j["durations"] = c.durations;
  j["gaze_rate_hz"] = c.gaze_rate_hz;
  j["baseline_duration"] = c.baseline_duration;
  j["fixation_rate_hz"] = c.fixation_rate_hz;
  j["fixation_gamma_shape"] = c.fixation_gamma_shape;
  j["fixation_gamma_scale"] = c.fixation_gamma_scale;
  j["pupil_base_mm"] = c.pupil_base_mm;
  j["noise_sigma_mm"] = c.noise_sigma_mm;
  j["class_shift_sigma"] = c.class_shift_sigma;
  j["user_offset_sigma"] = c.user_offset_sigma;
  j["experiment_shifts"] = nlohmann::json::array();
  for (const auto& s : c.experiment_shifts)
    j["experiment_shifts"].push_back({{"participant", s.participant}, {"sigma", s.sigma}});
  j["px_per_mm"] = c.px_per_mm;
  j["ipa_base_rate_hz"] = c.ipa_base_rate_hz;
  j["ipa_class_rate_hz"] = c.ipa_class_rate_hz;
  j["ipa_pulse_mm"] = c.ipa_pulse_mm;
  j["ipa_pulse_duration"] = c.ipa_pulse_duration;
  j["blink_fraction"] = c.blink_fraction;
  j["family"] = c.family == LabelFamily::ppot ? "ppot" : "duration";
  j["n_classes"] = c.n_classes;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

std::string participant_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%03d", index + 1);
  return buf;
}

std::string trial_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%03d", index + 1);
  return buf;
}

GeneratedData generate_dataset(const SynthConfig& config) {
  config.validate();
  const auto& c = config;
  std::vector<std::pair<double, int>> combos;
  for (double d : c.durations)
    for (int a = 1; a <= 15; a += 2) combos.emplace_back(d, a);

  const auto n_trials = static_cast<std::size_t>(c.n_participants) * static_cast<std::size_t>(c.trials_per_participant);
  std::vector<TrialRecord> trials(n_trials);
  std::vector<int> planted(n_trials);

  // Per-participant offsets and class assignment are drawn up front so trial
  // generation can run in any order.
  std::vector<double> user_offset(static_cast<std::size_t>(c.n_participants));
  std::vector<double> experiment_shift(user_offset.size(), 0.0);
  for (const auto& s : c.experiment_shifts) experiment_shift[static_cast<std::size_t>(s.participant)] += s.sigma;
  for (int p = 0; p < c.n_participants; ++p) {
    Rng rng(derive_seed(c.seed, {static_cast<std::uint64_t>(p)}));
    user_offset[static_cast<std::size_t>(p)] =
        std::normal_distribution<double>(0.0, 1.0)(rng) * c.user_offset_sigma * c.noise_sigma_mm;
    std::vector<int> classes(static_cast<std::size_t>(c.trials_per_participant));
    for (std::size_t j = 0; j < classes.size(); ++j) classes[j] = static_cast<int>(j % static_cast<std::size_t>(c.n_classes));
    std::shuffle(classes.begin(), classes.end(), rng);
    for (std::size_t j = 0; j < classes.size(); ++j)
      planted[static_cast<std::size_t>(p) * classes.size() + j] = classes[j];
  }

  parallel_for(n_trials, [&](std::size_t idx) {
    const auto p = idx / static_cast<std::size_t>(c.trials_per_participant);
    const auto j = idx % static_cast<std::size_t>(c.trials_per_participant);
    const int cls = planted[idx];
    const auto& [duration, n_active] = combos[j % combos.size()];

    auto& t = trials[idx];
    t.key = {participant_id(static_cast<int>(p)), trial_id(static_cast<int>(j))};
    t.planned_duration = duration;
    t.n_active = n_active;

    const double sigma = c.noise_sigma_mm;
    const double baseline_level = c.pupil_base_mm + user_offset[p];
    const double experiment_level = baseline_level + cls * c.class_shift_sigma * sigma + experiment_shift[p] * sigma;

    Rng baseline_rng(derive_seed(c.seed, {p, j, 0}));
    auto baseline = generate_phase(c, c.baseline_duration, baseline_level, c.ipa_base_rate_hz, baseline_rng);
    Rng experiment_rng(derive_seed(c.seed, {p, j, 1}));
    auto experiment = generate_phase(c, duration, experiment_level, c.ipa_base_rate_hz + cls * c.ipa_class_rate_hz,
                                     experiment_rng);
    Rng answer_rng(derive_seed(c.seed, {p, j, 2}));
    t.answer = planted_answer(c, duration, cls, answer_rng);

    t.gaze = std::move(experiment.gaze);
    t.fixations = std::move(experiment.fixations);
    t.baseline_gaze = std::move(baseline.gaze);
    t.baseline_fixations = std::move(baseline.fixations);
  });

  std::vector<std::size_t> order(n_trials);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return trials[a].key < trials[b].key; });
  GeneratedData out;
  out.dataset.trials.reserve(n_trials);
  out.planted.reserve(n_trials);
  for (auto i : order) {
    out.dataset.trials.push_back(std::move(trials[i]));
    out.planted.push_back(planted[i]);
  }
  return out;
}

DatasetPaths generate(const SynthConfig& config, const std::filesystem::path& dir) {
  const auto data = generate_dataset(config);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
  const auto paths = DatasetPaths::in_directory(dir);
  write_dataset(data.dataset, paths);
  return paths;
}

}  // namespace chronogaze::synth
