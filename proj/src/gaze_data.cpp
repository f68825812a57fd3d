#include "chronogaze/gaze_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "chronogaze/csv.hpp"
#include "chronogaze/error.hpp"
#include "chronogaze/rng.hpp"

namespace chronogaze {

namespace {

constexpr std::array<std::string_view, 11> kGazeColumns = {
    "participant_id", "trial_id",        "phase",           "timestamp_s",     "pupil_x_norm", "pupil_y_norm",
    "diam2d_left_px", "diam2d_right_px", "diam3d_left_mm",  "diam3d_right_mm", "confidence"};
constexpr std::array<std::string_view, 9> kFixationColumns = {
    "participant_id", "trial_id",       "phase",      "fixation_id", "start_s",
    "duration_s",     "dispersion_deg", "fix_x_norm", "fix_y_norm"};
constexpr std::array<std::string_view, 4> kTrialColumns = {"participant_id", "trial_id", "planned_duration_s",
                                                           "n_active"};
constexpr std::array<std::string_view, 4> kQuestionnaireColumns = {"participant_id", "trial_id",
                                                                   "estimated_duration_s", "ppot_likert"};

constexpr std::size_t kMaxDiagnostics = 20;

/// Collects row diagnostics and throws them together once a file is done.
class Diagnostics {
 public:
  explicit Diagnostics(std::string file) : file_(std::move(file)) {}

  void add(std::size_t line, const std::string& message) {
    if (first_line_ == 0) first_line_ = line;
    ++count_;
    if (messages_.size() < kMaxDiagnostics) messages_.push_back("line " + std::to_string(line) + ": " + message);
  }

  void throw_if_any(ErrorCode code = ErrorCode::row_parse) const {
    if (count_ == 0) return;
    std::ostringstream out;
    out << file_ << ": " << count_ << " malformed row(s)";
    for (const auto& m : messages_) out << "\n  " << m;
    if (count_ > messages_.size()) out << "\n  ...";
    throw Error(code, out.str(), first_line_);
  }

 private:
  std::string file_;
  std::vector<std::string> messages_;
  std::size_t count_ = 0;
  std::size_t first_line_ = 0;
};

struct FieldReader {
  std::span<const std::string_view> fields;
  std::size_t line;
  Diagnostics& diag;
  bool ok = true;

  double real(std::size_t i, std::string_view name, double lo, double hi) {
    auto v = csv::parse_double(fields[i]);
    if (!v || !std::isfinite(*v)) {
      fail(std::string(name) + " is not a number: '" + std::string(fields[i]) + "'");
      return 0.0;
    }
    if (*v < lo || *v > hi) {
      fail(std::string(name) + " out of range: " + std::string(fields[i]));
      return 0.0;
    }
    return *v;
  }

  long long integer(std::size_t i, std::string_view name) {
    auto v = csv::parse_int(fields[i]);
    if (!v) {
      fail(std::string(name) + " is not an integer: '" + std::string(fields[i]) + "'");
      return 0;
    }
    return *v;
  }

  std::string token(std::size_t i, std::string_view name) {
    if (fields[i].empty()) fail(std::string(name) + " is empty");
    return std::string(fields[i]);
  }

  void fail(const std::string& message) {
    if (ok) diag.add(line, message);
    ok = false;
  }
};

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Phase { experiment, baseline };

std::optional<Phase> parse_phase(std::string_view s) {
  if (s == "experiment") return Phase::experiment;
  if (s == "baseline") return Phase::baseline;
  return std::nullopt;
}

/// Trial lookup that short-circuits on runs of rows from the same trial.
class TrialIndex {
 public:
  explicit TrialIndex(std::vector<TrialRecord>& trials) : trials_(trials) {
    for (std::size_t i = 0; i < trials.size(); ++i) index_.emplace(trials[i].key, i);
  }

  TrialRecord* find(std::string_view participant, std::string_view trial) {
    if (last_ && last_->key.participant_id == participant && last_->key.trial_id == trial) return last_;
    auto it = index_.find(TrialKey{std::string(participant), std::string(trial)});
    last_ = it == index_.end() ? nullptr : &trials_[it->second];
    return last_;
  }

 private:
  std::vector<TrialRecord>& trials_;
  std::map<TrialKey, std::size_t> index_;
  TrialRecord* last_ = nullptr;
};

std::vector<TrialRecord> read_trials(const std::filesystem::path& path) {
  Diagnostics diag(path.string());
  std::vector<TrialRecord> trials;
  std::set<TrialKey> seen;
  csv::read(path, kTrialColumns, [&](std::span<const std::string_view> f, std::size_t line) {
    FieldReader r{f, line, diag};
    TrialRecord t;
    t.key.participant_id = r.token(0, "participant_id");
    t.key.trial_id = r.token(1, "trial_id");
    t.planned_duration = r.real(2, "planned_duration_s", 0.0, kInf);
    t.n_active = static_cast<int>(r.integer(3, "n_active"));
    if (r.ok && !is_valid_planned_duration(t.planned_duration))
      r.fail("planned_duration_s must be one of 60, 180, 300");
    if (r.ok && !is_valid_n_active(t.n_active)) r.fail("n_active must be odd in [1, 15]");
    if (r.ok && !seen.insert(t.key).second) r.fail("duplicate trial " + to_string(t.key));
    if (r.ok) trials.push_back(std::move(t));
  });
  diag.throw_if_any();
  std::sort(trials.begin(), trials.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return trials;
}

void read_questionnaire(const std::filesystem::path& path, std::vector<TrialRecord>& trials) {
  Diagnostics diag(path.string());
  Diagnostics xref(path.string());
  TrialIndex index(trials);
  csv::read(path, kQuestionnaireColumns, [&](std::span<const std::string_view> f, std::size_t line) {
    FieldReader r{f, line, diag};
    QuestionnaireAnswer a;
    a.estimated_duration = r.real(2, "estimated_duration_s", 0.0, kMaxEstimatedDuration);
    auto likert = r.integer(3, "ppot_likert");
    if (r.ok && (likert < 1 || likert > 5)) r.fail("ppot_likert must be in 1..5");
    a.ppot_likert = static_cast<int>(likert);
    if (!r.ok) return;
    TrialRecord* t = index.find(f[0], f[1]);
    if (!t) {
      xref.add(line, "no trial " + std::string(f[0]) + "/" + std::string(f[1]));
      return;
    }
    if (t->answer) {
      r.fail("duplicate questionnaire row for " + to_string(t->key));
      return;
    }
    t->answer = a;
  });
  diag.throw_if_any();
  xref.throw_if_any(ErrorCode::cross_reference);
}

void read_gaze(const std::filesystem::path& path, std::vector<TrialRecord>& trials) {
  Diagnostics diag(path.string());
  Diagnostics xref(path.string());
  TrialIndex index(trials);
  csv::read(path, kGazeColumns, [&](std::span<const std::string_view> f, std::size_t line) {
    FieldReader r{f, line, diag};
    auto phase = parse_phase(f[2]);
    if (!phase) r.fail("phase must be 'experiment' or 'baseline'");
    GazeSample s;
    s.timestamp = r.real(3, "timestamp_s", -kInf, kInf);
    s.pupil_x = r.real(4, "pupil_x_norm", 0.0, 1.0);
    s.pupil_y = r.real(5, "pupil_y_norm", 0.0, 1.0);
    s.diam2d_left = r.real(6, "diam2d_left_px", 0.0, kInf);
    s.diam2d_right = r.real(7, "diam2d_right_px", 0.0, kInf);
    s.diam3d_left = r.real(8, "diam3d_left_mm", 0.0, kInf);
    s.diam3d_right = r.real(9, "diam3d_right_mm", 0.0, kInf);
    s.confidence = r.real(10, "confidence", 0.0, 1.0);
    if (!r.ok) return;
    TrialRecord* t = index.find(f[0], f[1]);
    if (!t) {
      xref.add(line, "no trial " + std::string(f[0]) + "/" + std::string(f[1]));
      return;
    }
    (*phase == Phase::experiment ? t->gaze : t->baseline_gaze).push_back(s);
  });
  diag.throw_if_any();
  xref.throw_if_any(ErrorCode::cross_reference);
}

void read_fixations(const std::filesystem::path& path, std::vector<TrialRecord>& trials) {
  Diagnostics diag(path.string());
  Diagnostics xref(path.string());
  TrialIndex index(trials);
  csv::read(path, kFixationColumns, [&](std::span<const std::string_view> f, std::size_t line) {
    FieldReader r{f, line, diag};
    auto phase = parse_phase(f[2]);
    if (!phase) r.fail("phase must be 'experiment' or 'baseline'");
    FixationEvent e;
    e.id = r.integer(3, "fixation_id");
    e.start = r.real(4, "start_s", -kInf, kInf);
    e.duration = r.real(5, "duration_s", 0.0, kInf);
    if (r.ok && e.duration <= 0.0) r.fail("duration_s must be positive");
    e.dispersion = r.real(6, "dispersion_deg", 0.0, kInf);
    e.x = r.real(7, "fix_x_norm", 0.0, 1.0);
    e.y = r.real(8, "fix_y_norm", 0.0, 1.0);
    if (!r.ok) return;
    TrialRecord* t = index.find(f[0], f[1]);
    if (!t) {
      xref.add(line, "no trial " + std::string(f[0]) + "/" + std::string(f[1]));
      return;
    }
    (*phase == Phase::experiment ? t->fixations : t->baseline_fixations).push_back(e);
  });
  diag.throw_if_any();
  xref.throw_if_any(ErrorCode::cross_reference);
}

void shift_phase(std::vector<GazeSample>& gaze, std::vector<FixationEvent>& fixations) {
  double origin = kInf;
  for (const auto& s : gaze) origin = std::min(origin, s.timestamp);
  for (const auto& f : fixations) origin = std::min(origin, f.start);
  if (!std::isfinite(origin) || origin == 0.0) return;
  for (auto& s : gaze) s.timestamp -= origin;
  for (auto& f : fixations) f.start -= origin;
}

double phase_extent(const std::vector<GazeSample>& gaze, const std::vector<FixationEvent>& fixations) {
  double end = 0.0;
  for (const auto& s : gaze) end = std::max(end, s.timestamp);
  for (const auto& f : fixations) end = std::max(end, f.end());
  return end;
}

bool gaze_monotone(const std::vector<GazeSample>& gaze) {
  return std::is_sorted(gaze.begin(), gaze.end(),
                        [](const GazeSample& a, const GazeSample& b) { return a.timestamp < b.timestamp; });
}

bool fixations_ordered(const std::vector<FixationEvent>& fixations) {
  constexpr double kOverlapTolerance = 1e-9;
  for (std::size_t i = 1; i < fixations.size(); ++i) {
    const auto& prev = fixations[i - 1];
    const auto& cur = fixations[i];
    if (cur.id <= prev.id || cur.start < prev.start || cur.start < prev.end() - kOverlapTolerance) return false;
  }
  return true;
}

}  // namespace

std::string to_string(const TrialKey& key) { return key.participant_id + "/" + key.trial_id; }

bool is_valid_planned_duration(double seconds) { return seconds == 60.0 || seconds == 180.0 || seconds == 300.0; }

bool is_valid_n_active(int n) { return n >= 1 && n <= 15 && n % 2 == 1; }

std::string_view to_string(ExclusionReason reason) {
  switch (reason) {
    case ExclusionReason::empty_stream: return "empty stream";
    case ExclusionReason::non_monotone_timestamps: return "non-monotone timestamps";
    case ExclusionReason::low_confidence: return "low confidence";
    case ExclusionReason::missing_baseline: return "baseline missing";
  }
  return "unknown";
}

const TrialRecord* Dataset::find(const TrialKey& key) const {
  auto it = std::lower_bound(trials.begin(), trials.end(), key,
                             [](const TrialRecord& t, const TrialKey& k) { return t.key < k; });
  return it != trials.end() && it->key == key ? &*it : nullptr;
}

std::optional<ExclusionReason> screen_trial(const TrialRecord& trial, const ScreeningPolicy& policy) {
  if (policy.reject_empty_streams && (trial.gaze.empty() || trial.fixations.empty()))
    return ExclusionReason::empty_stream;
  if (policy.reject_non_monotone &&
      !(gaze_monotone(trial.gaze) && gaze_monotone(trial.baseline_gaze) && fixations_ordered(trial.fixations) &&
        fixations_ordered(trial.baseline_fixations)))
    return ExclusionReason::non_monotone_timestamps;
  if (policy.reject_low_confidence && !trial.gaze.empty()) {
    double sum = 0.0;
    for (const auto& s : trial.gaze) sum += s.confidence;
    if (sum / static_cast<double>(trial.gaze.size()) < policy.min_mean_confidence)
      return ExclusionReason::low_confidence;
  }
  if (policy.reject_missing_baseline && (trial.baseline_gaze.empty() || trial.baseline_fixations.empty()))
    return ExclusionReason::missing_baseline;
  return std::nullopt;
}

void normalize_timestamps(TrialRecord& trial) {
  shift_phase(trial.gaze, trial.fixations);
  shift_phase(trial.baseline_gaze, trial.baseline_fixations);
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "gaze.csv", dir / "fixations.csv", dir / "trials.csv", dir / "questionnaire.csv"};
}

Dataset load_metadata(const std::filesystem::path& trials_path, const std::filesystem::path& questionnaire_path) {
  Dataset d;
  d.trials = read_trials(trials_path);
  read_questionnaire(questionnaire_path, d.trials);
  return d;
}

Dataset load_dataset(const DatasetPaths& paths, const ScreeningPolicy& policy) {
  for (const auto& p : {paths.gaze, paths.fixations, paths.trials, paths.questionnaire})
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::missing_file, p.string());

  auto trials = read_trials(paths.trials);
  read_questionnaire(paths.questionnaire, trials);
  read_gaze(paths.gaze, trials);
  read_fixations(paths.fixations, trials);

  Dataset d;
  for (auto& t : trials) {
    normalize_timestamps(t);
    const double baseline_span = phase_extent(t.baseline_gaze, t.baseline_fixations);
    if (baseline_span > kBaselineMaxSpan + 1e-9)
      throw Error(ErrorCode::row_parse, "baseline of " + to_string(t.key) + " spans " +
                                            csv::format_double(baseline_span) + " s (limit 120 s)");
    if (auto reason = screen_trial(t, policy)) {
      d.screening_log.push_back({t.key, *reason});
    } else {
      d.trials.push_back(std::move(t));
    }
  }
  return d;
}

void write_dataset(const Dataset& dataset, const DatasetPaths& paths) {
  using csv::format_double;
  auto header = [](auto const& cols) {
    std::string h;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) h += ',';
      h += cols[i];
    }
    return h + '\n';
  };

  std::string gaze = header(kGazeColumns);
  std::string fix = header(kFixationColumns);
  std::string trials = header(kTrialColumns);
  std::string quest = header(kQuestionnaireColumns);

  for (const auto& t : dataset.trials) {
    const std::string prefix = t.key.participant_id + ',' + t.key.trial_id + ',';
    trials += prefix + format_double(t.planned_duration) + ',' + std::to_string(t.n_active) + '\n';
    if (t.answer)
      quest += prefix + format_double(t.answer->estimated_duration) + ',' + std::to_string(t.answer->ppot_likert) +
               '\n';
    auto emit_gaze = [&](const std::vector<GazeSample>& stream, std::string_view phase) {
      for (const auto& s : stream) {
        gaze += prefix;
        gaze += phase;
        for (double v : {s.timestamp, s.pupil_x, s.pupil_y, s.diam2d_left, s.diam2d_right, s.diam3d_left,
                         s.diam3d_right, s.confidence}) {
          gaze += ',';
          gaze += format_double(v);
        }
        gaze += '\n';
      }
    };
    auto emit_fix = [&](const std::vector<FixationEvent>& stream, std::string_view phase) {
      for (const auto& e : stream) {
        fix += prefix;
        fix += phase;
        fix += ',' + std::to_string(e.id);
        for (double v : {e.start, e.duration, e.dispersion, e.x, e.y}) {
          fix += ',';
          fix += format_double(v);
        }
        fix += '\n';
      }
    };
    emit_gaze(t.gaze, "experiment");
    emit_gaze(t.baseline_gaze, "baseline");
    emit_fix(t.fixations, "experiment");
    emit_fix(t.baseline_fixations, "baseline");
  }

  csv::write_atomic(paths.gaze, gaze);
  csv::write_atomic(paths.fixations, fix);
  csv::write_atomic(paths.trials, trials);
  csv::write_atomic(paths.questionnaire, quest);
}

std::string_view to_string(SplitGranularity g) { return g == SplitGranularity::slice ? "slice" : "trial"; }

SplitGranularity parse_split_granularity(std::string_view text) {
  if (text == "slice") return SplitGranularity::slice;
  if (text == "trial") return SplitGranularity::trial;
  throw Error(ErrorCode::invalid_argument, "split granularity must be 'slice' or 'trial'");
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_partition(std::span<const int> labels,
                                                                                   double second_fraction,
                                                                                   std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::vector<std::size_t> first, second;
  for (auto& [label, members] : by_class) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(static_cast<std::uint32_t>(label))}));
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = static_cast<long>(members.size());
    long take = std::lround(second_fraction * static_cast<double>(n));
    if (n >= 2) take = std::clamp(take, 1L, n - 1);
    else take = 0;
    second.insert(second.end(), members.begin(), members.begin() + take);
    first.insert(first.end(), members.begin() + take, members.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {std::move(first), std::move(second)};
}

IndexSplit split_analysis_test(std::span<const int> labels, std::span<const std::size_t> groups,
                               double test_fraction, std::uint64_t seed, SplitGranularity granularity) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorCode::invalid_argument, "test fraction must lie in (0, 1)");
  if (labels.empty()) throw Error(ErrorCode::empty_dataset, "nothing to split");
  if (std::set<int>(labels.begin(), labels.end()).size() < 2)
    throw Error(ErrorCode::single_class, "stratified split needs at least two classes");

  if (granularity == SplitGranularity::slice) {
    auto [analysis, test] = stratified_partition(labels, test_fraction, seed);
    return {std::move(analysis), std::move(test)};
  }

  if (groups.size() != labels.size())
    throw Error(ErrorCode::invalid_argument, "trial-level split needs one group id per item");
  std::map<std::size_t, std::size_t> unit_of_group;
  std::vector<int> unit_labels;
  std::vector<std::size_t> unit_of_item(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = unit_of_group.emplace(groups[i], unit_labels.size());
    if (inserted) unit_labels.push_back(labels[i]);
    unit_of_item[i] = it->second;
  }
  auto [unit_analysis, unit_test] = stratified_partition(unit_labels, test_fraction, seed);
  std::vector<bool> is_test(unit_labels.size(), false);
  for (auto u : unit_test) is_test[u] = true;

  IndexSplit out;
  for (std::size_t i = 0; i < labels.size(); ++i) (is_test[unit_of_item[i]] ? out.test : out.analysis).push_back(i);
  return out;
}

}  // namespace chronogaze
