#include "chronogaze/labeling.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "chronogaze/csv.hpp"
#include "chronogaze/error.hpp"

namespace chronogaze {

std::string_view to_string(LabelFamily family) {
  return family == LabelFamily::duration_estimate ? "duration" : "ppot";
}

LabelFamily parse_label_family(std::string_view text) {
  if (text == "duration" || text == "duration_estimate") return LabelFamily::duration_estimate;
  if (text == "ppot") return LabelFamily::ppot;
  throw Error(ErrorCode::invalid_argument, "label family must be 'duration' or 'ppot'");
}

namespace {
void check_arity(int n_classes) {
  if (n_classes != 2 && n_classes != 3) throw Error(ErrorCode::invalid_argument, "n_classes must be 2 or 3");
}
}  // namespace

LabelSpec LabelSpec::duration(int n_classes) {
  check_arity(n_classes);
  LabelSpec s;
  s.family = LabelFamily::duration_estimate;
  s.n_classes = n_classes;
  s.thresholds = n_classes == 2 ? std::vector<double>{0.9} : std::vector<double>{0.75, 1.05};
  return s;
}

LabelSpec LabelSpec::ppot(int n_classes) {
  check_arity(n_classes);
  LabelSpec s;
  s.family = LabelFamily::ppot;
  s.n_classes = n_classes;
  return s;
}

LabelSpec LabelSpec::make(LabelFamily family, int n_classes) {
  return family == LabelFamily::duration_estimate ? duration(n_classes) : ppot(n_classes);
}

std::string LabelSpec::tag() const { return std::string(to_string(family)) + "_" + std::to_string(n_classes); }

std::string_view class_name(LabelFamily family, int n_classes, int label) {
  check_arity(n_classes);
  if (label < 0 || label >= n_classes) throw Error(ErrorCode::invalid_argument, "class index out of range");
  if (family == LabelFamily::duration_estimate) {
    if (n_classes == 2) return label == 0 ? "under" : "over";
    static constexpr std::array<std::string_view, 3> names = {"under", "correct", "over"};
    return names[static_cast<std::size_t>(label)];
  }
  if (n_classes == 2) return label == 0 ? "slow" : "fast";
  static constexpr std::array<std::string_view, 3> names = {"slow", "neutral", "fast"};
  return names[static_cast<std::size_t>(label)];
}

double relative_estimation_error(double estimated, double actual) {
  if (!(actual > 0.0)) throw Error(ErrorCode::non_positive_actual, "actual duration must be positive");
  return estimated / actual;
}

int duration_label(double e_rel, int n_classes) {
  check_arity(n_classes);
  if (n_classes == 2) return e_rel <= 0.9 ? 0 : 1;
  if (e_rel < 0.75) return kUnder;
  if (e_rel <= 1.05) return kCorrect;
  return kOver;
}

int ppot_label(int likert, int n_classes) {
  check_arity(n_classes);
  if (likert < 1 || likert > 5) throw Error(ErrorCode::out_of_range_likert, std::to_string(likert));
  if (n_classes == 2) return likert <= 2 ? 0 : 1;
  if (likert <= 2) return kSlow;
  if (likert == 3) return kNeutral;
  return kFast;
}

int trial_label(const TrialRecord& trial, const LabelSpec& spec) {
  if (!trial.answer) throw Error(ErrorCode::missing_questionnaire, to_string(trial.key));
  if (spec.family == LabelFamily::ppot) return ppot_label(trial.answer->ppot_likert, spec.n_classes);
  const double e_rel = relative_estimation_error(trial.answer->estimated_duration, trial.planned_duration);
  if (spec.thresholds.empty()) return duration_label(e_rel, spec.n_classes);
  // Custom thresholds: class = number of thresholds strictly below e_rel for
  // binary (<= is under), and the (<, <=) pattern for three classes.
  if (spec.n_classes == 2) return e_rel <= spec.thresholds.at(0) ? 0 : 1;
  if (e_rel < spec.thresholds.at(0)) return kUnder;
  if (e_rel <= spec.thresholds.at(1)) return kCorrect;
  return kOver;
}

ClassDistribution class_distribution(std::span<const int> labels, int n_classes) {
  ClassDistribution d;
  d.counts.assign(static_cast<std::size_t>(n_classes), 0);
  for (int l : labels) ++d.counts.at(static_cast<std::size_t>(l));
  if (!labels.empty())
    d.majority_share = static_cast<double>(*std::max_element(d.counts.begin(), d.counts.end())) /
                       static_cast<double>(labels.size());
  return d;
}

LabelingResult label_dataset(std::span<const FeatureVector> features, const Dataset& dataset, const LabelSpec& spec) {
  if (spec.thresholds.size() > 1 && !std::is_sorted(spec.thresholds.begin(), spec.thresholds.end()))
    throw Error(ErrorCode::invalid_argument, "thresholds must be increasing");
  LabelingResult result;
  result.samples.reserve(features.size());
  std::map<TrialKey, int> cache;
  std::vector<int> labels;
  labels.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto key = features[i].provenance.trial();
    auto it = cache.find(key);
    if (it == cache.end()) {
      const TrialRecord* t = dataset.find(key);
      if (!t || !t->answer) throw Error(ErrorCode::missing_questionnaire, to_string(key));
      it = cache.emplace(key, trial_label(*t, spec)).first;
    }
    result.samples.push_back({i, it->second, spec.family, spec.n_classes});
    labels.push_back(it->second);
  }
  result.distribution = class_distribution(labels, spec.n_classes);
  return result;
}

LabeledData LabeledData::subset(std::span<const std::size_t> indices) const {
  LabeledData out;
  out.n_classes = n_classes;
  out.rows.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    out.rows.push_back(rows.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

LabeledData make_labeled_data(std::span<const FeatureVector> features, const LabelingResult& labeling) {
  LabeledData out;
  out.n_classes = labeling.samples.empty() ? 2 : labeling.samples.front().n_classes;
  for (const auto& s : labeling.samples) {
    out.rows.push_back(features[s.feature_index]);
    out.labels.push_back(s.label);
  }
  return out;
}

namespace {
constexpr std::array<std::string_view, 8> kLabelColumns = {"participant_id", "trial_id", "t_start_s", "t_w_s",
                                                           "family",         "n_classes", "class_index",
                                                           "class_name"};

struct SliceKey {
  std::string participant_id, trial_id;
  double t_start, t_w;
  auto operator<=>(const SliceKey&) const = default;
};
}  // namespace

std::string labels_csv(std::span<const FeatureVector> features, const LabelingResult& labeling) {
  std::string out;
  for (std::size_t i = 0; i < kLabelColumns.size(); ++i) {
    out += kLabelColumns[i];
    out += i + 1 < kLabelColumns.size() ? ',' : '\n';
  }
  for (const auto& s : labeling.samples) {
    const auto& p = features[s.feature_index].provenance;
    out += p.participant_id + ',' + p.trial_id + ',' + csv::format_double(p.t_start) + ',' +
           csv::format_double(p.t_w) + ',' + std::string(to_string(s.family)) + ',' + std::to_string(s.n_classes) +
           ',' + std::to_string(s.label) + ',' + std::string(class_name(s.family, s.n_classes, s.label)) + '\n';
  }
  return out;
}

void write_labels(const std::filesystem::path& path, std::span<const FeatureVector> features,
                  const LabelingResult& labeling) {
  csv::write_atomic(path, labels_csv(features, labeling));
}

LabeledData read_labels(const std::filesystem::path& path, std::span<const FeatureVector> features) {
  std::map<SliceKey, int> by_slice;
  int n_classes = 0;
  csv::read(path, kLabelColumns, [&](std::span<const std::string_view> f, std::size_t line) {
    auto t0 = csv::parse_double(f[2]);
    auto tw = csv::parse_double(f[3]);
    auto n = csv::parse_int(f[5]);
    auto c = csv::parse_int(f[6]);
    if (!t0 || !tw || !n || !c || *c < 0 || *c >= *n)
      throw Error(ErrorCode::row_parse, path.string() + ": malformed label row", line);
    if (n_classes == 0) n_classes = static_cast<int>(*n);
    if (n_classes != *n) throw Error(ErrorCode::row_parse, path.string() + ": mixed class counts", line);
    by_slice[{std::string(f[0]), std::string(f[1]), *t0, *tw}] = static_cast<int>(*c);
  });
  LabeledData out;
  out.n_classes = n_classes == 0 ? 2 : n_classes;
  for (const auto& fv : features) {
    const auto& p = fv.provenance;
    auto it = by_slice.find({p.participant_id, p.trial_id, p.t_start, p.t_w});
    if (it == by_slice.end())
      throw Error(ErrorCode::cross_reference, "no label for slice " + p.participant_id + "/" + p.trial_id + "@" +
                                                  csv::format_double(p.t_start));
    out.rows.push_back(fv);
    out.labels.push_back(it->second);
  }
  return out;
}

}  // namespace chronogaze
