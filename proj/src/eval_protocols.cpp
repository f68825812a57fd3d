#include "chronogaze/eval_protocols.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "chronogaze/csv.hpp"
#include "chronogaze/error.hpp"
#include "chronogaze/parallel.hpp"
#include "chronogaze/rng.hpp"
#include "json.hpp"

namespace chronogaze::eval {

using learn::PipelineSpec;

namespace {

constexpr double kEps = 1e-9;

std::vector<int> labels_at(const LabeledData& data, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(data.labels[i]);
  return out;
}

std::size_t distinct_trials(const LabeledData& data) {
  std::set<TrialKey> keys;
  for (const auto& r : data.rows) keys.insert(r.provenance.trial());
  return keys.size();
}

void describe_subset(EvaluationReport& report, std::span<const int> labels, int n_classes) {
  const auto dist = class_distribution(labels, n_classes);
  report.class_counts = dist.counts;
  report.majority_share = dist.majority_share;
}

void summarize(EvaluationReport& report) {
  report.repetitions = static_cast<int>(report.accuracies.size());
  std::tie(report.mean, report.std) = mean_std(report.accuracies);
  report.single_repetition = report.repetitions == 1;
}

void append_note(EvaluationReport& report, const std::string& note) {
  if (!report.note.empty()) report.note += "; ";
  report.note += note;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(ConditionKey key) {
  return key == ConditionKey::n_active ? "n_active" : "planned_duration";
}

std::string Setting::tag() const {
  return LabelSpec::make(family, n_classes).tag() + "_tw" + csv::format_double(t_w);
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

EvaluationReport holdout_eval(const PipelineSpec& spec, const LabeledData& analysis, const LabeledData& test,
                              int repetitions, std::uint64_t seed, double train_fraction) {
  if (repetitions < 1) throw Error(ErrorCode::invalid_argument, "repetitions must be positive");
  if (test.size() == 0) throw Error(ErrorCode::invalid_argument, "empty test set");
  if (analysis.size() < 2) throw Error(ErrorCode::stratification_impossible, "fewer than two analysis samples");

  std::set<std::tuple<std::string, std::string, double>> seen;
  for (const auto& r : analysis.rows)
    seen.emplace(r.provenance.participant_id, r.provenance.trial_id, r.provenance.t_start);
  for (const auto& r : test.rows)
    if (seen.contains({r.provenance.participant_id, r.provenance.trial_id, r.provenance.t_start}))
      throw Error(ErrorCode::leakage, "test slice " + to_string(r.provenance.trial()) + " @" +
                                          csv::format_double(r.provenance.t_start) + " is also in the analysis set");

  const int n_classes = std::max(analysis.n_classes, test.n_classes);
  const auto x_analysis = learn::to_matrix(analysis.rows);
  const auto x_test = learn::to_matrix(test.rows);

  EvaluationReport report;
  report.setting.protocol = "holdout";
  report.setting.subset = "all";
  if (!test.rows.empty()) report.setting.t_w = test.rows.front().provenance.t_w;
  report.setting.n_classes = n_classes;
  report.accuracies.assign(static_cast<std::size_t>(repetitions), 0.0);
  parallel_for(report.accuracies.size(), [&](std::size_t r) {
    const auto train = stratified_partition(analysis.labels, 1.0 - train_fraction, derive_seed(seed, {r})).first;
    const auto fitted = learn::fit_pipeline(spec, x_analysis.select_rows(train), labels_at(analysis, train),
                                            n_classes, derive_seed(seed, {r, 1}));
    report.accuracies[r] = learn::accuracy(test.labels, fitted.predict(x_test));
  });
  summarize(report);
  report.n_samples = test.size();
  report.n_trials = distinct_trials(test);
  describe_subset(report, test.labels, n_classes);
  if (report.single_repetition) append_note(report, "single repetition, std reported as 0");
  return report;
}

std::vector<EvaluationReport> condition_split_eval(const PipelineSpec& spec, const LabeledData& data, ConditionKey key,
                                                   int repetitions, std::uint64_t seed, double train_fraction) {
  if (repetitions < 1) throw Error(ErrorCode::invalid_argument, "repetitions must be positive");
  std::map<long, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& p = data.rows[i].provenance;
    const long value = key == ConditionKey::n_active ? p.n_active : std::lround(p.planned_duration);
    groups[value].push_back(i);
  }

  std::vector<EvaluationReport> reports;
  for (const auto& [value, idx] : groups) {
    const auto subset = data.subset(idx);
    EvaluationReport report;
    report.setting.protocol = std::string(to_string(key));
    report.setting.subset = std::to_string(value);
    report.setting.n_classes = data.n_classes;
    report.setting.t_w = subset.rows.front().provenance.t_w;
    report.n_samples = subset.size();
    report.n_trials = distinct_trials(subset);
    describe_subset(report, subset.labels, data.n_classes);

    if (report.n_samples == report.n_trials) {
      report.degenerate = true;
      append_note(report, "one slice per trial");
    }
    if (std::any_of(report.class_counts.begin(), report.class_counts.end(),
                    [](std::size_t c) { return c == 1; })) {
      report.degenerate = true;
      append_note(report, "class with fewer than two members");
    }

    const auto x = learn::to_matrix(subset.rows);
    std::vector<double> acc(static_cast<std::size_t>(repetitions), 0.0);
    try {
      const auto v = static_cast<std::uint64_t>(value);
      parallel_for(acc.size(), [&](std::size_t r) {
        auto [train, test] = stratified_partition(subset.labels, 1.0 - train_fraction, derive_seed(seed, {v, r}));
        if (train.empty() || test.empty())
          throw Error(ErrorCode::stratification_impossible, "subset too small to split");
        const auto fitted = learn::fit_pipeline(spec, x.select_rows(train), labels_at(subset, train),
                                                data.n_classes, derive_seed(seed, {v, r, 1}));
        acc[r] = learn::accuracy(labels_at(subset, test), fitted.predict(x.select_rows(test)));
      });
      report.accuracies = std::move(acc);
    } catch (const Error& e) {
      report.degenerate = true;
      append_note(report, e.what());
    }
    summarize(report);
    if (report.single_repetition) append_note(report, "single repetition, std reported as 0");
    reports.push_back(std::move(report));
  }
  return reports;
}

bool is_setup_slice(const Provenance& p, double setup_window) {
  if (p.t_w > setup_window + kEps) return p.t_start < kEps;
  return p.t_start + p.t_w <= setup_window + kEps;
}

FinetuneEntry finetune_eval(const PipelineSpec& spec, const LabeledData& data, std::string_view target_participant,
                            int repetitions, std::uint64_t seed, double setup_window) {
  if (repetitions < 1) throw Error(ErrorCode::invalid_argument, "repetitions must be positive");
  std::vector<std::size_t> others, setup, evaluation;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& p = data.rows[i].provenance;
    if (p.participant_id != target_participant)
      others.push_back(i);
    else if (is_setup_slice(p, setup_window))
      setup.push_back(i);
    else
      evaluation.push_back(i);
  }
  if (setup.empty() && evaluation.empty())
    throw Error(ErrorCode::invalid_argument, "participant " + std::string(target_participant) + " has no slices");
  if (others.empty()) throw Error(ErrorCode::invalid_argument, "fine-tuning needs at least one other participant");
  if (evaluation.empty())
    throw Error(ErrorCode::no_eval_slices, "participant " + std::string(target_participant) + " has no post-setup slices");

  std::vector<std::size_t> augmented = others;
  augmented.insert(augmented.end(), setup.begin(), setup.end());
  std::sort(augmented.begin(), augmented.end());

  const auto x = learn::to_matrix(data.rows);
  const auto x_eval = x.select_rows(evaluation);
  const auto y_eval = labels_at(data, evaluation);
  const auto x_with = x.select_rows(augmented);
  const auto y_with = labels_at(data, augmented);
  const auto x_without = x.select_rows(others);
  const auto y_without = labels_at(data, others);

  FinetuneEntry entry;
  entry.t_w = data.rows[evaluation.front()].provenance.t_w;
  entry.n_setup = setup.size();
  entry.n_eval = evaluation.size();
  entry.with_setup.assign(static_cast<std::size_t>(repetitions), 0.0);
  entry.without_setup.assign(static_cast<std::size_t>(repetitions), 0.0);
  parallel_for(static_cast<std::size_t>(repetitions), [&](std::size_t r) {
    const auto s = derive_seed(seed, {r});
    const auto a = learn::fit_pipeline(spec, x_with, y_with, data.n_classes, s);
    const auto b = learn::fit_pipeline(spec, x_without, y_without, data.n_classes, s);
    entry.with_setup[r] = learn::accuracy(y_eval, a.predict(x_eval));
    entry.without_setup[r] = learn::accuracy(y_eval, b.predict(x_eval));
  });
  entry.accuracy_with = mean_std(entry.with_setup).first;
  entry.accuracy_without = mean_std(entry.without_setup).first;
  entry.delta_pp = 100.0 * (entry.accuracy_with - entry.accuracy_without);
  return entry;
}

EvaluationReport majority_baseline(const LabeledData& analysis, const LabeledData& test, int repetitions,
                                   std::uint64_t seed) {
  PipelineSpec spec;
  spec.classifier = learn::ClassifierKind::majority;
  auto report = holdout_eval(spec, analysis, test, repetitions, seed);
  report.setting.protocol = "holdout_majority";
  return report;
}

std::string report_json(const ReportBundle& bundle) {
  nlohmann::json doc;
  doc["format"] = "chronogaze.report";
  doc["version"] = 1;
  auto& protocols = doc["protocols"];
  protocols = nlohmann::json::object();
  for (const auto& r : bundle.reports) {
    nlohmann::json m;
    m["family"] = to_string(r.setting.family);
    m["n_classes"] = r.setting.n_classes;
    m["t_w"] = r.setting.t_w;
    m["mean"] = r.mean;
    m["std"] = r.std;
    m["repetitions"] = r.repetitions;
    m["accuracies"] = r.accuracies;
    m["n_samples"] = r.n_samples;
    m["n_trials"] = r.n_trials;
    m["class_counts"] = r.class_counts;
    m["majority_share"] = r.majority_share;
    m["single_repetition"] = r.single_repetition;
    m["degenerate"] = r.degenerate;
    m["note"] = r.note;
    protocols[r.setting.protocol][r.setting.tag()][r.setting.subset] = std::move(m);
  }
  for (const auto& f : bundle.finetune) {
    for (const auto& e : f.entries) {
      nlohmann::json m;
      m["accuracy_with_setup"] = e.accuracy_with;
      m["accuracy_without_setup"] = e.accuracy_without;
      m["delta_pp"] = e.delta_pp;
      m["with_setup"] = e.with_setup;
      m["without_setup"] = e.without_setup;
      m["n_setup"] = e.n_setup;
      m["n_eval"] = e.n_eval;
      protocols["finetune"][f.participant_id]["tw" + csv::format_double(e.t_w)] = std::move(m);
    }
  }
  return doc.dump(2) + "\n";
}

std::string report_csv(const ReportBundle& bundle) {
  std::string out =
      "family,n_classes,t_w_s,protocol,subset,repetitions,n_samples,n_trials,mean,std,majority_share,"
      "single_repetition,degenerate,note\n";
  for (const auto& r : bundle.reports) {
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    std::replace(note.begin(), note.end(), '\n', ' ');
    out += std::string(to_string(r.setting.family)) + ',' + std::to_string(r.setting.n_classes) + ',' +
           csv::format_double(r.setting.t_w) + ',' + r.setting.protocol + ',' + r.setting.subset + ',' +
           std::to_string(r.repetitions) + ',' + std::to_string(r.n_samples) + ',' + std::to_string(r.n_trials) +
           ',' + csv::format_double(r.mean) + ',' + csv::format_double(r.std) + ',' +
           csv::format_double(r.majority_share) + ',' + (r.single_repetition ? "1" : "0") + ',' +
           (r.degenerate ? "1" : "0") + ',' + note + '\n';
  }
  return out;
}

std::string finetune_csv(std::span<const FinetuneReport> reports) {
  std::string out = "participant_id,t_w_s,accuracy_with_setup,accuracy_without_setup,delta_pp,n_setup,n_eval\n";
  for (const auto& f : reports)
    for (const auto& e : f.entries)
      out += f.participant_id + ',' + csv::format_double(e.t_w) + ',' + csv::format_double(e.accuracy_with) + ',' +
             csv::format_double(e.accuracy_without) + ',' + csv::format_double(e.delta_pp) + ',' +
             std::to_string(e.n_setup) + ',' + std::to_string(e.n_eval) + '\n';
  return out;
}

std::string condition_plot_svg(std::span<const EvaluationReport> reports, std::string_view title) {
  constexpr double width = 640, height = 400, left = 60, right = 20, top = 40, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  const std::size_t n = reports.size();
  auto px = [&](std::size_t i) { return left + plot_w * (n > 1 ? static_cast<double>(i) / (n - 1) : 0.5); };
  auto py = [&](double acc) { return top + plot_h * (1.0 - std::clamp(acc, 0.0, 1.0)); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         xml_escape(title) + "</text>\n";
  for (int tick = 0; tick <= 10; tick += 2) {
    const double y = py(tick / 10.0);
    svg += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left + plot_w) + "\" y2=\"" +
           fixed(y) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fixed(tick / 10.0, 1) +
           "</text>\n";
  }
  svg += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top + plot_h) + "\" x2=\"" + fixed(left + plot_w) +
         "\" y2=\"" + fixed(top + plot_h) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(left) + "\" y2=\"" +
         fixed(top + plot_h) + "\" stroke=\"black\"/>\n";

  std::string mean_line, majority_line;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = reports[i];
    const double x = px(i);
    mean_line += fixed(x) + "," + fixed(py(r.mean)) + " ";
    majority_line += fixed(x) + "," + fixed(py(r.majority_share)) + " ";
    svg += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(py(r.mean - r.std)) + "\" x2=\"" + fixed(x) + "\" y2=\"" +
           fixed(py(r.mean + r.std)) + "\" stroke=\"#1f77b4\"/>\n";
    svg += "<circle cx=\"" + fixed(x) + "\" cy=\"" + fixed(py(r.mean)) + "\" r=\"3\" fill=\"" +
           (r.degenerate ? "#d62728" : "#1f77b4") + "\"/>\n";
    svg += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(top + plot_h + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + xml_escape(r.setting.subset) +
           "</text>\n";
  }
  if (n > 0) {
    svg += "<polyline points=\"" + mean_line + "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
    svg += "<polyline points=\"" + majority_line +
           "\" fill=\"none\" stroke=\"#7f7f7f\" stroke-dasharray=\"6,4\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + fixed(left + plot_w / 2) + "\" y=\"" + fixed(height - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           xml_escape(reports.front().setting.protocol) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace chronogaze::eval
