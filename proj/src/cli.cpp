#include "chronogaze/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "chronogaze/automl.hpp"
#include "chronogaze/csv.hpp"
#include "chronogaze/error.hpp"
#include "chronogaze/eval_protocols.hpp"
#include "chronogaze/event_stream.hpp"
#include "chronogaze/features.hpp"
#include "chronogaze/labeling.hpp"
#include "chronogaze/parallel.hpp"
#include "chronogaze/synth.hpp"
#include "json.hpp"

namespace chronogaze::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string data_dir, gaze, fixations, trials, questionnaire;
  std::string out_dir = ".";
  std::string features_dir, automl_dir;
  std::string config;
  std::string tw = "1,2,5,10,15,20,30,45,60";
  std::string family = "duration";
  int classes = 2;
  std::string settings;
  double min_confidence = 0.6;
  std::string empty_policy = "zero";
  int max_hpo_steps = 1024;
  int patience = 100;
  int splits = 5;
  double train_fraction = 0.8;
  double test_fraction = 0.2;
  int reps = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string granularity = "slice";
  std::string participants;
  double setup_window = 30.0;
};

struct LabelSetting {
  LabelFamily family;
  int n_classes;
  std::string tag() const { return LabelSpec::make(family, n_classes).tag(); }
};

/// Outputs are built in memory and written only once a command has
/// succeeded, each file via temp file + rename.
class Staging {
 public:
  explicit Staging(fs::path dir) : dir_(std::move(dir)) {}
  void add(const std::string& name, std::string content) { files_[name] = std::move(content); }
  std::vector<fs::path> commit() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + dir_.string() + ": " + ec.message());
    std::vector<fs::path> written;
    for (const auto& [name, content] : files_) {
      csv::write_atomic(dir_ / name, content);
      written.push_back(dir_ / name);
    }
    return written;
  }

 private:
  fs::path dir_;
  std::map<std::string, std::string> files_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tw_name(double t_w) { return "tw" + csv::format_double(t_w); }

std::vector<double> parse_windows(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = csv::parse_double(item);
    if (!v || !(*v > 0.0)) throw UsageError("--tw: '" + item + "' is not a positive number");
    if (std::find(out.begin(), out.end(), *v) == out.end()) out.push_back(*v);
  }
  if (out.empty()) throw UsageError("--tw: no window sizes given");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<LabelSetting> parse_settings(const Options& o) {
  auto make = [](const std::string& family, int n) {
    if (n != 2 && n != 3) throw UsageError("--classes must be 2 or 3");
    try {
      return LabelSetting{parse_label_family(family), n};
    } catch (const Error&) {
      throw UsageError("unknown label family '" + family + "'");
    }
  };
  if (o.settings.empty()) return {make(o.family, o.classes)};
  if (o.settings == "all")
    return {make("duration", 2), make("duration", 3), make("ppot", 2), make("ppot", 3)};
  std::vector<LabelSetting> out;
  for (const auto& item : split_list(o.settings)) {
    const auto pos = item.rfind('_');
    if (pos == std::string::npos) throw UsageError("--settings: expected family_classes, got '" + item + "'");
    const auto n = csv::parse_int(item.substr(pos + 1));
    if (!n) throw UsageError("--settings: bad class count in '" + item + "'");
    out.push_back(make(item.substr(0, pos), static_cast<int>(*n)));
  }
  return out;
}

DatasetPaths data_paths(const Options& o) {
  DatasetPaths p = o.data_dir.empty() ? DatasetPaths{} : DatasetPaths::in_directory(o.data_dir);
  if (!o.gaze.empty()) p.gaze = o.gaze;
  if (!o.fixations.empty()) p.fixations = o.fixations;
  if (!o.trials.empty()) p.trials = o.trials;
  if (!o.questionnaire.empty()) p.questionnaire = o.questionnaire;
  return p;
}

void require_paths(std::initializer_list<std::pair<const char*, const fs::path*>> items) {
  for (const auto& [flag, path] : items)
    if (path->empty()) throw UsageError(std::string(flag) + " (or --data-dir) is required");
}

fs::path features_dir(const Options& o) { return o.features_dir.empty() ? fs::path(o.out_dir) : fs::path(o.features_dir); }
fs::path automl_dir(const Options& o) { return o.automl_dir.empty() ? fs::path(o.out_dir) : fs::path(o.automl_dir); }

fs::path features_file(const Options& o, double t_w) {
  return features_dir(o) / ("features_" + tw_name(t_w) + ".csv");
}
fs::path labels_file(const Options& o, double t_w, const LabelSetting& s) {
  return features_dir(o) / ("labels_" + tw_name(t_w) + "_" + s.tag() + ".csv");
}
std::string setting_stem(double t_w, const LabelSetting& s) { return s.tag() + "_" + tw_name(t_w); }

class Manifest {
 public:
  explicit Manifest(std::string command) { doc_["command"] = std::move(command); }
  json& config() { return doc_["config"]; }
  void input(const fs::path& p) { inputs_.push_back(p); }
  std::string render(const std::vector<fs::path>& outputs) {
    auto entries = [](std::vector<fs::path> paths) {
      std::sort(paths.begin(), paths.end());
      paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
      json arr = json::array();
      for (const auto& p : paths) arr.push_back({{"path", p.string()}, {"sha256", sha256_hex(read_file(p))}});
      return arr;
    };
    doc_["inputs"] = entries(inputs_);
    doc_["outputs"] = entries(outputs);
    return doc_.dump(2) + "\n";
  }

 private:
  json doc_;
  std::vector<fs::path> inputs_;
};

json common_config(const Options& o) {
  return {{"seed", o.seed}, {"threads", o.threads}, {"out_dir", o.out_dir}};
}

// ---------------------------------------------------------------- commands

std::string cmd_synth(const Options& o, std::ostream& err) {
  synth::SynthConfig config;
  Manifest manifest("synth");
  if (!o.config.empty()) {
    config = synth::load_config(o.config);
    manifest.input(o.config);
  }
  config.seed = o.seed;
  config.validate();
  const auto data = synth::generate_dataset(config);
  fs::create_directories(o.out_dir);
  const auto paths = DatasetPaths::in_directory(o.out_dir);
  write_dataset(data.dataset, paths);
  csv::write_atomic(fs::path(o.out_dir) / "synth_config.json", synth::config_to_json(config));
  err << "synth: " << data.dataset.trials.size() << " trials\n";
  manifest.config() = common_config(o);
  manifest.config()["synth"] = json::parse(synth::config_to_json(config));
  return manifest.render({paths.gaze, paths.fixations, paths.trials, paths.questionnaire,
                          fs::path(o.out_dir) / "synth_config.json"});
}

std::string cmd_extract(const Options& o, std::ostream& err) {
  const auto paths = data_paths(o);
  require_paths({{"--gaze", &paths.gaze}, {"--fixations", &paths.fixations}, {"--trials", &paths.trials},
                 {"--questionnaire", &paths.questionnaire}});
  if (!(o.min_confidence >= 0.0 && o.min_confidence <= 1.0)) throw UsageError("--min-confidence must lie in [0, 1]");
  const auto windows = parse_windows(o.tw);

  FeatureOptions options;
  options.min_confidence = o.min_confidence;
  options.empty_policy = o.empty_policy == "drop" ? EmptyWindowPolicy::drop : EmptyWindowPolicy::zero;

  const auto dataset = load_dataset(paths);
  err << "extract: " << dataset.trials.size() << " trials retained, " << dataset.screening_log.size()
      << " excluded\n";

  Staging staging(o.out_dir);
  std::string log = "participant_id,trial_id,reason\n";
  for (const auto& e : dataset.screening_log)
    log += e.trial.participant_id + ',' + e.trial.trial_id + ',' + std::string(to_string(e.reason)) + '\n';
  staging.add("screening_log.csv", log);

  for (double t_w : windows) {
    FeatureDiagnostics diagnostics;
    const auto features = extract_all(dataset, t_w, options, &diagnostics);
    err << "extract: t_w=" << t_w << " -> " << features.size() << " slices";
    if (diagnostics.short_ipa_series) err << ", " << diagnostics.short_ipa_series << " IPA series too short";
    if (diagnostics.trials_without_slices) err << ", " << diagnostics.trials_without_slices << " trials shorter than t_w";
    err << '\n';
    staging.add("features_" + tw_name(t_w) + ".csv", features_csv(features));
  }

  Manifest manifest("extract");
  for (const auto* p : {&paths.gaze, &paths.fixations, &paths.trials, &paths.questionnaire}) manifest.input(*p);
  manifest.config() = common_config(o);
  manifest.config()["tw"] = windows;
  manifest.config()["min_confidence"] = o.min_confidence;
  manifest.config()["empty_policy"] = o.empty_policy;
  return manifest.render(staging.commit());
}

std::string cmd_label(const Options& o, std::ostream& err) {
  const auto paths = data_paths(o);
  require_paths({{"--trials", &paths.trials}, {"--questionnaire", &paths.questionnaire}});
  const auto windows = parse_windows(o.tw);
  const auto settings = parse_settings(o);
  const auto metadata = load_metadata(paths.trials, paths.questionnaire);

  Manifest manifest("label");
  manifest.input(paths.trials);
  manifest.input(paths.questionnaire);
  Staging staging(o.out_dir);
  for (double t_w : windows) {
    const auto path = features_file(o, t_w);
    const auto features = read_features(path);
    manifest.input(path);
    for (const auto& s : settings) {
      const auto labeling = label_dataset(features, metadata, LabelSpec::make(s.family, s.n_classes));
      err << "label: " << setting_stem(t_w, s) << " majority share " << labeling.distribution.majority_share << '\n';
      staging.add("labels_" + tw_name(t_w) + "_" + s.tag() + ".csv", labels_csv(features, labeling));
    }
  }
  manifest.config() = common_config(o);
  manifest.config()["tw"] = windows;
  json tags = json::array();
  for (const auto& s : settings) tags.push_back(s.tag());
  manifest.config()["settings"] = tags;
  return manifest.render(staging.commit());
}

struct SettingData {
  std::vector<FeatureVector> features;
  LabeledData data;
};

SettingData load_setting(const Options& o, double t_w, const LabelSetting& s, Manifest& manifest) {
  SettingData d;
  const auto fpath = features_file(o, t_w);
  const auto lpath = labels_file(o, t_w, s);
  d.features = read_features(fpath);
  d.data = read_labels(lpath, d.features);
  manifest.input(fpath);
  manifest.input(lpath);
  return d;
}

IndexSplit analysis_test_split(const LabeledData& data, double test_fraction, std::uint64_t seed,
                               SplitGranularity granularity) {
  std::map<TrialKey, std::size_t> group_of;
  std::vector<std::size_t> groups;
  groups.reserve(data.size());
  for (const auto& r : data.rows) groups.push_back(group_of.emplace(r.provenance.trial(), group_of.size()).first->second);
  return split_analysis_test(data.labels, groups, test_fraction, seed, granularity);
}

automl::SearchConfig search_config(const Options& o) {
  automl::SearchConfig c;
  c.max_hpo_steps = o.max_hpo_steps;
  c.early_stop_patience = o.patience;
  c.n_eval_splits = o.splits;
  c.train_fraction = o.train_fraction;
  c.seed = o.seed;
  try {
    c.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

std::string cmd_automl(const Options& o, std::ostream& err) {
  const auto windows = parse_windows(o.tw);
  const auto settings = parse_settings(o);
  const auto config = search_config(o);
  if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0)) throw UsageError("--test-fraction must lie in (0, 1)");
  const auto granularity = parse_split_granularity(o.granularity);

  Manifest manifest("automl");
  Staging staging(o.out_dir);
  for (double t_w : windows) {
    for (const auto& s : settings) {
      const auto d = load_setting(o, t_w, s, manifest);
      const auto split = analysis_test_split(d.data, o.test_fraction, derive_seed(o.seed, {0}), granularity);
      const auto analysis = d.data.subset(split.analysis);
      const auto x = learn::to_matrix(analysis.rows);
      const auto result = automl::run_search(x, analysis.labels, analysis.n_classes, config);
      const auto fitted = automl::finalize(x, analysis.labels, analysis.n_classes, result.best, derive_seed(o.seed, {3}));

      const auto stem = setting_stem(t_w, s);
      err << "automl: " << stem << " best " << result.best.describe() << " mean " << result.best_mean << " ("
          << result.ledger.count(2) << " phase-2 steps" << (result.early_stopped ? ", early stop" : "") << ")\n";
      staging.add("search_ledger_" + stem + ".csv", result.ledger.to_csv());
      staging.add("best_pipeline_" + stem + ".json", learn::serialize(fitted));
      json summary = {{"format", "chronogaze.automl"},
                      {"version", 1},
                      {"setting", s.tag()},
                      {"t_w", t_w},
                      {"seed", o.seed},
                      {"split_seed", derive_seed(o.seed, {0})},
                      {"test_fraction", o.test_fraction},
                      {"split_granularity", o.granularity},
                      {"n_analysis", split.analysis.size()},
                      {"n_test", split.test.size()},
                      {"best_mean_accuracy", result.best_mean},
                      {"early_stopped", result.early_stopped},
                      {"best_spec", json::parse(learn::spec_to_json(result.best))}};
      staging.add("automl_" + stem + ".json", summary.dump(2) + "\n");
    }
  }
  manifest.config() = common_config(o);
  manifest.config()["tw"] = windows;
  manifest.config()["max_hpo_steps"] = config.max_hpo_steps;
  manifest.config()["patience"] = config.early_stop_patience;
  manifest.config()["splits"] = config.n_eval_splits;
  manifest.config()["train_fraction"] = config.train_fraction;
  manifest.config()["test_fraction"] = o.test_fraction;
  manifest.config()["split_granularity"] = o.granularity;
  return manifest.render(staging.commit());
}

struct AutomlSummary {
  learn::PipelineSpec spec;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.2;
  SplitGranularity granularity = SplitGranularity::slice;
};

AutomlSummary read_summary(const Options& o, double t_w, const LabelSetting& s, Manifest& manifest) {
  const auto path = automl_dir(o) / ("automl_" + setting_stem(t_w, s) + ".json");
  const auto text = read_file(path);
  manifest.input(path);
  try {
    const auto j = json::parse(text);
    AutomlSummary a;
    a.spec = learn::spec_from_json(j.at("best_spec").dump());
    a.split_seed = j.at("split_seed").get<std::uint64_t>();
    a.test_fraction = j.at("test_fraction").get<double>();
    a.granularity = parse_split_granularity(j.at("split_granularity").get<std::string>());
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::serialization, path.string() + ": " + e.what());
  }
}

std::string cmd_eval(const Options& o, std::ostream& err) {
  const auto windows = parse_windows(o.tw);
  const auto settings = parse_settings(o);
  if (o.reps < 1) throw UsageError("--reps must be positive");

  Manifest manifest("eval");
  Staging staging(o.out_dir);
  eval::ReportBundle bundle;
  for (const auto& s : settings) {
    std::vector<eval::EvaluationReport> holdout_curve;
    for (double t_w : windows) {
      const auto d = load_setting(o, t_w, s, manifest);
      const auto summary = read_summary(o, t_w, s, manifest);
      const auto split = analysis_test_split(d.data, summary.test_fraction, summary.split_seed, summary.granularity);
      const auto analysis = d.data.subset(split.analysis);
      const auto test = d.data.subset(split.test);

      auto stamp = [&](eval::EvaluationReport& r) {
        r.setting.family = s.family;
        r.setting.n_classes = s.n_classes;
        r.setting.t_w = t_w;
      };
      auto holdout = eval::holdout_eval(summary.spec, analysis, test, o.reps, derive_seed(o.seed, {0}));
      auto majority = eval::majority_baseline(analysis, test, o.reps, derive_seed(o.seed, {0}));
      stamp(holdout);
      stamp(majority);
      err << "eval: " << setting_stem(t_w, s) << " holdout " << holdout.mean << " +- " << holdout.std
          << " (majority " << majority.mean << ")\n";
      auto point = holdout;
      point.setting.subset = csv::format_double(t_w);
      holdout_curve.push_back(point);
      bundle.reports.push_back(std::move(holdout));
      bundle.reports.push_back(std::move(majority));

      for (auto key : {eval::ConditionKey::n_active, eval::ConditionKey::planned_duration}) {
        auto reports = eval::condition_split_eval(summary.spec, d.data, key, o.reps, derive_seed(o.seed, {1}));
        for (auto& r : reports) stamp(r);
        staging.add("plot_" + setting_stem(t_w, s) + "_" + std::string(eval::to_string(key)) + ".svg",
                    eval::condition_plot_svg(reports, setting_stem(t_w, s) + " by " + std::string(eval::to_string(key))));
        for (auto& r : reports) bundle.reports.push_back(std::move(r));
      }
    }
    staging.add("plot_" + s.tag() + "_holdout.svg", eval::condition_plot_svg(holdout_curve, s.tag() + " holdout by t_w"));
  }
  staging.add("report.json", eval::report_json(bundle));
  staging.add("report.csv", eval::report_csv(bundle));
  manifest.config() = common_config(o);
  manifest.config()["tw"] = windows;
  manifest.config()["reps"] = o.reps;
  return manifest.render(staging.commit());
}

std::string cmd_finetune(const Options& o, std::ostream& err) {
  const auto windows = parse_windows(o.tw);
  const auto settings = parse_settings(o);
  if (o.reps < 1) throw UsageError("--reps must be positive");
  if (!(o.setup_window > 0.0)) throw UsageError("--setup-window must be positive");

  Manifest manifest("finetune");
  Staging staging(o.out_dir);
  for (const auto& s : settings) {
    std::map<std::string, eval::FinetuneReport> by_participant;
    for (double t_w : windows) {
      const auto d = load_setting(o, t_w, s, manifest);
      const auto summary = read_summary(o, t_w, s, manifest);
      std::vector<std::string> targets = split_list(o.participants);
      if (targets.empty()) {
        for (const auto& r : d.data.rows)
          if (std::find(targets.begin(), targets.end(), r.provenance.participant_id) == targets.end())
            targets.push_back(r.provenance.participant_id);
        std::sort(targets.begin(), targets.end());
      }
      for (std::size_t i = 0; i < targets.size(); ++i) {
        try {
          auto entry = eval::finetune_eval(summary.spec, d.data, targets[i], o.reps,
                                           derive_seed(o.seed, {static_cast<std::uint64_t>(i)}), o.setup_window);
          err << "finetune: " << setting_stem(t_w, s) << ' ' << targets[i] << " delta " << entry.delta_pp << " pp\n";
          auto& report = by_participant[targets[i]];
          report.participant_id = targets[i];
          report.entries.push_back(std::move(entry));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::no_eval_slices) throw;
          err << "finetune: " << setting_stem(t_w, s) << ' ' << targets[i] << " skipped: " << e.what() << '\n';
        }
      }
    }
    eval::ReportBundle bundle;
    for (auto& [_, r] : by_participant) bundle.finetune.push_back(std::move(r));
    staging.add("finetune_" + s.tag() + ".csv", eval::finetune_csv(bundle.finetune));
    staging.add("finetune_" + s.tag() + ".json", eval::report_json(bundle));
  }
  manifest.config() = common_config(o);
  manifest.config()["tw"] = windows;
  manifest.config()["reps"] = o.reps;
  manifest.config()["setup_window"] = o.setup_window;
  return manifest.render(staging.commit());
}

void add_data_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--data-dir", o.data_dir, "Directory holding gaze.csv, fixations.csv, trials.csv, questionnaire.csv");
  cmd->add_option("--gaze", o.gaze, "Gaze samples CSV");
  cmd->add_option("--fixations", o.fixations, "Fixation events CSV");
  cmd->add_option("--trials", o.trials, "Trial metadata CSV");
  cmd->add_option("--questionnaire", o.questionnaire, "Questionnaire answers CSV");
}

void add_setting_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--tw", o.tw, "Comma-separated window sizes in seconds");
  cmd->add_option("--family", o.family, "Label family")->check(CLI::IsMember({"duration", "ppot"}));
  cmd->add_option("--classes", o.classes, "Number of classes")->check(CLI::IsMember({2, 3}));
  cmd->add_option("--settings", o.settings, "'all' or a list like duration_2,ppot_3 (overrides --family/--classes)");
  cmd->add_option("--features-dir", o.features_dir, "Where features and labels are read (default --out-dir)");
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::io, "sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Eye-tracking time-perception classification workflow", "chronogaze"};
  app.require_subcommand(1);
  app.set_config("--settings-file", "", "TOML/INI file with flag defaults");
  app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", o.out_dir, "Output directory");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--config", o.config, "Synthetic data configuration (JSON)");
  synth->add_option("--seed", o.seed, "Master seed")->required();

  auto* extract = app.add_subcommand("extract", "Extract baseline-subtracted features per window size");
  add_data_options(extract, o);
  extract->add_option("--tw", o.tw, "Comma-separated window sizes in seconds");
  extract->add_option("--min-confidence", o.min_confidence, "Confidence gate for pupil samples");
  extract->add_option("--empty-policy", o.empty_policy, "Empty windows: zero or drop")
      ->check(CLI::IsMember({"zero", "drop"}));

  auto* label = app.add_subcommand("label", "Label slices from questionnaire answers");
  add_data_options(label, o);
  add_setting_options(label, o);

  auto* search = app.add_subcommand("automl", "Search the best pipeline per window size and label setting");
  add_setting_options(search, o);
  search->add_option("--max-hpo-steps", o.max_hpo_steps, "Random-search budget")->check(CLI::NonNegativeNumber);
  auto* patience = search->add_option("--patience", o.patience, "Early-stopping patience")->check(CLI::PositiveNumber);
  search->add_option("--splits", o.splits, "Validation splits per evaluation")->check(CLI::PositiveNumber);
  search->add_option("--train-fraction", o.train_fraction, "Training share of each validation split");
  search->add_option("--test-fraction", o.test_fraction, "Held-out test share");
  search->add_option("--split-granularity", o.granularity, "slice or trial")->check(CLI::IsMember({"slice", "trial"}));
  search->add_option("--seed", o.seed, "Master seed")->required();

  auto* evaluate = app.add_subcommand("eval", "Holdout and condition-split evaluation of the searched pipelines");
  add_setting_options(evaluate, o);
  evaluate->add_option("--automl-dir", o.automl_dir, "Where automl outputs are read (default --out-dir)");
  evaluate->add_option("--reps", o.reps, "Repetitions");
  evaluate->add_option("--seed", o.seed, "Master seed")->required();

  auto* finetune = app.add_subcommand("finetune", "Per-participant fine-tuning comparison");
  add_setting_options(finetune, o);
  finetune->add_option("--automl-dir", o.automl_dir, "Where automl outputs are read (default --out-dir)");
  finetune->add_option("--reps", o.reps, "Repetitions");
  finetune->add_option("--participants", o.participants, "Comma-separated participant ids (default all)");
  finetune->add_option("--setup-window", o.setup_window, "Setup period in seconds");
  finetune->add_option("--seed", o.seed, "Master seed")->required();

  for (auto* cmd : {synth, extract, label, search, evaluate, finetune}) {
    cmd->add_option("--out-dir", o.out_dir, "Output directory");
    cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  if (search->parsed() && patience->count() == 0) o.patience = std::max(1, std::min(o.patience, o.max_hpo_steps));

  try {
    set_thread_count(o.threads);
    std::string manifest;
    if (synth->parsed()) manifest = cmd_synth(o, err);
    if (extract->parsed()) manifest = cmd_extract(o, err);
    if (label->parsed()) manifest = cmd_label(o, err);
    if (search->parsed()) manifest = cmd_automl(o, err);
    if (evaluate->parsed()) manifest = cmd_eval(o, err);
    if (finetune->parsed()) manifest = cmd_finetune(o, err);
    out << manifest;
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
}

}  // namespace chronogaze::cli
