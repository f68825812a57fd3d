#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "chronogaze/automl.hpp"
#include "chronogaze/cli.hpp"
#include "chronogaze/error.hpp"
#include "chronogaze/features.hpp"
#include "chronogaze/labeling.hpp"
#include "chronogaze/synth.hpp"
#include "chronogaze/wavelet.hpp"

namespace py = pybind11;
using namespace chronogaze;

namespace {

learn::Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  learn::Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw Error(ErrorCode::invalid_argument, "ragged feature matrix");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

py::dict feature_row(const FeatureVector& f) {
  py::dict d;
  d["participant_id"] = f.provenance.participant_id;
  d["trial_id"] = f.provenance.trial_id;
  d["t_start"] = f.provenance.t_start;
  d["t_w"] = f.provenance.t_w;
  d["planned_duration"] = f.provenance.planned_duration;
  d["n_active"] = f.provenance.n_active;
  d["values"] = std::vector<double>(f.values.begin(), f.values.end());
  return d;
}

}  // namespace

PYBIND11_MODULE(_chronogaze, m) {
  m.doc() = "Eye-tracking time-perception classification";

  py::register_exception<Error>(m, "ChronogazeError");

  m.def("feature_names", [] {
    std::vector<std::string> out;
    for (auto n : feature_names()) out.emplace_back(n);
    return out;
  });

  m.def("level2_detail", [](const std::vector<double>& x) { return wavelet::level2_detail(x); }, py::arg("x"),
        "Level-2 detail coefficients of a periodized two-level sym16 decomposition.");

  m.def(
      "ipa",
      [](const std::vector<double>& times, const std::vector<double>& diameters, double t_start, double span,
         double rate_hz) {
        const auto r = ipa(times, diameters, t_start, span, rate_hz);
        return py::make_tuple(r.value, r.count, r.too_short);
      },
      py::arg("times"), py::arg("diameters"), py::arg("t_start"), py::arg("span"), py::arg("rate_hz") = 120.0);

  m.def("relative_estimation_error", &relative_estimation_error);
  m.def("duration_label", &duration_label, py::arg("e_rel"), py::arg("n_classes"));
  m.def("ppot_label", &ppot_label, py::arg("likert"), py::arg("n_classes"));

  m.def(
      "generate",
      [](const std::string& config_json, const std::string& out_dir) {
        synth::generate(synth::config_from_json(config_json), out_dir);
      },
      py::arg("config_json"), py::arg("out_dir"), "Writes a synthetic dataset as the four CSV files.");

  m.def(
      "extract",
      [](const std::string& data_dir, double t_w) {
        const auto dataset = load_dataset(DatasetPaths::in_directory(data_dir));
        py::list out;
        for (const auto& f : extract_all(dataset, t_w)) out.append(feature_row(f));
        return out;
      },
      py::arg("data_dir"), py::arg("t_w"), "Baseline-subtracted feature rows of every slice.");

  m.def(
      "search",
      [](const std::vector<std::vector<double>>& x, const std::vector<int>& y, int n_classes, int max_hpo_steps,
         int patience, std::uint64_t seed) {
        automl::SearchConfig config;
        config.max_hpo_steps = max_hpo_steps;
        config.early_stop_patience = patience;
        config.seed = seed;
        const auto matrix = to_matrix(x);
        const auto r = automl::run_search(matrix, y, n_classes, config);
        py::dict d;
        d["best"] = r.best.describe();
        d["best_spec_json"] = learn::spec_to_json(r.best);
        d["best_mean"] = r.best_mean;
        d["evaluations"] = r.ledger.entries.size();
        d["early_stopped"] = r.early_stopped;
        d["ledger_csv"] = r.ledger.to_csv(false);
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("n_classes"), py::arg("max_hpo_steps") = 16, py::arg("patience") = 16,
      py::arg("seed") = 0);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one command-line subcommand; returns (exit code, stdout, stderr).");
}
