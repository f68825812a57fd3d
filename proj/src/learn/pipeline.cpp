#include "chronogaze/learn/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "chronogaze/csv.hpp"
#include "chronogaze/error.hpp"
#include "chronogaze/gaze_data.hpp"
#include "chronogaze/parallel.hpp"
#include "chronogaze/rng.hpp"
#include "json.hpp"

namespace chronogaze::learn {

using nlohmann::json;

namespace {
constexpr std::string_view kFormat = "chronogaze.pipeline";
constexpr int kFormatVersion = 1;
}  // namespace

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::random_forest: return "random_forest";
    case ClassifierKind::extra_trees: return "extra_trees";
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::majority: return "majority";
  }
  return "random_forest";
}

ClassifierKind parse_classifier(std::string_view text) {
  for (auto k : {ClassifierKind::random_forest, ClassifierKind::extra_trees, ClassifierKind::knn,
                 ClassifierKind::majority})
    if (to_string(k) == text) return k;
  throw Error(ErrorCode::invalid_argument, "unknown classifier " + std::string(text));
}

PipelineSpec PipelineSpec::defaults(PreprocessorKind preprocessor, ClassifierKind classifier) {
  PipelineSpec s;
  s.preprocessor = preprocessor;
  s.classifier = classifier;
  s.forest = ForestParams::defaults(classifier == ClassifierKind::extra_trees ? ForestKind::extra_trees
                                                                              : ForestKind::random_forest);
  return s;
}

std::string PipelineSpec::describe() const {
  std::ostringstream out;
  out << to_string(preprocessor);
  if (preprocessor == PreprocessorKind::variance_threshold)
    out << "(tau=" << csv::format_double(preprocessor_params.variance_threshold) << ")";
  if (preprocessor == PreprocessorKind::pca)
    out << "(k=" << (preprocessor_params.pca_components > 0 ? std::to_string(preprocessor_params.pca_components)
                                                            : std::string("default"))
        << ")";
  out << "+" << to_string(classifier);
  if (classifier == ClassifierKind::random_forest || classifier == ClassifierKind::extra_trees) {
    out << "(n_trees=" << forest.n_trees << ",max_depth="
        << (forest.max_depth > 0 ? std::to_string(forest.max_depth) : std::string("none"))
        << ",min_samples_split=" << forest.min_samples_split << ",max_features=" << to_string(forest.max_features)
        << ",bootstrap=" << (forest.bootstrap ? "true" : "false") << ")";
  } else if (classifier == ClassifierKind::knn) {
    out << "(k=" << knn.k << ",vote=" << to_string(knn.vote) << ")";
  }
  return out.str();
}

namespace {

json spec_json(const PipelineSpec& s) {
  return json{{"preprocessor", to_string(s.preprocessor)},
              {"variance_threshold", s.preprocessor_params.variance_threshold},
              {"pca_components", s.preprocessor_params.pca_components},
              {"classifier", to_string(s.classifier)},
              {"n_trees", s.forest.n_trees},
              {"max_depth", s.forest.max_depth},
              {"min_samples_split", s.forest.min_samples_split},
              {"max_features", to_string(s.forest.max_features)},
              {"bootstrap", s.forest.bootstrap},
              {"knn_k", s.knn.k},
              {"knn_vote", to_string(s.knn.vote)}};
}

PipelineSpec spec_from(const json& j) {
  PipelineSpec s;
  s.preprocessor = parse_preprocessor(j.at("preprocessor").get<std::string>());
  s.preprocessor_params.variance_threshold = j.at("variance_threshold").get<double>();
  s.preprocessor_params.pca_components = j.at("pca_components").get<int>();
  s.classifier = parse_classifier(j.at("classifier").get<std::string>());
  s.forest.n_trees = j.at("n_trees").get<int>();
  s.forest.max_depth = j.at("max_depth").get<int>();
  s.forest.min_samples_split = j.at("min_samples_split").get<int>();
  s.forest.max_features = parse_max_features(j.at("max_features").get<std::string>());
  s.forest.bootstrap = j.at("bootstrap").get<bool>();
  s.knn.k = j.at("knn_k").get<int>();
  s.knn.vote = parse_vote(j.at("knn_vote").get<std::string>());
  return s;
}

json matrix_json(const Matrix& m) { return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }

Matrix matrix_from(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows() * m.cols()) throw Error(ErrorCode::serialization, "matrix size mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = data[r * m.cols() + c];
  return m;
}

/// Lexicographic order of (row values, label).
std::vector<std::size_t> canonical_order(const Matrix& x, std::span<const int> y) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a), rb = x.row(b);
    for (std::size_t c = 0; c < ra.size(); ++c)
      if (ra[c] != rb[c]) return ra[c] < rb[c];
    return y[a] < y[b];
  });
  return order;
}

}  // namespace

std::string spec_to_json(const PipelineSpec& spec) { return spec_json(spec).dump(); }

PipelineSpec spec_from_json(std::string_view text) {
  try {
    return spec_from(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::serialization, e.what());
  }
}

std::vector<int> FittedPipeline::predict(const Matrix& x) const {
  const Matrix z = transform(preprocessor, x);
  if (const auto* f = std::get_if<ForestModel>(&model)) return learn::predict(*f, z);
  if (const auto* k = std::get_if<KnnModel>(&model)) return learn::predict(*k, z);
  return std::vector<int>(x.rows(), std::get<MajorityModel>(model).label);
}

FittedPipeline fit_pipeline(const PipelineSpec& spec, const Matrix& x_in, std::span<const int> y_in, int n_classes,
                            std::uint64_t seed) {
  if (x_in.rows() != y_in.size()) throw Error(ErrorCode::invalid_argument, "feature/label row mismatch");
  if (x_in.empty()) throw Error(ErrorCode::invalid_argument, "empty training set");

  const auto order = canonical_order(x_in, y_in);
  const Matrix x = x_in.select_rows(order);
  std::vector<int> y(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) y[i] = y_in[order[i]];

  FittedPipeline out;
  out.spec = spec;
  out.seed = seed;
  out.n_classes = n_classes;
  out.degenerate = std::set<int>(y.begin(), y.end()).size() < 2;
  out.preprocessor = fit_preprocessor(spec.preprocessor, spec.preprocessor_params, x);
  const Matrix z = transform(out.preprocessor, x);

  switch (spec.classifier) {
    case ClassifierKind::random_forest:
      out.model = fit_forest(ForestKind::random_forest, spec.forest, z, y, n_classes, seed);
      break;
    case ClassifierKind::extra_trees:
      out.model = fit_forest(ForestKind::extra_trees, spec.forest, z, y, n_classes, seed);
      break;
    case ClassifierKind::knn:
      out.model = fit_knn(spec.knn, z, y, n_classes);
      break;
    case ClassifierKind::majority: {
      std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
      for (int l : y) ++counts.at(static_cast<std::size_t>(l));
      out.model = MajorityModel{static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin())};
      break;
    }
  }
  return out;
}

std::string serialize(const FittedPipeline& p) {
  json pre{{"kind", to_string(p.preprocessor.kind)},
           {"input_dim", p.preprocessor.input_dim},
           {"kept_columns", p.preprocessor.kept_columns},
           {"mean", p.preprocessor.mean},
           {"components", matrix_json(p.preprocessor.components)}};

  json clf;
  if (const auto* f = std::get_if<ForestModel>(&p.model)) {
    json trees = json::array();
    for (const auto& t : f->trees) {
      json nodes = json::array();
      for (const auto& n : t.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.label}));
      trees.push_back(std::move(nodes));
    }
    clf = {{"type", "forest"},
           {"kind", to_string(f->kind)},
           {"degenerate", f->degenerate},
           {"constant_label", f->constant_label},
           {"trees", std::move(trees)}};
  } else if (const auto* k = std::get_if<KnnModel>(&p.model)) {
    clf = {{"type", "knn"}, {"x", matrix_json(k->x)}, {"y", k->y}};
  } else {
    clf = {{"type", "majority"}, {"label", std::get<MajorityModel>(p.model).label}};
  }

  json doc{{"format", kFormat},      {"version", kFormatVersion},       {"seed", p.seed},
           {"n_classes", p.n_classes}, {"degenerate", p.degenerate},      {"spec", spec_json(p.spec)},
           {"preprocessor", std::move(pre)}, {"classifier", std::move(clf)}};
  return doc.dump() + "\n";
}

FittedPipeline deserialize(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kFormat)
      throw Error(ErrorCode::serialization, "not a pipeline document");
    if (doc.at("version").get<int>() != kFormatVersion)
      throw Error(ErrorCode::serialization, "unsupported pipeline version " + doc.at("version").dump());

    FittedPipeline p;
    p.seed = doc.at("seed").get<std::uint64_t>();
    p.n_classes = doc.at("n_classes").get<int>();
    p.degenerate = doc.at("degenerate").get<bool>();
    p.spec = spec_from(doc.at("spec"));

    const auto& pre = doc.at("preprocessor");
    p.preprocessor.kind = parse_preprocessor(pre.at("kind").get<std::string>());
    p.preprocessor.input_dim = pre.at("input_dim").get<std::size_t>();
    p.preprocessor.kept_columns = pre.at("kept_columns").get<std::vector<std::size_t>>();
    p.preprocessor.mean = pre.at("mean").get<std::vector<double>>();
    p.preprocessor.components = matrix_from(pre.at("components"));

    const auto& clf = doc.at("classifier");
    const auto type = clf.at("type").get<std::string>();
    if (type == "forest") {
      ForestModel f;
      f.kind = clf.at("kind").get<std::string>() == "extra_trees" ? ForestKind::extra_trees : ForestKind::random_forest;
      f.params = p.spec.forest;
      f.n_classes = p.n_classes;
      f.degenerate = clf.at("degenerate").get<bool>();
      f.constant_label = clf.at("constant_label").get<int>();
      for (const auto& t : clf.at("trees")) {
        DecisionTree tree;
        for (const auto& n : t)
          tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                                n.at(4).get<int>()});
        f.trees.push_back(std::move(tree));
      }
      p.model = std::move(f);
    } else if (type == "knn") {
      KnnModel k;
      k.params = p.spec.knn;
      k.x = matrix_from(clf.at("x"));
      k.y = clf.at("y").get<std::vector<int>>();
      k.n_classes = p.n_classes;
      p.model = std::move(k);
    } else if (type == "majority") {
      p.model = MajorityModel{clf.at("label").get<int>()};
    } else {
      throw Error(ErrorCode::serialization, "unknown classifier type " + type);
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::serialization, e.what());
  }
}

void save_pipeline(const std::filesystem::path& path, const FittedPipeline& pipeline) {
  csv::write_atomic(path, serialize(pipeline));
}

FittedPipeline load_pipeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

Matrix to_matrix(std::span<const FeatureVector> rows) {
  Matrix m(rows.size(), kFeatureCount);
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].values.begin(), rows[r].values.end(), m.row(r).begin());
  return m;
}

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCode::invalid_argument, "length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

SplitEvaluation evaluate_pipeline(const PipelineSpec& spec, const Matrix& x, std::span<const int> y, int n_classes,
                                  int n_splits, double train_fraction, std::uint64_t seed) {
  if (n_splits < 1) throw Error(ErrorCode::invalid_argument, "need at least one split");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::invalid_argument, "train fraction must lie in (0, 1)");
  std::map<int, std::size_t> counts;
  for (int l : y) ++counts[l];
  for (const auto& [label, count] : counts)
    if (count < static_cast<std::size_t>(n_splits) || count < 2)
      throw Error(ErrorCode::stratification_impossible,
                  "class " + std::to_string(label) + " has only " + std::to_string(count) + " members");

  SplitEvaluation result;
  result.accuracies.assign(static_cast<std::size_t>(n_splits), 0.0);
  parallel_for(result.accuracies.size(), [&](std::size_t s) {
    auto [train, validation] = stratified_partition(y, 1.0 - train_fraction, derive_seed(seed, {s}));
    std::vector<int> y_train, y_val;
    for (auto i : train) y_train.push_back(y[i]);
    for (auto i : validation) y_val.push_back(y[i]);
    const auto fitted = fit_pipeline(spec, x.select_rows(train), y_train, n_classes, derive_seed(seed, {s, 1}));
    result.accuracies[s] = accuracy(y_val, fitted.predict(x.select_rows(validation)));
  });
  result.mean = std::accumulate(result.accuracies.begin(), result.accuracies.end(), 0.0) /
                static_cast<double>(n_splits);
  return result;
}

}  // namespace chronogaze::learn
