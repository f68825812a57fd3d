#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chronogaze/features.hpp"
#include "chronogaze/learn/forest.hpp"
#include "chronogaze/learn/knn.hpp"
#include "chronogaze/learn/matrix.hpp"
#include "chronogaze/learn/preprocess.hpp"

namespace chronogaze::learn {

/// majority is a dummy baseline and not part of the search space.
enum class ClassifierKind { random_forest, extra_trees, knn, majority };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier(std::string_view text);

inline constexpr PreprocessorKind kSearchPreprocessors[] = {PreprocessorKind::none, PreprocessorKind::variance_threshold,
                                                            PreprocessorKind::pca, PreprocessorKind::unit_norm};
inline constexpr ClassifierKind kSearchClassifiers[] = {ClassifierKind::random_forest, ClassifierKind::extra_trees,
                                                        ClassifierKind::knn};

struct PipelineSpec {
  PreprocessorKind preprocessor = PreprocessorKind::none;
  PreprocessorParams preprocessor_params;
  ClassifierKind classifier = ClassifierKind::random_forest;
  ForestParams forest;
  KnnParams knn;

  /// Conventional defaults for the pair (forest kinds get their own bootstrap default).
  static PipelineSpec defaults(PreprocessorKind preprocessor, ClassifierKind classifier);

  /// Compact human-readable form, e.g. "pca(k=10)+knn(k=5,vote=uniform)".
  std::string describe() const;
  bool operator==(const PipelineSpec&) const = default;
};

std::string spec_to_json(const PipelineSpec& spec);
PipelineSpec spec_from_json(std::string_view text);

struct MajorityModel {
  int label = 0;
};

struct FittedPipeline {
  PipelineSpec spec;
  PreprocessorState preprocessor;
  std::variant<ForestModel, KnnModel, MajorityModel> model;
  std::uint64_t seed = 0;
  int n_classes = 0;
  bool degenerate = false;  // trained on a single class

  std::vector<int> predict(const Matrix& x) const;
};

/// Rows are put into a canonical (lexicographic) order before fitting, so the
/// fitted state does not depend on the order of training rows.
FittedPipeline fit_pipeline(const PipelineSpec& spec, const Matrix& x, std::span<const int> y, int n_classes,
                            std::uint64_t seed);

/// Versioned, self-describing JSON document.
std::string serialize(const FittedPipeline& pipeline);
FittedPipeline deserialize(std::string_view text);
void save_pipeline(const std::filesystem::path& path, const FittedPipeline& pipeline);
FittedPipeline load_pipeline(const std::filesystem::path& path);

Matrix to_matrix(std::span<const FeatureVector> rows);

double accuracy(std::span<const int> truth, std::span<const int> predicted);

struct SplitEvaluation {
  std::vector<double> accuracies;
  double mean = 0.0;
};

/// n_splits independent stratified train/validation splits; split s uses
/// derive_seed(seed, {s}) for the partition. Throws stratification_impossible
/// when a class has fewer than n_splits members; fit errors propagate.
SplitEvaluation evaluate_pipeline(const PipelineSpec& spec, const Matrix& x, std::span<const int> y, int n_classes,
                                  int n_splits, double train_fraction, std::uint64_t seed);

}  // namespace chronogaze::learn
