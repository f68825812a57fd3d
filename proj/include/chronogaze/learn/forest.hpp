#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "chronogaze/learn/matrix.hpp"

namespace chronogaze::learn {

enum class ForestKind { random_forest, extra_trees };

/// Candidate features per node: floor(sqrt(d)), floor(log2(d)), floor(d/2),
/// or all d; never fewer than one.
enum class MaxFeatures { sqrt, log2, half, all };

std::string_view to_string(ForestKind kind);
std::string_view to_string(MaxFeatures mf);
MaxFeatures parse_max_features(std::string_view text);
std::size_t resolve_max_features(MaxFeatures mf, std::size_t n_features);

struct ForestParams {
  int n_trees = 100;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
  MaxFeatures max_features = MaxFeatures::sqrt;
  bool bootstrap = true;

  static ForestParams defaults(ForestKind kind);
  bool operator==(const ForestParams&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;  // majority class of the node's training samples

  bool operator==(const TreeNode&) const = default;
};

/// Samples with x[feature] <= threshold go left.
struct DecisionTree {
  std::vector<TreeNode> nodes;  // preorder, root at 0

  int predict(std::span<const double> x) const;
  int depth() const;
};

struct ForestModel {
  ForestKind kind = ForestKind::random_forest;
  ForestParams params;
  int n_classes = 0;
  std::vector<DecisionTree> trees;
  bool degenerate = false;  // single training class: constant predictor
  int constant_label = 0;
};

/// Gini-impurity CART ensemble. random_forest bootstraps and takes the best
/// midpoint threshold among the sampled features; extra_trees draws one
/// uniform threshold per sampled feature. Tree t uses the stream
/// derive_seed(seed, {t}), so parallel and sequential fits are identical.
/// Equal-quality splits go to the smallest feature index, then the smallest
/// threshold.
ForestModel fit_forest(ForestKind kind, const ForestParams& params, const Matrix& x, std::span<const int> y,
                       int n_classes, std::uint64_t seed);

/// Majority vote over trees, ties to the smallest class index.
std::vector<int> predict(const ForestModel& model, const Matrix& x);

}  // namespace chronogaze::learn
