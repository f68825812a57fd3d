#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "chronogaze/learn/matrix.hpp"

namespace chronogaze::learn {

enum class Vote { uniform, distance };

std::string_view to_string(Vote vote);
Vote parse_vote(std::string_view text);

struct KnnParams {
  int k = 5;
  Vote vote = Vote::uniform;

  bool operator==(const KnnParams&) const = default;
};

struct KnnModel {
  KnnParams params;
  Matrix x;
  std::vector<int> y;
  int n_classes = 0;
};

/// Throws k_exceeds_n when k is larger than the training set.
KnnModel fit_knn(const KnnParams& params, const Matrix& x, std::span<const int> y, int n_classes);

/// Euclidean neighbors ordered by (distance, training row). Uniform voting
/// counts neighbors; distance voting weights them by 1/d, and zero-distance
/// neighbors decide alone. Vote ties go to the smallest class index.
std::vector<int> predict(const KnnModel& model, const Matrix& x);

}  // namespace chronogaze::learn
