#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "chronogaze/learn/matrix.hpp"

namespace chronogaze::learn {

enum class PreprocessorKind { none, variance_threshold, pca, unit_norm };

std::string_view to_string(PreprocessorKind kind);
PreprocessorKind parse_preprocessor(std::string_view text);

struct PreprocessorParams {
  double variance_threshold = 0.0;  // columns with population variance <= tau are dropped
  int pca_components = 0;           // 0 selects min(10, n_features)

  bool operator==(const PreprocessorParams&) const = default;
};

struct PreprocessorState {
  PreprocessorKind kind = PreprocessorKind::none;
  std::size_t input_dim = 0;
  std::vector<std::size_t> kept_columns;  // variance_threshold
  std::vector<double> mean;               // pca centering
  Matrix components;                      // pca, k x input_dim, unit rows

  std::size_t output_dim() const;
};

int default_pca_components(std::size_t n_features);

/// Rank of the column-centered matrix (singular values above 1e-10 of the
/// largest).
std::size_t centered_rank(const Matrix& x);

/// Throws all_columns_dropped (variance threshold removed every column) or
/// k_too_large (pca k exceeds the centered rank).
PreprocessorState fit_preprocessor(PreprocessorKind kind, const PreprocessorParams& params, const Matrix& x);

Matrix transform(const PreprocessorState& state, const Matrix& x);

}  // namespace chronogaze::learn
