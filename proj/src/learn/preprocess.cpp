#include "chronogaze/learn/preprocess.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "chronogaze/error.hpp"

namespace chronogaze::learn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> as_eigen(const Matrix& x) {
  return {x.data().data(), static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.cols())};
}

std::vector<double> column_means(const Matrix& x) {
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x(r, c);
  for (auto& m : mean) m /= static_cast<double>(x.rows());
  return mean;
}

Eigen::MatrixXd centered(const Matrix& x, const std::vector<double>& mean) {
  Eigen::MatrixXd out = as_eigen(x);
  for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c).array() -= mean[static_cast<std::size_t>(c)];
  return out;
}

constexpr double kRankTolerance = 1e-10;

}  // namespace

std::string_view to_string(PreprocessorKind kind) {
  switch (kind) {
    case PreprocessorKind::none: return "none";
    case PreprocessorKind::variance_threshold: return "variance_threshold";
    case PreprocessorKind::pca: return "pca";
    case PreprocessorKind::unit_norm: return "unit_norm";
  }
  return "none";
}

PreprocessorKind parse_preprocessor(std::string_view text) {
  for (auto k : {PreprocessorKind::none, PreprocessorKind::variance_threshold, PreprocessorKind::pca,
                 PreprocessorKind::unit_norm})
    if (to_string(k) == text) return k;
  throw Error(ErrorCode::invalid_argument, "unknown preprocessor " + std::string(text));
}

std::size_t PreprocessorState::output_dim() const {
  switch (kind) {
    case PreprocessorKind::variance_threshold: return kept_columns.size();
    case PreprocessorKind::pca: return components.rows();
    default: return input_dim;
  }
}

int default_pca_components(std::size_t n_features) { return static_cast<int>(std::min<std::size_t>(10, n_features)); }

std::size_t centered_rank(const Matrix& x) {
  if (x.rows() < 2 || x.cols() == 0) return 0;
  const auto mean = column_means(x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered(x, mean));
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kRankTolerance * s(0)) ++rank;
  return rank;
}

PreprocessorState fit_preprocessor(PreprocessorKind kind, const PreprocessorParams& params, const Matrix& x) {
  if (x.empty() || x.cols() == 0) throw Error(ErrorCode::invalid_argument, "cannot fit a preprocessor on no data");
  PreprocessorState state;
  state.kind = kind;
  state.input_dim = x.cols();

  switch (kind) {
    case PreprocessorKind::none:
    case PreprocessorKind::unit_norm:
      break;

    case PreprocessorKind::variance_threshold: {
      const auto mean = column_means(x);
      for (std::size_t c = 0; c < x.cols(); ++c) {
        double lo = x(0, c), hi = x(0, c), ss = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) {
          lo = std::min(lo, x(r, c));
          hi = std::max(hi, x(r, c));
          ss += (x(r, c) - mean[c]) * (x(r, c) - mean[c]);
        }
        // A column whose values are all identical has variance exactly 0.
        const double variance = lo == hi ? 0.0 : ss / static_cast<double>(x.rows());
        if (variance > params.variance_threshold) state.kept_columns.push_back(c);
      }
      if (state.kept_columns.empty())
        throw Error(ErrorCode::all_columns_dropped, "variance threshold removed every column");
      break;
    }

    case PreprocessorKind::pca: {
      const int k = params.pca_components > 0 ? params.pca_components : default_pca_components(x.cols());
      state.mean = column_means(x);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered(x, state.mean), Eigen::ComputeThinV);
      const auto& s = svd.singularValues();
      std::size_t rank = 0;
      if (s.size() > 0 && s(0) > 0.0)
        for (Eigen::Index i = 0; i < s.size(); ++i)
          if (s(i) > kRankTolerance * s(0)) ++rank;
      if (static_cast<std::size_t>(k) > rank)
        throw Error(ErrorCode::k_too_large,
                    "pca k=" + std::to_string(k) + " exceeds centered rank " + std::to_string(rank));
      const auto& v = svd.matrixV();
      state.components = Matrix(static_cast<std::size_t>(k), x.cols());
      for (int i = 0; i < k; ++i) {
        // Sign convention: the largest-magnitude loading is positive.
        Eigen::Index arg = 0;
        v.col(i).cwiseAbs().maxCoeff(&arg);
        const double sign = v(arg, i) < 0.0 ? -1.0 : 1.0;
        for (std::size_t c = 0; c < x.cols(); ++c)
          state.components(static_cast<std::size_t>(i), c) = sign * v(static_cast<Eigen::Index>(c), i);
      }
      break;
    }
  }
  return state;
}

Matrix transform(const PreprocessorState& state, const Matrix& x) {
  if (x.cols() != state.input_dim)
    throw Error(ErrorCode::invalid_argument, "transform input has " + std::to_string(x.cols()) +
                                                 " columns, expected " + std::to_string(state.input_dim));
  switch (state.kind) {
    case PreprocessorKind::none:
      return x;

    case PreprocessorKind::unit_norm: {
      Matrix out = x;
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        double norm = 0.0;
        for (double v : row) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0.0)
          for (double& v : row) v /= norm;
      }
      return out;
    }

    case PreprocessorKind::variance_threshold: {
      Matrix out(x.rows(), state.kept_columns.size());
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t j = 0; j < state.kept_columns.size(); ++j) out(r, j) = x(r, state.kept_columns[j]);
      return out;
    }

    case PreprocessorKind::pca: {
      const std::size_t k = state.components.rows();
      Matrix out(x.rows(), k);
      for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t i = 0; i < k; ++i) {
          double acc = 0.0;
          for (std::size_t c = 0; c < x.cols(); ++c) acc += (x(r, c) - state.mean[c]) * state.components(i, c);
          out(r, i) = acc;
        }
      return out;
    }
  }
  return x;
}

}  // namespace chronogaze::learn
