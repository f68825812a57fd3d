#include "chronogaze/learn/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chronogaze/error.hpp"

namespace chronogaze::learn {

std::string_view to_string(Vote vote) { return vote == Vote::uniform ? "uniform" : "distance"; }

Vote parse_vote(std::string_view text) {
  if (text == "uniform") return Vote::uniform;
  if (text == "distance") return Vote::distance;
  throw Error(ErrorCode::invalid_argument, "vote must be 'uniform' or 'distance'");
}

KnnModel fit_knn(const KnnParams& params, const Matrix& x, std::span<const int> y, int n_classes) {
  if (params.k < 1) throw Error(ErrorCode::invalid_argument, "k must be positive");
  if (static_cast<std::size_t>(params.k) > x.rows())
    throw Error(ErrorCode::k_exceeds_n,
                "k=" + std::to_string(params.k) + " but only " + std::to_string(x.rows()) + " training samples");
  return {params, x, std::vector<int>(y.begin(), y.end()), n_classes};
}

std::vector<int> predict(const KnnModel& model, const Matrix& x) {
  const std::size_t n = model.x.rows();
  const auto k = static_cast<std::size_t>(model.params.k);
  std::vector<int> out(x.rows(), 0);
  std::vector<std::pair<double, std::size_t>> dist(n);
  std::vector<double> votes(static_cast<std::size_t>(model.n_classes));

  for (std::size_t q = 0; q < x.rows(); ++q) {
    const auto query = x.row(q);
    for (std::size_t i = 0; i < n; ++i) {
      const auto train = model.x.row(i);
      double d2 = 0.0;
      for (std::size_t c = 0; c < query.size(); ++c) {
        const double diff = query[c] - train[c];
        d2 += diff * diff;
      }
      dist[i] = {d2, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    std::fill(votes.begin(), votes.end(), 0.0);
    const bool exact_hit = model.params.vote == Vote::distance && dist[0].first == 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto label = static_cast<std::size_t>(model.y[dist[j].second]);
      if (model.params.vote == Vote::uniform) {
        votes[label] += 1.0;
      } else if (exact_hit) {
        if (dist[j].first == 0.0) votes[label] += 1.0;
      } else {
        votes[label] += 1.0 / std::sqrt(dist[j].first);
      }
    }
    out[q] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

}  // namespace chronogaze::learn
