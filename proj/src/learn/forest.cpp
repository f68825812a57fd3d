#include "chronogaze/learn/forest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "chronogaze/error.hpp"
#include "chronogaze/parallel.hpp"
#include "chronogaze/rng.hpp"

namespace chronogaze::learn {

std::string_view to_string(ForestKind kind) {
  return kind == ForestKind::random_forest ? "random_forest" : "extra_trees";
}

std::string_view to_string(MaxFeatures mf) {
  switch (mf) {
    case MaxFeatures::sqrt: return "sqrt";
    case MaxFeatures::log2: return "log2";
    case MaxFeatures::half: return "half";
    case MaxFeatures::all: return "all";
  }
  return "sqrt";
}

MaxFeatures parse_max_features(std::string_view text) {
  for (auto mf : {MaxFeatures::sqrt, MaxFeatures::log2, MaxFeatures::half, MaxFeatures::all})
    if (to_string(mf) == text) return mf;
  throw Error(ErrorCode::invalid_argument, "unknown max_features " + std::string(text));
}

std::size_t resolve_max_features(MaxFeatures mf, std::size_t n_features) {
  const double d = static_cast<double>(n_features);
  std::size_t m = n_features;
  switch (mf) {
    case MaxFeatures::sqrt: m = static_cast<std::size_t>(std::floor(std::sqrt(d))); break;
    case MaxFeatures::log2: m = static_cast<std::size_t>(std::floor(std::log2(std::max(d, 1.0)))); break;
    case MaxFeatures::half: m = static_cast<std::size_t>(std::floor(0.5 * d)); break;
    case MaxFeatures::all: break;
  }
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n_features, 1));
}

ForestParams ForestParams::defaults(ForestKind kind) {
  ForestParams p;
  p.bootstrap = kind == ForestKind::random_forest;
  return p;
}

int DecisionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].label;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

using Wide = __int128;

/// Split quality as the exact rational (A*nR + B*nL) / (nL*nR), where A and B
/// are the sums of squared class counts on each side. Maximizing it minimizes
/// the weighted Gini impurity of the children.
struct SplitScore {
  Wide num = 0;
  Wide den = 1;
  bool valid = false;

  static SplitScore make(std::int64_t sq_left, std::int64_t n_left, std::int64_t sq_right, std::int64_t n_right) {
    return {static_cast<Wide>(sq_left) * n_right + static_cast<Wide>(sq_right) * n_left,
            static_cast<Wide>(n_left) * n_right, true};
  }

  /// -1, 0, +1 comparison.
  int compare(const SplitScore& o) const {
    if (!valid) return o.valid ? -1 : 0;
    if (!o.valid) return 1;
    const Wide a = num * o.den;
    const Wide b = o.num * den;
    return a < b ? -1 : (a > b ? 1 : 0);
  }
};

struct Candidate {
  SplitScore score;
  int feature = -1;
  double threshold = 0.0;

  bool better_than(const Candidate& o) const {
    const int c = score.compare(o.score);
    if (c != 0) return c > 0;
    if (feature != o.feature) return feature < o.feature;
    return threshold < o.threshold;
  }
};

/// Column-major copy of the training matrix plus, per column, the sorted
/// distinct values and each row's rank among them. Sorting by rank orders
/// samples exactly as sorting by value does, but on small integers.
struct ColumnData {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<double> values;
  std::vector<std::uint32_t> ranks;
  std::vector<std::vector<double>> distinct;
  int rank_bits = 0;

  explicit ColumnData(const Matrix& x) : n_rows(x.rows()), n_features(x.cols()) {
    values.resize(n_rows * n_features);
    ranks.resize(values.size());
    distinct.resize(n_features);
    std::size_t widest = 1;
    for (std::size_t c = 0; c < n_features; ++c) {
      auto& d = distinct[c];
      for (std::size_t r = 0; r < n_rows; ++r) {
        values[c * n_rows + r] = x(r, c);
        d.push_back(x(r, c));
      }
      std::sort(d.begin(), d.end());
      d.erase(std::unique(d.begin(), d.end()), d.end());
      for (std::size_t r = 0; r < n_rows; ++r)
        ranks[c * n_rows + r] =
            static_cast<std::uint32_t>(std::lower_bound(d.begin(), d.end(), x(r, c)) - d.begin());
      widest = std::max(widest, d.size());
    }
    while ((std::size_t{1} << rank_bits) < widest) ++rank_bits;
  }
};

class TreeBuilder {
 public:
  TreeBuilder(ForestKind kind, const ForestParams& params, const ColumnData& columns, std::span<const int> y,
              int n_classes, std::uint64_t seed)
      : kind_(kind),
        params_(params),
        data_(columns),
        n_rows_(columns.n_rows),
        n_features_(columns.n_features),
        y_(y),
        n_classes_(static_cast<std::size_t>(n_classes)),
        rng_(seed),
        m_(resolve_max_features(params.max_features, columns.n_features)) {}

  DecisionTree build() {
    if (params_.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n_rows_ - 1);
      samples_.resize(n_rows_);
      for (auto& s : samples_) s = pick(rng_);
    } else {
      samples_.resize(n_rows_);
      std::iota(samples_.begin(), samples_.end(), std::size_t{0});
    }
    feature_order_.resize(n_features_);
    counts_.resize(n_classes_);
    left_counts_.resize(n_classes_);

    struct Pending {
      std::size_t begin, end;
      int depth;
      int node;
    };
    DecisionTree tree;
    tree.nodes.emplace_back();
    std::vector<Pending> stack{{0, samples_.size(), 0, 0}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();

      std::fill(counts_.begin(), counts_.end(), 0);
      for (std::size_t i = p.begin; i < p.end; ++i) ++counts_[static_cast<std::size_t>(y_[samples_[i]])];
      const auto majority = std::max_element(counts_.begin(), counts_.end()) - counts_.begin();
      tree.nodes[static_cast<std::size_t>(p.node)].label = static_cast<int>(majority);

      const auto n = static_cast<std::int64_t>(p.end - p.begin);
      const bool pure = counts_[static_cast<std::size_t>(majority)] == n;
      if (pure || n < params_.min_samples_split || (params_.max_depth > 0 && p.depth >= params_.max_depth))
        continue;

      const Candidate best = find_split(p.begin, p.end);
      if (best.feature < 0) continue;

      const double* col = column(static_cast<std::size_t>(best.feature));
      auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(p.begin),
                                samples_.begin() + static_cast<std::ptrdiff_t>(p.end),
                                [&](std::size_t s) { return col[s] <= best.threshold; });
      const auto split = static_cast<std::size_t>(mid - samples_.begin());

      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      const int right = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.left = left;
      node.right = right;
      // Right is pushed first so the left subtree is expanded first.
      stack.push_back({split, p.end, p.depth + 1, right});
      stack.push_back({p.begin, split, p.depth + 1, left});
    }
    return tree;
  }

 private:
  const double* column(std::size_t f) const { return data_.values.data() + f * n_rows_; }
  const std::uint32_t* ranks(std::size_t f) const { return data_.ranks.data() + f * n_rows_; }

  /// Sorts keys by their rank bits (above the 8 label bits). Order among
  /// equal ranks is irrelevant: thresholds only fall between distinct values.
  void sort_keys() {
    const std::size_t n = keys_.size();
    if (n < 32) {
      std::sort(keys_.begin(), keys_.end());
      return;
    }
    scratch_.resize(n);
    for (int shift = 8; shift < 8 + data_.rank_bits; shift += 8) {
      std::array<std::size_t, 257> offsets{};
      for (auto k : keys_) ++offsets[((k >> shift) & 0xff) + 1];
      for (std::size_t b = 1; b < offsets.size(); ++b) offsets[b] += offsets[b - 1];
      for (auto k : keys_) scratch_[offsets[(k >> shift) & 0xff]++] = k;
      keys_.swap(scratch_);
    }
  }

  Candidate find_split(std::size_t begin, std::size_t end) {
    std::iota(feature_order_.begin(), feature_order_.end(), 0);
    Candidate best;
    std::size_t informative = 0;
    for (std::size_t i = 0; i < n_features_ && informative < m_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n_features_ - 1);
      std::swap(feature_order_[i], feature_order_[pick(rng_)]);
      const auto f = feature_order_[i];
      Candidate c = kind_ == ForestKind::random_forest ? best_threshold(f, begin, end) : random_threshold(f, begin, end);
      if (c.feature < 0) continue;  // constant in this node
      ++informative;
      if (!best.score.valid || c.better_than(best)) best = c;
    }
    return best;
  }

  Candidate best_threshold(std::size_t f, std::size_t begin, std::size_t end) {
    const std::uint32_t* rk = ranks(f);
    keys_.clear();
    for (std::size_t i = begin; i < end; ++i)
      keys_.push_back(static_cast<std::uint64_t>(rk[samples_[i]]) << 8 | static_cast<std::uint64_t>(y_[samples_[i]]));
    sort_keys();
    Candidate best;
    if (keys_.front() >> 8 == keys_.back() >> 8) return best;

    const auto n = static_cast<std::int64_t>(keys_.size());
    std::fill(left_counts_.begin(), left_counts_.end(), 0);
    std::int64_t sq_left = 0;
    std::int64_t sq_right = 0;
    for (auto c : counts_) sq_right += c * c;

    const auto& distinct = data_.distinct[f];
    for (std::size_t i = 0; i + 1 < keys_.size(); ++i) {
      const auto label = static_cast<std::size_t>(keys_[i] & 0xff);
      const std::int64_t right_count = counts_[label] - left_counts_[label];
      sq_left += 2 * left_counts_[label] + 1;
      sq_right -= 2 * right_count - 1;
      ++left_counts_[label];
      const auto here = keys_[i] >> 8, next = keys_[i + 1] >> 8;
      if (here == next) continue;
      const auto n_left = static_cast<std::int64_t>(i + 1);
      const auto score = SplitScore::make(sq_left, n_left, sq_right, n - n_left);
      // Within one feature thresholds increase, so only strict improvements count.
      if (!best.score.valid || score.compare(best.score) > 0) {
        best.score = score;
        best.feature = static_cast<int>(f);
        best.threshold = midpoint(distinct[here], distinct[next]);
      }
    }
    return best;
  }

  Candidate random_threshold(std::size_t f, std::size_t begin, std::size_t end) {
    const double* col = column(f);
    double lo = col[samples_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = std::min(lo, col[samples_[i]]);
      hi = std::max(hi, col[samples_[i]]);
    }
    Candidate c;
    if (lo == hi) return c;
    std::uniform_real_distribution<double> draw(lo, hi);
    double threshold = draw(rng_);
    if (!(threshold < hi)) threshold = lo;

    std::fill(left_counts_.begin(), left_counts_.end(), 0);
    std::int64_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i)
      if (col[samples_[i]] <= threshold) {
        ++left_counts_[static_cast<std::size_t>(y_[samples_[i]])];
        ++n_left;
      }
    std::int64_t sq_left = 0, sq_right = 0;
    for (std::size_t k = 0; k < n_classes_; ++k) {
      sq_left += left_counts_[k] * left_counts_[k];
      const auto r = counts_[k] - left_counts_[k];
      sq_right += r * r;
    }
    c.score = SplitScore::make(sq_left, n_left, sq_right, static_cast<std::int64_t>(end - begin) - n_left);
    c.feature = static_cast<int>(f);
    c.threshold = threshold;
    return c;
  }

  static double midpoint(double a, double b) {
    const double m = a + (b - a) / 2.0;
    return (m >= b || !std::isfinite(m)) ? a : m;
  }

  ForestKind kind_;
  const ForestParams& params_;
  const ColumnData& data_;
  std::size_t n_rows_;
  std::size_t n_features_;
  std::span<const int> y_;
  std::size_t n_classes_;
  Rng rng_;
  std::size_t m_;

  std::vector<std::size_t> samples_;
  std::vector<std::size_t> feature_order_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> left_counts_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::uint64_t> scratch_;
};

}  // namespace

ForestModel fit_forest(ForestKind kind, const ForestParams& params, const Matrix& x, std::span<const int> y,
                       int n_classes, std::uint64_t seed) {
  if (x.rows() != y.size()) throw Error(ErrorCode::invalid_argument, "feature/label row mismatch");
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::invalid_argument, "empty training set");
  if (params.n_trees < 1 || params.min_samples_split < 2 || params.max_depth < 0)
    throw Error(ErrorCode::invalid_argument, "invalid forest hyperparameters");
  for (int label : y)
    if (label < 0 || label >= n_classes) throw Error(ErrorCode::invalid_argument, "label out of range");

  ForestModel model;
  model.kind = kind;
  model.params = params;
  model.n_classes = n_classes;

  const std::set<int> distinct(y.begin(), y.end());
  if (distinct.size() < 2) {
    model.degenerate = true;
    model.constant_label = *distinct.begin();
    return model;
  }

  if (n_classes > 256) throw Error(ErrorCode::invalid_argument, "at most 256 classes are supported");
  const ColumnData columns(x);

  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(model.trees.size(), [&](std::size_t t) {
    TreeBuilder builder(kind, params, columns, y, n_classes, derive_seed(seed, {t}));
    model.trees[t] = builder.build();
  });
  return model;
}

std::vector<int> predict(const ForestModel& model, const Matrix& x) {
  std::vector<int> out(x.rows(), model.constant_label);
  if (model.degenerate) return out;
  std::vector<int> votes(static_cast<std::size_t>(model.n_classes));
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    const auto row = x.row(r);
    for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(tree.predict(row))];
    out[r] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

}  // namespace chronogaze::learn
