#include "tikmix/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tikmix/error.hpp"

namespace tikmix {

void BoostingParams::validate() const {
  if (trees == 0) throw ConfigError("boosting needs at least one tree");
  if (max_depth == 0) throw ConfigError("tree depth must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("boosting learning rate must be > 0");
  if (min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be >= 1");
}

double RegressionTree::predict(const Vector& x) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(at)];
    at = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

double SurrogateModel::predict(const Vector& w) const {
  if (static_cast<std::size_t>(w.size()) != feature_count)
    throw InputError("surrogate input has the wrong dimension");
  double y = base_score;
  for (const auto& t : trees) y += params.learning_rate * t.predict(w);
  return y;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<Vector>& x, const std::vector<double>& residual,
              const BoostingParams& p)
      : x_(x), r_(residual), p_(p) {}

  RegressionTree build() {
    std::vector<std::size_t> idx(x_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& idx, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (auto i : idx) sum += r_[i];
    tree_.nodes.back().value = sum / static_cast<double>(idx.size());

    if (depth >= p_.max_depth || idx.size() < 2 * p_.min_samples_leaf) return id;
    const Split s = best_split(idx, sum);
    if (s.feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto i : idx) (x_[i][s.feature] <= s.threshold ? left : right).push_back(i);
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  // Exact greedy search maximizing the reduction in squared error.
  Split best_split(const std::vector<std::size_t>& idx, double total) const {
    Split best;
    const std::size_t n = idx.size();
    const double base = total * total / static_cast<double>(n);
    const auto features = static_cast<int>(x_.front().size());
    std::vector<std::size_t> order(idx);
    for (int f = 0; f < features; ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double xa = x_[a][f];
        const double xb = x_[b][f];
        return xa < xb || (xa == xb && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += r_[order[k]];
        const std::size_t nl = k + 1;
        const std::size_t nr = n - nl;
        if (nl < p_.min_samples_leaf || nr < p_.min_samples_leaf) continue;
        const double lo = x_[order[k]][f];
        const double hi = x_[order[k + 1]][f];
        if (!(lo < hi)) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - base;
        if (gain > best.gain + 1e-15) {
          best.feature = f;
          best.threshold = 0.5 * (lo + hi);
          best.gain = gain;
        }
      }
    }
    return best;
  }

  const std::vector<Vector>& x_;
  const std::vector<double>& r_;
  const BoostingParams& p_;
  RegressionTree tree_;
};

}  // namespace

SurrogateModel fit_surrogate(const SurrogateDataset& data, const BoostingParams& params) {
  params.validate();
  if (data.size() < kMinSurrogateEntries)
    throw ConfigError("surrogate needs at least " + std::to_string(kMinSurrogateEntries) +
                      " entries, got " + std::to_string(data.size()));
  if (data.w.size() != data.y.size()) throw InputError("surrogate dataset is ragged");
  const auto m = data.w.front().size();
  for (const auto& w : data.w)
    if (w.size() != m) throw InputError("surrogate dataset mixes weight dimensions");
  for (double y : data.y)
    if (!std::isfinite(y)) throw NumericalError("surrogate label is not finite");

  SurrogateModel model;
  model.params = params;
  model.feature_count = static_cast<std::size_t>(m);
  const double n = static_cast<double>(data.size());
  model.base_score = std::accumulate(data.y.begin(), data.y.end(), 0.0) / n;

  std::vector<double> pred(data.size(), model.base_score);
  std::vector<double> residual(data.size());
  for (std::size_t t = 0; t < params.trees; ++t) {
    for (std::size_t i = 0; i < data.size(); ++i) residual[i] = data.y[i] - pred[i];
    RegressionTree tree = TreeBuilder(data.w, residual, params).build();
    for (std::size_t i = 0; i < data.size(); ++i) pred[i] += params.learning_rate * tree.predict(data.w[i]);
    model.trees.push_back(std::move(tree));
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) sse += (data.y[i] - pred[i]) * (data.y[i] - pred[i]);
  model.training_rmse = std::sqrt(sse / n);
  return model;
}

}  // namespace tikmix
