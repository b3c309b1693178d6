#pragma once

#include <vector>

#include "tikmix/lhs.hpp"
#include "tikmix/model.hpp"

namespace tikmix {

struct BoostingParams {
  std::size_t trees = 200;
  std::size_t max_depth = 4;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 2;

  void validate() const;
  bool operator==(const BoostingParams&) const = default;
};

/// Regression tree stored as a flat node array; node 0 is the root.
/// A leaf has feature == -1 and carries `value`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const Vector& x) const;
  bool operator==(const RegressionTree&) const = default;
};

/// Least-squares gradient-boosted trees mapping mixture weights to the
/// aggregate influence score.
struct SurrogateModel {
  BoostingParams params;
  std::size_t feature_count = 0;
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  double training_rmse = 0.0;

  double predict(const Vector& w) const;
  bool operator==(const SurrogateModel&) const = default;
};

inline constexpr std::size_t kMinSurrogateEntries = 16;

SurrogateModel fit_surrogate(const SurrogateDataset& data, const BoostingParams& params = {});

}  // namespace tikmix
