#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tikmix/influence.hpp"
#include "tikmix/lhs.hpp"
#include "tikmix/surrogate.hpp"

namespace tikmix {

struct SearchConfig {
  std::size_t iterations = 12;   // T
  std::size_t samples = 256;     // N per iteration
  double alpha_min = 8.0;
  double alpha_max = 4096.0;
  std::size_t top_k = 16;
  std::uint64_t seed = 0;
  double concentration_floor = 1e-3;

  void validate() const;
  bool operator==(const SearchConfig&) const = default;
};

/// Exploration strengths alpha_t, geometric from alpha_max (t = 1) down to
/// alpha_min (t = T).
std::vector<double> exploration_schedule(const SearchConfig& cfg);

/// Dirichlet concentration used at strength alpha: alpha_min * alpha_max / alpha.
/// High exploration strength means a diffuse proposal; the concentration rises
/// from alpha_min to alpha_max as the search narrows.
double concentration_for(const SearchConfig& cfg, double alpha);

struct SearchStep {
  double alpha = 0.0;
  double concentration = 0.0;
  double best_predicted = 0.0;        // highest predicted score among this iteration's draws
  double top_k_mean_predicted = 0.0;  // mean predicted score of the draws kept for the update
  Vector w_best;
};

struct SearchResult {
  Vector w_best;
  std::vector<SearchStep> trace;
};

using ScoreFn = std::function<double(const Vector&)>;

/// Dirichlet draw; parameters below `floor` are raised to it.
Vector sample_dirichlet(const Vector& concentration, double floor, Rng& rng);

/// Annealed Dirichlet search: each iteration re-centres on the mean of the
/// top_k draws by predicted score.
SearchResult iterative_search(const ScoreFn& score, const Vector& w0, const SearchConfig& cfg);
SearchResult iterative_search(const SurrogateModel& surrogate, const Vector& w0,
                              const SearchConfig& cfg);

enum class AggregateMetric { SumNormalizedInfluence };

struct MixMOptions {
  std::size_t candidates = 256;
  double scale_low = 0.5;
  double scale_high = 2.0;
  double eps_norm = 1e-8;
  bool exclude_nonpositive_rows = true;
  AggregateMetric metric = AggregateMetric::SumNormalizedInfluence;
  BoostingParams boosting;
  SearchConfig search;

  bool operator==(const MixMOptions&) const = default;
};

struct MixMResult {
  Vector w_best;
  Vector w_searched;     // raw output of the search before the true-score check
  double true_score_start = 0.0;
  double true_score_searched = 0.0;
  bool fell_back_to_start = false;
  SurrogateDataset dataset;
  SurrogateModel surrogate;
  SearchResult search;
};

/// LHS candidates around w0, true labels from S, surrogate fit, annealed
/// search, then a true-score check that keeps w0 if the search made it worse.
MixMResult run_mixm(const InfluenceMatrix& benefit, const Vector& w0, const MixMOptions& opts,
                    std::uint64_t seed);

}  // namespace tikmix
