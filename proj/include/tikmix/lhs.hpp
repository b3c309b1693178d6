#pragma once

#include <cstdint>
#include <vector>

#include "tikmix/influence.hpp"
#include "tikmix/mixture.hpp"
#include "tikmix/rng.hpp"

namespace tikmix {

/// Per-domain interval [scale_low * w_orig_i, scale_high * w_orig_i].
struct SamplingBox {
  Vector w_orig;
  Vector lower;
  Vector upper;
  double scale_low = 0.5;
  double scale_high = 2.0;

  static SamplingBox around(const Vector& w_orig, double scale_low = 0.5, double scale_high = 2.0);
  std::size_t dim() const { return static_cast<std::size_t>(w_orig.size()); }
  bool contains(const Vector& w) const;
  void validate() const;
};

/// One raw Latin Hypercube batch in the box (rows are points, not normalized).
Matrix lhs_batch(const SamplingBox& box, std::size_t batch_size, Rng& rng);

struct LhsOptions {
  std::size_t batch_size = 256;
  std::size_t draw_budget = 1'000'000;
  double min_acceptance = 1e-3;
};

/// Normalized LHS draws accepted only when every coordinate stays in its
/// interval. Returns exactly `count` simplex points.
std::vector<Vector> lhs_candidates(const SamplingBox& box, std::size_t count, std::uint64_t seed,
                                   const LhsOptions& opts = {});

struct SurrogateDataset {
  std::vector<Vector> w;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  bool operator==(const SurrogateDataset&) const = default;
};

/// y = sum of normalized influences for each candidate.
SurrogateDataset label_candidates(const std::vector<Vector>& candidates, const InfluenceMatrix& S,
                                  double eps_norm, bool exclude_nonpositive_rows = true);

}  // namespace tikmix
