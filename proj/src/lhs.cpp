#include "tikmix/lhs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tikmix/error.hpp"
#include "tikmix/mixd.hpp"

namespace tikmix {

SamplingBox SamplingBox::around(const Vector& w_orig, double scale_low, double scale_high) {
  SamplingBox box{w_orig, scale_low * w_orig, scale_high * w_orig, scale_low, scale_high};
  box.validate();
  return box;
}

bool SamplingBox::contains(const Vector& w) const {
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (!(w[i] >= lower[i] && w[i] <= upper[i])) return false;
  return true;
}

void SamplingBox::validate() const {
  if (w_orig.size() == 0) throw ConfigError("sampling box is empty");
  if (!(scale_low >= 0.0) || !(scale_high >= scale_low) || !std::isfinite(scale_high))
    throw ConfigError("sampling box needs 0 <= scale_low <= scale_high");
  MixtureWeights{w_orig, {}}.validate();
  if (lower.size() != w_orig.size() || upper.size() != w_orig.size())
    throw ConfigError("sampling box bounds have the wrong length");
  for (Eigen::Index i = 0; i < w_orig.size(); ++i)
    if (!(0.0 <= lower[i] && lower[i] <= upper[i])) throw ConfigError("sampling box has l_i > h_i");
}

Matrix lhs_batch(const SamplingBox& box, std::size_t batch_size, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(box.dim());
  const auto b = static_cast<Eigen::Index>(batch_size);
  Matrix out(b, m);
  std::vector<std::size_t> perm(batch_size);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t k = batch_size; k > 1; --k) std::swap(perm[k - 1], perm[uniform_index(rng, k)]);
    const double width = box.upper[i] - box.lower[i];
    for (Eigen::Index r = 0; r < b; ++r) {
      const double u = (static_cast<double>(perm[static_cast<std::size_t>(r)]) + uniform01(rng)) /
                       static_cast<double>(batch_size);
      out(r, i) = box.lower[i] + u * width;
    }
  }
  return out;
}

std::vector<Vector> lhs_candidates(const SamplingBox& box, std::size_t count, std::uint64_t seed,
                                   const LhsOptions& opts) {
  box.validate();
  if (count == 0) throw ConfigError("lhs_candidates needs count >= 1");
  std::vector<Vector> accepted;
  accepted.reserve(count);

  // Zero-width box: the only candidate is w_orig itself.
  if ((box.upper - box.lower).maxCoeff() == 0.0) {
    accepted.assign(count, box.w_orig);
    return accepted;
  }

  Rng rng = make_rng(seed);
  const auto m = static_cast<Eigen::Index>(box.dim());
  std::vector<std::size_t> violations(box.dim(), 0);
  std::size_t draws = 0;
  while (accepted.size() < count) {
    if (draws >= opts.draw_budget) {
      const double rate = static_cast<double>(accepted.size()) / static_cast<double>(draws);
      if (rate < opts.min_acceptance) {
        const auto worst = static_cast<std::size_t>(
            std::max_element(violations.begin(), violations.end()) - violations.begin());
        std::ostringstream os;
        os << "box incompatible with simplex: acceptance rate " << rate << " after " << draws
           << " draws; most violated coordinate " << worst;
        throw InfeasibleError(os.str());
      }
    }
    const Matrix raw = lhs_batch(box, opts.batch_size, rng);
    for (Eigen::Index r = 0; r < raw.rows() && accepted.size() < count; ++r) {
      ++draws;
      Vector w = raw.row(r).transpose();
      w /= w.sum();
      bool ok = true;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!(w[i] >= box.lower[i] && w[i] <= box.upper[i])) {
          ++violations[static_cast<std::size_t>(i)];
          ok = false;
        }
      }
      if (ok) accepted.push_back(std::move(w));
    }
  }
  return accepted;
}

SurrogateDataset label_candidates(const std::vector<Vector>& candidates, const InfluenceMatrix& S,
                                  double eps_norm, bool exclude_nonpositive_rows) {
  SurrogateDataset data;
  data.w = candidates;
  data.y.reserve(candidates.size());
  for (const auto& w : candidates) {
    const double y = aggregate_score(S, w, eps_norm, exclude_nonpositive_rows);
    if (!std::isfinite(y)) throw NumericalError("non-finite aggregate influence label");
    data.y.push_back(y);
  }
  return data;
}

}  // namespace tikmix
