#include "tikmix/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tikmix/error.hpp"
#include "tikmix/mixd.hpp"

namespace tikmix {

void SearchConfig::validate() const {
  if (iterations == 0) throw ConfigError("search needs T >= 1");
  if (!(alpha_min > 0.0) || !(alpha_max >= alpha_min) || !std::isfinite(alpha_max))
    throw ConfigError("search needs alpha_max >= alpha_min > 0");
  if (top_k == 0 || top_k > samples) throw ConfigError("search needs 1 <= top_k <= N");
  if (!(concentration_floor > 0.0)) throw ConfigError("concentration floor must be > 0");
}

std::vector<double> exploration_schedule(const SearchConfig& cfg) {
  std::vector<double> alphas(cfg.iterations);
  if (cfg.iterations == 1) {
    alphas[0] = cfg.alpha_max;
    return alphas;
  }
  const double ratio = cfg.alpha_min / cfg.alpha_max;
  const double last = static_cast<double>(cfg.iterations - 1);
  for (std::size_t t = 0; t < cfg.iterations; ++t)
    alphas[t] = cfg.alpha_max * std::pow(ratio, static_cast<double>(t) / last);
  alphas.back() = cfg.alpha_min;
  return alphas;
}

double concentration_for(const SearchConfig& cfg, double alpha) {
  return cfg.alpha_min * cfg.alpha_max / alpha;
}

Vector sample_dirichlet(const Vector& concentration, double floor, Rng& rng) {
  Vector logs(concentration.size());
  for (Eigen::Index j = 0; j < logs.size(); ++j)
    logs[j] = log_gamma_draw(rng, std::max(concentration[j], floor));
  // Normalize in log space.
  const double top = logs.maxCoeff();
  Vector w = (logs.array() - top).exp().matrix();
  return w / w.sum();
}

SearchResult iterative_search(const ScoreFn& score, const Vector& w0, const SearchConfig& cfg) {
  cfg.validate();
  MixtureWeights{w0, {}}.validate();
  Rng rng = make_rng(cfg.seed);
  SearchResult out;
  out.w_best = w0;

  std::vector<Vector> draws(cfg.samples);
  std::vector<double> scores(cfg.samples);
  std::vector<std::size_t> order(cfg.samples);
  for (double alpha : exploration_schedule(cfg)) {
    const double c = concentration_for(cfg, alpha);
    for (std::size_t i = 0; i < cfg.samples; ++i) {
      draws[i] = sample_dirichlet(c * out.w_best, cfg.concentration_floor, rng);
      scores[i] = score(draws[i]);
      if (!std::isfinite(scores[i])) {
        std::ostringstream os;
        os.precision(17);
        os << "surrogate prediction is not finite at candidate [" << draws[i].transpose() << "]";
        throw NumericalError(os.str());
      }
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    Vector mean = Vector::Zero(w0.size());
    for (std::size_t k = 0; k < cfg.top_k; ++k) mean += draws[order[k]];
    mean /= static_cast<double>(cfg.top_k);
    out.w_best = mean / mean.sum();
    double top_mean = 0.0;
    for (std::size_t k = 0; k < cfg.top_k; ++k) top_mean += scores[order[k]];
    top_mean /= static_cast<double>(cfg.top_k);
    out.trace.push_back({alpha, c, scores[order.front()], top_mean, out.w_best});
  }
  return out;
}

SearchResult iterative_search(const SurrogateModel& surrogate, const Vector& w0,
                              const SearchConfig& cfg) {
  return iterative_search([&surrogate](const Vector& w) { return surrogate.predict(w); }, w0, cfg);
}

MixMResult run_mixm(const InfluenceMatrix& benefit, const Vector& w0, const MixMOptions& opts,
                    std::uint64_t seed) {
  if (benefit.orientation != Orientation::Benefit)
    throw InputError("run_mixm needs a benefit-oriented matrix");
  MixMResult out;
  auto true_score = [&](const Vector& w) {
    return aggregate_score(benefit, w, opts.eps_norm, opts.exclude_nonpositive_rows);
  };

  const SamplingBox box = SamplingBox::around(w0, opts.scale_low, opts.scale_high);
  const auto candidates = lhs_candidates(box, opts.candidates, derive_seed(seed, "lhs"));
  out.dataset = label_candidates(candidates, benefit, opts.eps_norm, opts.exclude_nonpositive_rows);
  out.surrogate = fit_surrogate(out.dataset, opts.boosting);

  SearchConfig search = opts.search;
  search.seed = derive_seed(seed, "search");
  out.search = iterative_search(out.surrogate, w0, search);
  out.w_searched = out.search.w_best;

  out.true_score_start = true_score(w0);
  out.true_score_searched = true_score(out.w_searched);
  out.fell_back_to_start = out.true_score_searched < out.true_score_start;
  out.w_best = out.fell_back_to_start ? w0 : out.w_searched;
  return out;
}

}  // namespace tikmix
