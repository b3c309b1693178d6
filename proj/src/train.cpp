#include "tikmix/train.hpp"

#include <cmath>

#include "tikmix/error.hpp"
#include "tikmix/rng.hpp"

namespace tikmix {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0)
    throw ConfigError("learning_rate must be finite and > 0");
}

ModelState train(const ModelState& model, const LossSpec& spec, const DomainCorpus& corpus,
                 const MixtureWeights& weights, std::size_t steps, std::uint64_t seed,
                 const TrainConfig& cfg) {
  cfg.validate();
  weights.validate();
  if (weights.size() != corpus.domain_count())
    throw InputError("mixture weights do not match the corpus domain count");
  for (std::size_t j = 0; j < corpus.domain_count(); ++j) {
    if (weights.w[static_cast<Eigen::Index>(j)] > 0.0 && corpus.domains[j].samples.empty())
      throw ConfigError("domain '" + corpus.domains[j].name + "' is empty but has positive weight");
  }

  ModelState state = model;
  if (steps == 0) return state;

  // Cumulative weights for inverse-CDF domain draws.
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < cdf.size(); ++j) {
    acc += weights.w[static_cast<Eigen::Index>(j)];
    cdf[j] = acc;
  }
  auto draw_domain = [&](Rng& rng) {
    const double u = uniform01(rng) * acc;
    for (std::size_t j = 0; j < cdf.size(); ++j)
      if (u < cdf[j] && weights.w[static_cast<Eigen::Index>(j)] > 0.0) return j;
    for (std::size_t j = cdf.size(); j-- > 0;)
      if (weights.w[static_cast<Eigen::Index>(j)] > 0.0) return j;
    return std::size_t{0};
  };

  Rng rng = make_rng(seed);
  std::vector<Sample> batch(cfg.batch_size);
  for (std::size_t step = 0; step < steps; ++step) {
    for (auto& slot : batch) {
      const auto& pool = corpus.domains[draw_domain(rng)].samples;
      slot = pool[uniform_index(rng, pool.size())];
    }
    state.params -= cfg.learning_rate * gradient(state, spec, batch);
    if (!state.params.allFinite())
      throw NumericalError("training diverged at step " + std::to_string(step));
  }
  return state;
}

Vector task_losses(const ModelState& model, const LossSpec& spec, const DomainCorpus& corpus) {
  LossSpec plain = spec;
  plain.l2 = 0.0;
  Vector out(static_cast<Eigen::Index>(corpus.task_count()));
  for (std::size_t i = 0; i < corpus.task_count(); ++i)
    out[static_cast<Eigen::Index>(i)] = loss(model, plain, corpus.tasks[i].samples);
  return out;
}

}  // namespace tikmix
