#pragma once

#include <cstdint>

#include "tikmix/corpus.hpp"
#include "tikmix/mixture.hpp"
#include "tikmix/model.hpp"

namespace tikmix {

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 0.05;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Mini-batch gradient descent. Each batch entry picks a domain from
/// `weights` (with replacement) and then a sample uniformly inside it.
ModelState train(const ModelState& model, const LossSpec& spec, const DomainCorpus& corpus,
                 const MixtureWeights& weights, std::size_t steps, std::uint64_t seed,
                 const TrainConfig& cfg = {});

/// Mean loss (no L2 term) on each validation task.
Vector task_losses(const ModelState& model, const LossSpec& spec, const DomainCorpus& corpus);

}  // namespace tikmix
