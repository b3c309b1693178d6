#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tikmix/corpus.hpp"
#include "tikmix/influence.hpp"
#include "tikmix/mixture.hpp"

namespace tikmix {

struct AdditivityOptions {
  std::size_t config_count = 256;
  double scale_low = 0.5;
  double scale_high = 2.0;
  std::size_t token_budget = 1024;  // samples per mixed group and per reference group
  std::size_t curvature_samples = 4096;
  IhvpConfig ihvp{1e-3, DampingMode::RelativeToMeanDiagonal};

  void validate() const;
  bool operator==(const AdditivityOptions&) const = default;
};

struct AdditivityReport {
  std::vector<std::string> task_names;
  std::vector<std::string> domain_names;
  Matrix reference;              // n x m: influence of a budget-sized group from each domain
  std::vector<Vector> weights;   // perturbed mixtures that survived
  Matrix predicted;              // configs x n: sum_j w'_j * reference(i, j)
  Matrix measured;               // configs x n: direct influence of the sampled mixed group
  std::vector<std::optional<double>> pearson;  // per task; empty when a side has zero variance
  std::size_t outliers_removed = 0;
};

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const Vector& a, const Vector& b);

/// Perturbs `base` by independent uniform scale factors, samples a mixed
/// group per perturbed mixture, and compares its measured influence with the
/// weighted sum of single-domain influences. Configurations that would need
/// samples from a domain that received none are dropped as outliers.
AdditivityReport additivity_experiment(const ModelState& model, const LossSpec& spec,
                                       const DomainCorpus& corpus, const MixtureWeights& base,
                                       const AdditivityOptions& opts, std::uint64_t seed);

/// Largest-remainder rounding of w * total to integer counts summing to total.
std::vector<std::size_t> apportion(const Vector& w, std::size_t total);

}  // namespace tikmix
