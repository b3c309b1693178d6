#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tikmix/corpus.hpp"
#include "tikmix/influence.hpp"
#include "tikmix/mixd.hpp"
#include "tikmix/search.hpp"
#include "tikmix/train.hpp"

namespace tikmix {

enum class MixStrategy { Static, TikmixD, TikmixM };

std::string_view to_string(MixStrategy s);
MixStrategy parse_mix_strategy(std::string_view s);

struct StageSpec {
  std::size_t steps = 2000;
  /// Rule that picks this stage's weights at the boundary before it. The
  /// first stage always runs on the plan's initial weights.
  MixStrategy strategy = MixStrategy::Static;

  bool operator==(const StageSpec&) const = default;
};

struct StagePlan {
  std::vector<StageSpec> stages;
  MixtureWeights initial_weights;
  std::uint64_t seed = 0;
  TrainConfig train;
  InfluenceOptions influence;
  MixDConfig mixd;
  MixMOptions mixm;
  /// Steps trained into the next stage's mixture before influence is
  /// measured. 0 measures exactly at the boundary.
  std::size_t checkpoint_offset = 0;
  double divergence_threshold = 1e6;

  void validate(std::size_t domain_count) const;
};

struct StageRecord {
  std::size_t index = 0;
  MixStrategy strategy = MixStrategy::Static;
  MixtureWeights weights;
  std::optional<InfluenceMatrix> influence;  // measured at the boundary before this stage
  std::optional<MixDSolution> mixd;
  std::optional<MixMResult> mixm;
  Vector val_before;
  Vector val_after;
  std::string note;
};

struct RunRecord {
  std::vector<StageRecord> stages;
  std::uint64_t seed = 0;
  ModelState final_model;
  double wall_clock_seconds = 0.0;

  double final_mean_validation_loss() const;
};

RunRecord run_pipeline(const StagePlan& plan, const ModelState& initial_model, const LossSpec& spec,
                       const DomainCorpus& corpus);

}  // namespace tikmix
