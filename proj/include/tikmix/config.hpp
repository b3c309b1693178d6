#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tikmix/additivity.hpp"
#include "tikmix/corpus.hpp"
#include "tikmix/pipeline.hpp"
#include "tikmix/serialize.hpp"

namespace tikmix {

struct ModelConfig {
  Architecture arch;  // input_dim 0 means "take it from the corpus"
  LossSpec loss;
  double init_scale = 1.0;

  bool operator==(const ModelConfig&) const = default;
};

/// Checkpoint used by the influence and additivity commands when no model
/// file is given: a fresh model trained for `steps` on `weights`.
struct WarmupConfig {
  std::size_t steps = 0;
  std::optional<Vector> weights;  // uniform when unset

  bool operator==(const WarmupConfig&) const = default;
};

struct PlanConfig {
  std::vector<StageSpec> stages{{2000, MixStrategy::Static}, {2000, MixStrategy::TikmixD}};
  std::optional<Vector> initial_weights;
  std::size_t checkpoint_offset = 0;
  double divergence_threshold = 1e6;

  bool operator==(const PlanConfig&) const = default;
};

struct AdditivityConfig {
  AdditivityOptions options;
  std::optional<Vector> base_weights;  // solve TiKMiX-D at the checkpoint when unset

  bool operator==(const AdditivityConfig&) const = default;
};

/// Every knob of every command. Parsing rejects unknown keys anywhere.
struct ExperimentConfig {
  Scenario scenario;
  ModelConfig model;
  TrainConfig train;  // every training run: warm-up and pipeline stages
  WarmupConfig warmup;
  InfluenceOptions influence;
  MixDConfig mixd;
  MixMOptions mixm;
  std::optional<Vector> mixm_start;  // TiKMiX-D solution when unset
  PlanConfig plan;
  AdditivityConfig additivity;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const Json& j);
Json to_json(const ExperimentConfig& c);

ExperimentConfig load_config(const std::string& path);

}  // namespace tikmix
