#include "tikmix/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "tikmix/error.hpp"
#include "tikmix/rng.hpp"

namespace tikmix {

std::string_view to_string(MixStrategy s) {
  switch (s) {
    case MixStrategy::Static: return "static";
    case MixStrategy::TikmixD: return "tikmix-d";
    case MixStrategy::TikmixM: return "tikmix-m";
  }
  return "?";
}

MixStrategy parse_mix_strategy(std::string_view s) {
  if (s == "static") return MixStrategy::Static;
  if (s == "tikmix-d") return MixStrategy::TikmixD;
  if (s == "tikmix-m") return MixStrategy::TikmixM;
  throw ConfigError("unknown mix strategy '" + std::string(s) + "'");
}

void StagePlan::validate(std::size_t domain_count) const {
  if (stages.empty()) throw ConfigError("plan needs at least one stage");
  for (const auto& s : stages)
    if (s.steps == 0) throw ConfigError("every stage needs steps >= 1");
  initial_weights.validate();
  if (initial_weights.size() != domain_count)
    throw ConfigError("plan initial weights do not match the corpus domain count");
  train.validate();
  influence.validate();
  if (!(divergence_threshold > 0.0)) throw ConfigError("divergence threshold must be > 0");
}

double RunRecord::final_mean_validation_loss() const {
  if (stages.empty()) return 0.0;
  return stages.back().val_after.mean();
}

RunRecord run_pipeline(const StagePlan& plan, const ModelState& initial_model, const LossSpec& spec,
                       const DomainCorpus& corpus) {
  const auto started = std::chrono::steady_clock::now();
  corpus.validate();
  plan.validate(corpus.domain_count());
  initial_model.validate();
  spec.validate();

  RunRecord record;
  record.seed = plan.seed;
  ModelState model = initial_model;
  MixtureWeights current = plan.initial_weights;
  if (current.names.empty()) current.names = corpus.domain_names();

  for (std::size_t k = 0; k < plan.stages.size(); ++k) {
    const StageSpec& stage = plan.stages[k];
    const std::uint64_t stage_seed = derive_seed(plan.seed, k);
    StageRecord rec;
    rec.index = k;
    rec.strategy = stage.strategy;

    if (k > 0 && stage.strategy != MixStrategy::Static) {
      ModelState checkpoint = model;
      if (plan.checkpoint_offset > 0)
        checkpoint = train(model, spec, corpus, current, plan.checkpoint_offset,
                           derive_seed(stage_seed, "offset"), plan.train);
      InfluenceOptions iopts = plan.influence;
      iopts.checkpoint_id = "stage-" + std::to_string(k);
      InfluenceMatrix raw =
          build_influence_matrix(checkpoint, spec, corpus, iopts, derive_seed(stage_seed, "influence"));
      const InfluenceMatrix benefit = to_benefit(raw);

      MixDConfig dcfg = plan.mixd;
      dcfg.prior = current.w;
      MixDSolution d = solve_mixd(benefit, dcfg);
      if (!d.feasible) rec.note = "tikmix-d infeasible; kept the prior mixture";
      Vector next = d.w_best.w;
      if (stage.strategy == MixStrategy::TikmixM) {
        MixMResult mres = run_mixm(benefit, next, plan.mixm, derive_seed(stage_seed, "mixm"));
        next = mres.w_best;
        if (mres.fell_back_to_start) {
          if (!rec.note.empty()) rec.note += "; ";
          rec.note += "tikmix-m search scored below its start; kept the tikmix-d mixture";
        }
        rec.mixm = std::move(mres);
      }
      rec.influence = std::move(raw);
      rec.mixd = std::move(d);
      current = {clean_simplex_point(next), current.names};
    }

    rec.weights = current;
    rec.val_before = task_losses(model, spec, corpus);
    try {
      model = train(model, spec, corpus, current, stage.steps, derive_seed(stage_seed, "train"), plan.train);
      rec.val_after = task_losses(model, spec, corpus);
    } catch (const NumericalError& e) {
      throw NumericalError("training diverged in stage " + std::to_string(k) + ": " + e.what());
    }
    if (!rec.val_after.allFinite() || rec.val_after.maxCoeff() > plan.divergence_threshold)
      throw NumericalError("training diverged in stage " + std::to_string(k));
    record.stages.push_back(std::move(rec));
  }
  record.final_model = model;
  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

}  // namespace tikmix
