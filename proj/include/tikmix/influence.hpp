#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tikmix/corpus.hpp"
#include "tikmix/model.hpp"

namespace tikmix {

/// Accumulated gradient of a group: the SUM of per-sample loss gradients.
struct GroupGradient {
  Vector vector;
  std::size_t group_size = 0;  // 0 flags an empty group (zero influence)
  int domain_id = -1;
};

enum class DampingMode { Absolute, RelativeToMeanDiagonal };

struct IhvpConfig {
  double damping = 1e-3;
  DampingMode damping_mode = DampingMode::Absolute;
  std::size_t max_iterations = 1000;
  double residual_tolerance = 1e-10;
  /// Hutchinson probes for the mean-diagonal estimate (relative damping).
  std::size_t probe_count = 16;
  std::uint64_t probe_seed = 0;

  void validate() const;
  bool operator==(const IhvpConfig&) const = default;
};

struct IhvpResult {
  Vector x;
  bool converged = false;
  bool negative_curvature = false;
  std::size_t iterations = 0;
  double relative_residual = 0.0;  // |(H + lambda I) x - b| / |b|
  double damping = 0.0;            // absolute lambda actually used
};

/// Damping actually applied for `cfg` at this model/curvature batch.
double effective_damping(const ModelState& model, const LossSpec& spec, Batch curvature_batch,
                         const IhvpConfig& cfg);

GroupGradient group_gradient(const ModelState& model, const LossSpec& spec, Batch group,
                             int domain_id = -1);

/// Conjugate gradient on (H + lambda I) x = b with H applied through `hvp`.
/// Non-convergence is reported in the result, not thrown.
IhvpResult ihvp(const ModelState& model, const LossSpec& spec, Batch curvature_batch,
                const Vector& b, const IhvpConfig& cfg);

struct GroupInfluence {
  double value = 0.0;
  IhvpResult solve;
};

/// I_f(S) = -grad f(theta)^T (H + lambda I)^{-1} sum_{z in S} grad L(z, theta),
/// with f the mean (unregularized) loss over `f_batch`.
GroupInfluence group_influence(const ModelState& model, const LossSpec& spec, Batch f_batch,
                               Batch group, Batch curvature_batch, const IhvpConfig& cfg);

/// Gradient of the validation functional f (mean task loss, no L2 term).
Vector functional_gradient(const ModelState& model, const LossSpec& spec, Batch f_batch);

enum class Orientation { RawInfluence, Benefit };

struct RowDiagnostics {
  bool converged = true;
  bool negative_curvature = false;
  std::size_t iterations = 0;
  double relative_residual = 0.0;

  bool operator==(const RowDiagnostics&) const = default;
};

/// n x m matrix; entry (i, j) is the influence of domain j on task i.
struct InfluenceMatrix {
  Matrix values;
  std::vector<std::string> task_names;
  std::vector<std::string> domain_names;
  std::string checkpoint_id;
  Orientation orientation = Orientation::RawInfluence;
  double damping = 0.0;
  std::vector<RowDiagnostics> diagnostics;

  std::size_t tasks() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t domains() const { return static_cast<std::size_t>(values.cols()); }
  void validate() const;
  bool operator==(const InfluenceMatrix& o) const;
};

/// Copy in benefit orientation (larger = upweighting the domain helps the task).
InfluenceMatrix to_benefit(const InfluenceMatrix& m);

struct InfluenceOptions {
  std::size_t group_sample_budget = 1024;
  std::size_t curvature_samples = 4096;
  IhvpConfig ihvp{1e-3, DampingMode::RelativeToMeanDiagonal};
  std::string checkpoint_id = "checkpoint";

  void validate() const;
  bool operator==(const InfluenceOptions&) const = default;
};

/// Seeded subsample of the union of all domains used to estimate curvature.
std::vector<Sample> curvature_subsample(const DomainCorpus& corpus, std::size_t count,
                                        std::uint64_t seed);

/// Uniform subsample without replacement (the whole pool when budget >= size).
std::vector<Sample> subsample(const std::vector<Sample>& pool, std::size_t budget, std::uint64_t seed);

/// One damped solve per task row, reused against every domain's accumulated
/// gradient. Domain gradients are rescaled by domain size / group size.
InfluenceMatrix build_influence_matrix(const ModelState& model, const LossSpec& spec,
                                       const DomainCorpus& corpus, const InfluenceOptions& opts,
                                       std::uint64_t seed);

}  // namespace tikmix
