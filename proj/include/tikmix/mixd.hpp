#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tikmix/influence.hpp"
#include "tikmix/mixture.hpp"

namespace tikmix {

struct NormalizedInfluence {
  Vector values;              // P_hat, length n
  std::vector<bool> flagged;  // rows whose max_j S_ij <= 0
};

/// P = S w;  P_hat_i = P_i / (max_j S_ij + eps). S must be in benefit orientation.
NormalizedInfluence normalize_influence(const InfluenceMatrix& S, const Vector& w, double eps_norm);

struct MixDConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double eps_norm = 1e-8;
  std::optional<Vector> prior;  // uniform when unset
  double pareto_slack = 0.0;
  bool exclude_nonpositive_rows = true;

  void validate(std::size_t m) const;
  bool operator==(const MixDConfig&) const = default;
};

struct ObjectiveTerms {
  double dispersion = 0.0;  // std(P_hat), population
  double total = 0.0;       // sum_i P_hat_i
  double entropy = 0.0;     // H(w)
  double value = 0.0;       // alpha * dispersion - beta * total - gamma * entropy
};

/// L(w) over the rows kept by the config (flagged rows dropped when requested).
ObjectiveTerms objective_terms(const InfluenceMatrix& S, const Vector& w, const MixDConfig& cfg);
double objective(const InfluenceMatrix& S, const Vector& w, const MixDConfig& cfg);

/// Sum of normalized influences over the kept rows; the TiKMiX-M label.
double aggregate_score(const InfluenceMatrix& S, const Vector& w, double eps_norm,
                       bool exclude_nonpositive_rows = true);

struct MixDSolution {
  MixtureWeights w_best;
  ObjectiveTerms objective;
  Vector pareto_residuals;  // S w_best - S w_prior + slack, componentwise
  double simplex_residual = 0.0;
  bool feasible = false;
  bool used_feasibility_phase = false;
  std::size_t iterations = 0;
  std::vector<std::size_t> flagged_rows;
  std::string note;
};

/// Minimizes L(w) on the simplex subject to S w >= S w_prior - slack.
/// Projected gradient with Barzilai-Borwein steps on the simplex and an
/// augmented Lagrangian for the Pareto rows, restarted from a fixed set of
/// deterministic starting points.
MixDSolution solve_mixd(const InfluenceMatrix& S, const MixDConfig& cfg);

}  // namespace tikmix
