#include "tikmix/influence.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "tikmix/error.hpp"
#include "tikmix/rng.hpp"

namespace tikmix {

void IhvpConfig::validate() const {
  if (!std::isfinite(damping) || damping <= 0.0) throw ConfigError("damping must be > 0");
  if (!std::isfinite(residual_tolerance) || residual_tolerance <= 0.0)
    throw ConfigError("residual_tolerance must be > 0");
  if (max_iterations == 0) throw ConfigError("max_iterations must be >= 1");
  if (damping_mode == DampingMode::RelativeToMeanDiagonal && probe_count == 0)
    throw ConfigError("relative damping needs probe_count >= 1");
}

void InfluenceOptions::validate() const {
  if (group_sample_budget == 0) throw ConfigError("group_sample_budget must be >= 1");
  if (curvature_samples == 0) throw ConfigError("curvature_samples must be >= 1");
  ihvp.validate();
}

double effective_damping(const ModelState& model, const LossSpec& spec, Batch curvature_batch,
                         const IhvpConfig& cfg) {
  if (cfg.damping_mode == DampingMode::Absolute) return cfg.damping;
  const std::size_t d = model.dim();
  double trace = 0.0;
  if (cfg.probe_count >= d) {
    // Exact trace from unit directions.
    for (std::size_t k = 0; k < d; ++k) {
      Vector e = Vector::Unit(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
      trace += hvp(model, spec, curvature_batch, e)[static_cast<Eigen::Index>(k)];
    }
  } else {
    Rng rng = make_rng(cfg.probe_seed);
    for (std::size_t p = 0; p < cfg.probe_count; ++p) {
      Vector z(static_cast<Eigen::Index>(d));
      for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = (rng() & 1U) ? 1.0 : -1.0;
      trace += z.dot(hvp(model, spec, curvature_batch, z));
    }
    trace /= static_cast<double>(cfg.probe_count);
  }
  const double mean_diag = std::max(std::abs(trace) / static_cast<double>(d), 1e-12);
  return cfg.damping * mean_diag;
}

GroupGradient group_gradient(const ModelState& model, const LossSpec& spec, Batch group,
                             int domain_id) {
  return {sum_sample_gradients(model, spec, group), group.size(), domain_id};
}

IhvpResult ihvp(const ModelState& model, const LossSpec& spec, Batch curvature_batch,
                const Vector& b, const IhvpConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(b.size()) != model.dim())
    throw InputError("ihvp right-hand side has wrong length");
  if (!b.allFinite()) throw NumericalError("ihvp right-hand side is not finite");

  IhvpResult res;
  res.damping = effective_damping(model, spec, curvature_batch, cfg);
  const double lambda = res.damping;
  auto apply = [&](const Vector& v) -> Vector {
    return hvp(model, spec, curvature_batch, v) + lambda * v;
  };

  res.x = Vector::Zero(b.size());
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    res.converged = true;
    return res;
  }

  Vector r = b;
  Vector p = r;
  double rr = r.squaredNorm();
  const double target = cfg.residual_tolerance * b_norm;
  while (res.iterations < cfg.max_iterations) {
    const Vector q = apply(p);
    const double curvature = p.dot(q);
    if (!std::isfinite(curvature)) throw NumericalError("ihvp: non-finite curvature in CG");
    if (curvature <= 0.0) {
      res.negative_curvature = true;
      break;
    }
    const double alpha = rr / curvature;
    res.x += alpha * p;
    r -= alpha * q;
    ++res.iterations;
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= target) break;
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  if (!res.x.allFinite()) throw NumericalError("ihvp: NaN during conjugate gradient");

  // Report the true residual, not the recurrence.
  const double true_residual = (apply(res.x) - b).norm();
  res.relative_residual = true_residual / b_norm;
  res.converged = !res.negative_curvature && true_residual <= target;
  return res;
}

Vector functional_gradient(const ModelState& model, const LossSpec& spec, Batch f_batch) {
  LossSpec plain = spec;
  plain.l2 = 0.0;
  return gradient(model, plain, f_batch);
}

GroupInfluence group_influence(const ModelState& model, const LossSpec& spec, Batch f_batch,
                               Batch group, Batch curvature_batch, const IhvpConfig& cfg) {
  GroupInfluence out;
  const GroupGradient g = group_gradient(model, spec, group);
  const Vector grad_f = functional_gradient(model, spec, f_batch);
  // Solve against grad f so the system matches the row-factored matrix build.
  out.solve = ihvp(model, spec, curvature_batch, grad_f, cfg);
  out.value = g.group_size == 0 ? 0.0 : -out.solve.x.dot(g.vector);
  return out;
}

void InfluenceMatrix::validate() const {
  if (task_names.size() != tasks() || domain_names.size() != domains())
    throw InputError("influence matrix dimensions do not match its names");
  if (!values.allFinite()) throw NumericalError("influence matrix has non-finite entries");
  if (!diagnostics.empty() && diagnostics.size() != tasks())
    throw InputError("influence matrix diagnostics do not match its row count");
}

bool InfluenceMatrix::operator==(const InfluenceMatrix& o) const {
  return values.rows() == o.values.rows() && values.cols() == o.values.cols() &&
         values == o.values && task_names == o.task_names && domain_names == o.domain_names &&
         checkpoint_id == o.checkpoint_id && orientation == o.orientation &&
         damping == o.damping && diagnostics == o.diagnostics;
}

InfluenceMatrix to_benefit(const InfluenceMatrix& m) {
  InfluenceMatrix out = m;
  if (m.orientation == Orientation::RawInfluence) {
    out.values = -m.values;
    out.orientation = Orientation::Benefit;
  }
  return out;
}

std::vector<Sample> subsample(const std::vector<Sample>& pool, std::size_t budget,
                              std::uint64_t seed) {
  if (budget >= pool.size()) return pool;
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  std::vector<Sample> out;
  out.reserve(budget);
  for (std::size_t k = 0; k < budget; ++k) {
    const std::size_t pick = k + uniform_index(rng, idx.size() - k);
    std::swap(idx[k], idx[pick]);
    out.push_back(pool[idx[k]]);
  }
  return out;
}

std::vector<Sample> curvature_subsample(const DomainCorpus& corpus, std::size_t count,
                                        std::uint64_t seed) {
  std::vector<Sample> all;
  for (const auto& d : corpus.domains) all.insert(all.end(), d.samples.begin(), d.samples.end());
  return subsample(all, count, seed);
}

InfluenceMatrix build_influence_matrix(const ModelState& model, const LossSpec& spec,
                                       const DomainCorpus& corpus, const InfluenceOptions& opts,
                                       std::uint64_t seed) {
  opts.validate();
  corpus.validate();
  model.validate();
  spec.validate();

  const std::size_t n = corpus.task_count();
  const std::size_t m = corpus.domain_count();
  const auto curvature = curvature_subsample(corpus, opts.curvature_samples, derive_seed(seed, "curvature"));

  std::vector<Vector> domain_gradients;
  domain_gradients.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& pool = corpus.domains[j].samples;
    const auto group = subsample(pool, opts.group_sample_budget, derive_seed(derive_seed(seed, "group"), j));
    GroupGradient g = group_gradient(model, spec, group, static_cast<int>(j));
    const double rescale = static_cast<double>(pool.size()) / static_cast<double>(g.group_size);
    domain_gradients.push_back(rescale * g.vector);
  }

  IhvpConfig cfg = opts.ihvp;
  cfg.probe_seed = derive_seed(seed, "probes");
  // The damping estimate is shared by every row.
  const double lambda = effective_damping(model, spec, curvature, cfg);
  IhvpConfig row_cfg = cfg;
  row_cfg.damping = lambda;
  row_cfg.damping_mode = DampingMode::Absolute;

  InfluenceMatrix out;
  out.values = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  out.task_names = corpus.task_names();
  out.domain_names = corpus.domain_names();
  out.checkpoint_id = opts.checkpoint_id;
  out.orientation = Orientation::RawInfluence;
  out.damping = lambda;
  out.diagnostics.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector grad_f = functional_gradient(model, spec, corpus.tasks[i].samples);
    const IhvpResult solve = ihvp(model, spec, curvature, grad_f, row_cfg);
    out.diagnostics[i] = {solve.converged, solve.negative_curvature, solve.iterations,
                          solve.relative_residual};
    for (std::size_t j = 0; j < m; ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          -solve.x.dot(domain_gradients[j]);
  }
  out.validate();
  return out;
}

}  // namespace tikmix
