#include "tikmix/additivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tikmix/error.hpp"
#include "tikmix/rng.hpp"

namespace tikmix {

void AdditivityOptions::validate() const {
  if (config_count < 2) throw ConfigError("additivity needs config_count >= 2");
  if (!(scale_low > 0.0) || !(scale_high >= scale_low) || !std::isfinite(scale_high))
    throw ConfigError("additivity needs 0 < scale_low <= scale_high");
  if (token_budget == 0) throw ConfigError("token_budget must be >= 1");
  if (curvature_samples == 0) throw ConfigError("curvature_samples must be >= 1");
  ihvp.validate();
}

std::optional<double> pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const Vector da = (a.array() - a.mean()).matrix();
  const Vector db = (b.array() - b.mean()).matrix();
  const double saa = da.squaredNorm();
  const double sbb = db.squaredNorm();
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(da.dot(db) / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<std::size_t> apportion(const Vector& w, std::size_t total) {
  const auto m = static_cast<std::size_t>(w.size());
  std::vector<std::size_t> counts(m);
  std::vector<std::pair<double, std::size_t>> remainders(m);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double exact = w[static_cast<Eigen::Index>(j)] * static_cast<double>(total);
    counts[j] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[j];
    remainders[j] = {exact - std::floor(exact), j};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < m; ++k, ++assigned) ++counts[remainders[k].second];
  return counts;
}

namespace {

// Uniform draw of `count` samples; without replacement when the pool allows.
std::vector<Sample> draw_group(const std::vector<Sample>& pool, std::size_t count, std::uint64_t seed) {
  if (count <= pool.size()) return subsample(pool, count, seed);
  Rng rng = make_rng(seed);
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(pool[uniform_index(rng, pool.size())]);
  return out;
}

}  // namespace

AdditivityReport additivity_experiment(const ModelState& model, const LossSpec& spec,
                                       const DomainCorpus& corpus, const MixtureWeights& base,
                                       const AdditivityOptions& opts, std::uint64_t seed) {
  opts.validate();
  corpus.validate();
  base.validate();
  if (base.size() != corpus.domain_count())
    throw InputError("base weights do not match the corpus domain count");

  const std::size_t n = corpus.task_count();
  const std::size_t m = corpus.domain_count();
  const auto nd = static_cast<Eigen::Index>(n);
  const auto md = static_cast<Eigen::Index>(m);
  const auto curvature =
      curvature_subsample(corpus, opts.curvature_samples, derive_seed(seed, "curvature"));

  IhvpConfig cfg = opts.ihvp;
  cfg.probe_seed = derive_seed(seed, "probes");
  IhvpConfig row_cfg = cfg;
  row_cfg.damping = effective_damping(model, spec, curvature, cfg);
  row_cfg.damping_mode = DampingMode::Absolute;

  // Influence of any group on task i is -x_i . (accumulated gradient).
  std::vector<Vector> solved(n);
  for (std::size_t i = 0; i < n; ++i) {
    const IhvpResult r =
        ihvp(model, spec, curvature, functional_gradient(model, spec, corpus.tasks[i].samples), row_cfg);
    solved[i] = r.x;
  }
  auto influence_of = [&](const Vector& accumulated) {
    Vector out(nd);
    for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = -solved[i].dot(accumulated);
    return out;
  };

  AdditivityReport report;
  report.task_names = corpus.task_names();
  report.domain_names = corpus.domain_names();
  report.reference = Matrix(nd, md);
  for (std::size_t j = 0; j < m; ++j) {
    const auto group = draw_group(corpus.domains[j].samples, opts.token_budget,
                                  derive_seed(derive_seed(seed, "reference"), j));
    report.reference.col(static_cast<Eigen::Index>(j)) =
        influence_of(group_gradient(model, spec, group).vector);
  }

  Rng scale_rng = make_rng(derive_seed(seed, "scales"));
  std::vector<Vector> predicted;
  std::vector<Vector> measured;
  for (std::size_t c = 0; c < opts.config_count; ++c) {
    Vector w = base.w;
    for (Eigen::Index j = 0; j < md; ++j)
      w[j] *= opts.scale_low + (opts.scale_high - opts.scale_low) * uniform01(scale_rng);
    w /= w.sum();

    const auto counts = apportion(w, opts.token_budget);
    bool degenerate = false;
    for (std::size_t j = 0; j < m; ++j)
      if (w[static_cast<Eigen::Index>(j)] > 0.0 && counts[j] == 0) degenerate = true;
    if (degenerate) {
      ++report.outliers_removed;
      continue;
    }

    const std::uint64_t config_seed = derive_seed(derive_seed(seed, "mixed"), c);
    Vector accumulated = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
    for (std::size_t j = 0; j < m; ++j) {
      if (counts[j] == 0) continue;
      const auto part = draw_group(corpus.domains[j].samples, counts[j], derive_seed(config_seed, j));
      accumulated += group_gradient(model, spec, part).vector;
    }
    measured.push_back(influence_of(accumulated));
    predicted.push_back(report.reference * w);
    report.weights.push_back(std::move(w));
  }

  const auto survivors = static_cast<Eigen::Index>(measured.size());
  if (survivors < 2)
    throw StatisticsError("additivity needs at least 2 surviving configurations, got " +
                          std::to_string(survivors));
  report.predicted = Matrix(survivors, nd);
  report.measured = Matrix(survivors, nd);
  for (Eigen::Index c = 0; c < survivors; ++c) {
    report.predicted.row(c) = predicted[static_cast<std::size_t>(c)].transpose();
    report.measured.row(c) = measured[static_cast<std::size_t>(c)].transpose();
  }
  for (Eigen::Index i = 0; i < nd; ++i)
    report.pearson.push_back(pearson(report.predicted.col(i), report.measured.col(i)));
  return report;
}

}  // namespace tikmix
