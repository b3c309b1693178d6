#include "tikmix/mixd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "tikmix/error.hpp"

namespace tikmix {

namespace {

constexpr double kEntropyFloor = 1e-12;
constexpr double kParetoTolerance = 1e-6;

Vector row_normalizers(const InfluenceMatrix& S, double eps_norm) {
  return (S.values.rowwise().maxCoeff().array() + eps_norm).matrix();
}

std::vector<bool> nonpositive_rows(const InfluenceMatrix& S) {
  std::vector<bool> flags(S.tasks());
  for (std::size_t i = 0; i < S.tasks(); ++i)
    flags[i] = S.values.row(static_cast<Eigen::Index>(i)).maxCoeff() <= 0.0;
  return flags;
}

// Evaluates L(w) and its gradient over the kept rows.
class Objective {
 public:
  Objective(const InfluenceMatrix& S, const MixDConfig& cfg) : cfg_(cfg) {
    const Vector den = row_normalizers(S, cfg.eps_norm);
    const auto flags = nonpositive_rows(S);
    std::vector<Eigen::Index> kept;
    for (std::size_t i = 0; i < flags.size(); ++i)
      if (!(cfg.exclude_nonpositive_rows && flags[i])) kept.push_back(static_cast<Eigen::Index>(i));
    scaled_ = Matrix(static_cast<Eigen::Index>(kept.size()), S.values.cols());
    for (std::size_t r = 0; r < kept.size(); ++r)
      scaled_.row(static_cast<Eigen::Index>(r)) = S.values.row(kept[r]) / den[kept[r]];
  }

  ObjectiveTerms terms(const Vector& w) const {
    ObjectiveTerms t;
    if (scaled_.rows() > 0) {
      const Vector p = scaled_ * w;
      const double mean = p.mean();
      t.dispersion = std::sqrt((p.array() - mean).square().mean());
      t.total = p.sum();
    }
    t.entropy = entropy(w);
    t.value = cfg_.alpha * t.dispersion - cfg_.beta * t.total - cfg_.gamma * t.entropy;
    return t;
  }

  double value(const Vector& w) const { return terms(w).value; }

  // With gamma > 0 the entropy term keeps the minimizer off the boundary.
  bool interior_minimizer() const { return cfg_.gamma > 0.0; }

  // The dispersion term is not differentiable where all normalized
  // influences coincide. Returns the rows E with E w = 0 exactly there, or
  // nothing when the term is absent or cannot have that kink.
  Matrix kink_rows() const {
    if (!(cfg_.alpha > 0.0) || scaled_.rows() < 2) return Matrix(0, scaled_.cols());
    return scaled_.rowwise() - scaled_.colwise().mean();
  }

  Objective without_dispersion() const {
    Objective o = *this;
    o.cfg_.alpha = 0.0;
    return o;
  }

  Vector gradient(const Vector& w) const {
    Vector g = Vector::Zero(w.size());
    if (scaled_.rows() > 0) {
      const Vector p = scaled_ * w;
      const double n = static_cast<double>(p.size());
      const Vector centered = (p.array() - p.mean()).matrix();
      const double sd = std::sqrt(centered.squaredNorm() / n);
      if (sd > 1e-15) g += cfg_.alpha * scaled_.transpose() * centered / (n * sd);
      g -= cfg_.beta * scaled_.transpose() * Vector::Ones(p.size());
    }
    // d(-H)/dw_j = log w_j + 1, with w_j clamped away from zero.
    for (Eigen::Index j = 0; j < w.size(); ++j)
      g[j] += cfg_.gamma * (std::log(std::max(w[j], kEntropyFloor)) + 1.0);
    return g;
  }

 private:
  MixDConfig cfg_;
  Matrix scaled_;
};

// Pareto rows as c(w) = A w - b >= 0, each row scaled by its largest |S_ij|
// so the penalty weight does not depend on the magnitude of S.
struct ParetoRows {
  Matrix a;
  Vector b;
  Vector row_scale;

  Vector eval(const Vector& w) const { return a * w - b; }
};

ParetoRows make_pareto(const InfluenceMatrix& S, const Vector& prior, double slack) {
  ParetoRows rows;
  const Eigen::Index n = S.values.rows();
  rows.row_scale = S.values.cwiseAbs().rowwise().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(rows.row_scale[i] > 0.0)) rows.row_scale[i] = 1.0;
  rows.a = rows.row_scale.cwiseInverse().asDiagonal() * S.values;
  rows.b = rows.row_scale.cwiseInverse().asDiagonal() * (S.values * prior - Vector::Constant(n, slack));
  return rows;
}

using ValueFn = std::function<double(const Vector&)>;
using GradFn = std::function<Vector(const Vector&)>;

struct InnerResult {
  Vector w;
  std::size_t iterations = 0;
};

// Projected gradient on the simplex with Barzilai-Borwein steps and Armijo
// backtracking along the projection arc.
InnerResult projected_gradient(const ValueFn& f, const GradFn& grad, Vector w,
                               std::size_t max_iter = 20000) {
  InnerResult out;
  double fw = f(w);
  Vector g = grad(w);
  double step = 1.0;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    Vector w_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      w_new = project_to_simplex(w - step * g);
      f_new = f(w_new);
      if (f_new <= fw + 1e-4 * g.dot(w_new - w)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Vector s = w_new - w;
    const Vector g_new = grad(w_new);
    const Vector y = g_new - g;
    w = std::move(w_new);
    fw = f_new;
    g = g_new;
    if (s.lpNorm<Eigen::Infinity>() < 1e-15) break;
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12) : 1.0;
    // Stationarity: the projected gradient step barely moves the point.
    const Vector probe = project_to_simplex(w - g);
    if ((probe - w).lpNorm<Eigen::Infinity>() < 1e-13) break;
  }
  out.w = std::move(w);
  return out;
}

// Damped Newton on the plane sum(w) = 1, for objectives whose minimizer is
// interior. Near small weights the entropy curvature 1/w_j makes first-order
// steps crawl; Newton does not care. The Hessian is a central difference of
// the exact gradient with steps that never leave the positive orthant.
InnerResult newton_polish(const ValueFn& f, const GradFn& grad, Vector w) {
  const Eigen::Index m = w.size();
  InnerResult out;
  w = w.cwiseMax(kEntropyFloor);
  w /= w.sum();
  double fw = f(w);
  Matrix kkt = Matrix::Zero(m + 1, m + 1);
  kkt.block(0, m, m, 1).setOnes();
  kkt.block(m, 0, 1, m).setOnes();
  Vector rhs = Vector::Zero(m + 1);
  for (out.iterations = 0; out.iterations < 100; ++out.iterations) {
    const Vector g = grad(w);
    Matrix H(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double h = std::min(1e-6, 0.5 * w[j]);
      Vector wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      H.col(j) = (grad(wp) - grad(wm)) / (2.0 * h);
    }
    kkt.topLeftCorner(m, m) = 0.5 * (H + H.transpose());
    rhs.head(m) = -g;
    const Vector d = kkt.partialPivLu().solve(rhs).head(m);
    const double decrement = -g.dot(d);
    if (!d.allFinite() || !(decrement > 1e-22)) break;

    double t = 1.0;
    for (Eigen::Index j = 0; j < m; ++j)
      if (d[j] < 0.0) t = std::min(t, -0.99 * w[j] / d[j]);
    bool accepted = false;
    Vector w_new;
    double f_new = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      w_new = w + t * d;
      f_new = f(w_new);
      if (f_new <= fw - 1e-4 * t * decrement) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    w = w_new.cwiseMax(0.0);
    w /= w.sum();
    fw = f(w);
  }
  out.w = std::move(w);
  return out;
}

struct AlResult {
  Vector w;
  std::size_t iterations = 0;
};

// Pareto rows are inequalities; `eq` holds optional equality rows eq * w = 0.
AlResult augmented_lagrangian(const Objective& obj, const ParetoRows& rows, const Matrix& eq, const Vector& start) {
  const Eigen::Index n = rows.b.size();
  Vector mu = Vector::Zero(n);
  Vector nu = Vector::Zero(eq.rows());
  double rho = 10.0;
  double prev_violation = std::numeric_limits<double>::infinity();
  AlResult out{start, 0};
  for (int outer = 0; outer < 40; ++outer) {
    auto value = [&](const Vector& w) {
      const Vector c = rows.eval(w);
      double v = obj.value(w);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (c[i] < mu[i] / rho)
          v += -mu[i] * c[i] + 0.5 * rho * c[i] * c[i];
        else
          v += -mu[i] * mu[i] / (2.0 * rho);
      }
      if (eq.rows() > 0) {
        const Vector e = eq * w;
        v += -nu.dot(e) + 0.5 * rho * e.squaredNorm();
      }
      return v;
    };
    auto grad = [&](const Vector& w) {
      const Vector c = rows.eval(w);
      Vector g = obj.gradient(w);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double m = std::max(0.0, mu[i] - rho * c[i]);
        if (m > 0.0) g -= m * rows.a.row(i).transpose();
      }
      if (eq.rows() > 0) g += eq.transpose() * (rho * (eq * w) - nu);
      return g;
    };
    InnerResult inner = projected_gradient(value, grad, out.w, obj.interior_minimizer() ? 2000 : 20000);
    out.iterations += inner.iterations;
    if (obj.interior_minimizer()) {
      InnerResult polished = newton_polish(value, grad, inner.w);
      out.iterations += polished.iterations;
      if (value(polished.w) <= value(inner.w)) inner.w = std::move(polished.w);
    }
    out.w = inner.w;

    const Vector c = rows.eval(out.w);
    const Vector e = eq * out.w;
    double violation = std::max(0.0, n > 0 ? -c.minCoeff() : 0.0);
    if (e.size() > 0) violation = std::max(violation, e.lpNorm<Eigen::Infinity>());
    const Vector mu_new = (mu - rho * c).cwiseMax(0.0);
    const Vector nu_new = nu - rho * e;
    double mu_change = n > 0 ? (mu_new - mu).lpNorm<Eigen::Infinity>() : 0.0;
    if (e.size() > 0) mu_change = std::max(mu_change, (nu_new - nu).lpNorm<Eigen::Infinity>());
    mu = mu_new;
    nu = nu_new;
    const double scale = 1.0 + std::max(mu.lpNorm<Eigen::Infinity>(), nu.size() > 0 ? nu.lpNorm<Eigen::Infinity>() : 0.0);
    if (violation <= 1e-12 && mu_change <= 1e-10 * scale) break;
    if (violation > 0.25 * prev_violation) rho = std::min(rho * 10.0, 1e12);
    prev_violation = violation;
  }
  return out;
}

// Minimizes half the squared Pareto violation over the simplex.
Vector feasibility_phase(const ParetoRows& rows, const Vector& start) {
  auto value = [&](const Vector& w) {
    const Vector v = rows.eval(w).cwiseMin(0.0);
    return 0.5 * v.squaredNorm();
  };
  auto grad = [&](const Vector& w) -> Vector {
    const Vector v = rows.eval(w).cwiseMin(0.0);
    return rows.a.transpose() * v;
  };
  return projected_gradient(value, grad, start).w;
}

Vector softmax(const Vector& z) {
  const Vector e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

}  // namespace

NormalizedInfluence normalize_influence(const InfluenceMatrix& S, const Vector& w, double eps_norm) {
  if (!(eps_norm > 0.0)) throw ConfigError("eps_norm must be > 0");
  if (static_cast<std::size_t>(w.size()) != S.domains())
    throw InputError("mixture length does not match the influence matrix");
  if (S.orientation != Orientation::Benefit)
    throw InputError("normalize_influence needs a benefit-oriented matrix");
  NormalizedInfluence out;
  out.values = (S.values * w).cwiseQuotient(row_normalizers(S, eps_norm));
  out.flagged = nonpositive_rows(S);
  return out;
}

void MixDConfig::validate(std::size_t m) const {
  for (double v : {alpha, beta, gamma})
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("alpha, beta, gamma must be >= 0");
  if (alpha <= 0.0 && beta <= 0.0 && gamma <= 0.0)
    throw ConfigError("at least one of alpha, beta, gamma must be > 0");
  if (!std::isfinite(eps_norm) || eps_norm <= 0.0) throw ConfigError("eps_norm must be > 0");
  if (!std::isfinite(pareto_slack) || pareto_slack < 0.0)
    throw ConfigError("pareto_slack must be >= 0");
  if (prior) {
    if (static_cast<std::size_t>(prior->size()) != m)
      throw ConfigError("prior mixture has the wrong length");
    MixtureWeights{*prior, {}}.validate();
  }
}

ObjectiveTerms objective_terms(const InfluenceMatrix& S, const Vector& w, const MixDConfig& cfg) {
  if (S.orientation != Orientation::Benefit)
    throw InputError("objective needs a benefit-oriented matrix");
  if (static_cast<std::size_t>(w.size()) != S.domains())
    throw InputError("mixture length does not match the influence matrix");
  return Objective(S, cfg).terms(w);
}

double objective(const InfluenceMatrix& S, const Vector& w, const MixDConfig& cfg) {
  return objective_terms(S, w, cfg).value;
}

double aggregate_score(const InfluenceMatrix& S, const Vector& w, double eps_norm,
                       bool exclude_nonpositive_rows) {
  const NormalizedInfluence p = normalize_influence(S, w, eps_norm);
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.values.size(); ++i)
    if (!(exclude_nonpositive_rows && p.flagged[static_cast<std::size_t>(i)])) total += p.values[i];
  return total;
}

MixDSolution solve_mixd(const InfluenceMatrix& S, const MixDConfig& cfg) {
  S.validate();
  if (S.orientation != Orientation::Benefit)
    throw InputError("solve_mixd needs a benefit-oriented matrix");
  const std::size_t m = S.domains();
  if (m == 0) throw InputError("influence matrix has no domains");
  cfg.validate(m);

  const Eigen::Index md = static_cast<Eigen::Index>(m);
  const Vector uniform = Vector::Constant(md, 1.0 / static_cast<double>(m));
  const Vector prior = cfg.prior.value_or(uniform);
  const Objective obj(S, cfg);
  const ParetoRows rows = make_pareto(S, prior, cfg.pareto_slack);

  MixDSolution sol;
  const auto flags = nonpositive_rows(S);
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) sol.flagged_rows.push_back(i);

  auto raw_residuals = [&](const Vector& w) -> Vector {
    return S.values * (w - prior) + Vector::Constant(S.values.rows(), cfg.pareto_slack);
  };
  auto is_feasible = [&](const Vector& w) {
    return std::abs(w.sum() - 1.0) <= 1e-9 && w.minCoeff() >= 0.0 &&
           (S.values.rows() == 0 || raw_residuals(w).minCoeff() >= -kParetoTolerance);
  };

  // Starts are deterministic and permutation-equivariant. Besides uniform and
  // the prior, softmax tilts lean toward the columns with the most benefit.
  std::vector<Vector> starts{uniform, prior};
  {
    const Vector den = row_normalizers(S, cfg.eps_norm);
    Vector score = Vector::Zero(md);
    for (Eigen::Index i = 0; i < S.values.rows(); ++i)
      if (!(cfg.exclude_nonpositive_rows && flags[static_cast<std::size_t>(i)]))
        score += S.values.row(i).transpose() / den[i];
    const double range = score.maxCoeff() - score.minCoeff();
    const Vector unit = range > 0.0 ? Vector((score.array() - score.minCoeff()) / range) : Vector::Zero(md);
    for (double temp : {1.0, 3.0, 10.0}) starts.push_back(softmax(temp * unit));
  }

  Vector first = uniform;
  if (!is_feasible(uniform)) {
    sol.used_feasibility_phase = true;
    first = feasibility_phase(rows, uniform);
  }
  starts.front() = first;

  std::optional<Vector> best;
  double best_value = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vector& w) {
    if (!is_feasible(w)) return;
    const double v = obj.value(w);
    if (v < best_value) {
      best_value = v;
      best = w;
    }
  };
  for (const Vector& s : starts) consider(s);  // feasible starting points
  const Matrix no_equalities(0, md);
  for (const Vector& s : starts) {
    AlResult r = augmented_lagrangian(obj, rows, no_equalities, s);
    sol.iterations += r.iterations;
    consider(clean_simplex_point(r.w));
  }
  // The minimizer may sit on the kink of the dispersion term, where smooth
  // steps stall. There the term vanishes, so solve the rest of the objective
  // on that set and let the true objective pick between the candidates.
  const Matrix kink = obj.kink_rows();
  if (kink.rows() > 0) {
    const Objective flat = obj.without_dispersion();
    for (const Vector& s : {starts[0], starts[1]}) {
      AlResult r = augmented_lagrangian(flat, rows, kink, s);
      sol.iterations += r.iterations;
      consider(clean_simplex_point(r.w));
    }
  }

  const std::vector<std::string> names = S.domain_names;
  if (best) {
    sol.feasible = true;
    sol.w_best = {*best, names};
  } else {
    sol.feasible = false;
    sol.w_best = {prior, names};
    sol.note = "no feasible point found; returning the prior mixture";
  }
  sol.objective = obj.terms(sol.w_best.w);
  sol.pareto_residuals = raw_residuals(sol.w_best.w);
  sol.simplex_residual = std::abs(sol.w_best.w.sum() - 1.0);
  return sol;
}

}  // namespace tikmix
