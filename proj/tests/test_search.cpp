#include "doctest.h"
#include "tikmix/error.hpp"
#include "tikmix/mixd.hpp"
#include "tikmix/search.hpp"

using namespace tikmix;

namespace {

Vector interior_optimum() {
  Vector w(5);
  w << 0.35, 0.25, 0.2, 0.12, 0.08;
  return w;
}

}  // namespace

TEST_CASE("exploration schedule endpoints and monotonicity") {
  SearchConfig cfg;
  const auto a = exploration_schedule(cfg);
  REQUIRE(a.size() == cfg.iterations);
  CHECK(std::abs(a.front() - cfg.alpha_max) <= 1e-12 * cfg.alpha_max);
  CHECK(std::abs(a.back() - cfg.alpha_min) <= 1e-12 * cfg.alpha_min);
  for (std::size_t t = 1; t < a.size(); ++t) CHECK(a[t] < a[t - 1]);
  cfg.iterations = 1;
  CHECK(exploration_schedule(cfg) == std::vector<double>{cfg.alpha_max});
  cfg = {};
  CHECK(concentration_for(cfg, cfg.alpha_max) == doctest::Approx(cfg.alpha_min));
  CHECK(concentration_for(cfg, cfg.alpha_min) == doctest::Approx(cfg.alpha_max));
}

TEST_CASE("dirichlet draws have the expected mean") {
  Rng rng = make_rng(1);
  Vector w(3);
  w << 0.5, 0.3, 0.2;
  Vector mean = Vector::Zero(3);
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const Vector d = sample_dirichlet(50.0 * w, 1e-3, rng);
    CHECK(std::abs(d.sum() - 1.0) <= 1e-12);
    mean += d / n;
  }
  CHECK((mean - w).lpNorm<Eigen::Infinity>() < 0.005);
  Vector zero(3);
  zero << 1.0, 0.0, 0.0;
  const Vector d = sample_dirichlet(zero, 1e-3, rng);
  CHECK(d.allFinite());
  CHECK(d.minCoeff() >= 0.0);
}

TEST_CASE("a constant surrogate still returns a simplex point") {
  SearchConfig cfg;
  cfg.iterations = 5;
  cfg.samples = 64;
  cfg.top_k = 64;
  cfg.seed = 3;
  const SearchResult r = iterative_search([](const Vector&) { return 1.0; }, Vector::Constant(4, 0.25), cfg);
  CHECK(std::abs(r.w_best.sum() - 1.0) <= 1e-9);
  CHECK(r.w_best.minCoeff() >= 0.0);
  CHECK(r.trace.size() == 5);
  CHECK(iterative_search([](const Vector&) { return 1.0; }, Vector::Constant(4, 0.25), cfg).w_best == r.w_best);
}

TEST_CASE("search converges to a known interior optimum") {
  const Vector target = interior_optimum();
  const ScoreFn score = [&](const Vector& w) { return -(w - target).squaredNorm(); };
  int close = 0, monotone = 0;
  const int runs = 20;
  for (int s = 0; s < runs; ++s) {
    SearchConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    const SearchResult r = iterative_search(score, Vector::Constant(5, 0.2), cfg);
    close += (r.w_best - target).lpNorm<1>() <= 0.05;
    bool up = true;
    for (std::size_t t = 1; t < r.trace.size(); ++t) up = up && r.trace[t].top_k_mean_predicted >= r.trace[t - 1].top_k_mean_predicted;
    monotone += up;
  }
  CHECK(close >= runs - 1);
  CHECK(monotone >= (9 * runs) / 10);
}

TEST_CASE("nan scores abort the search") {
  SearchConfig cfg;
  cfg.samples = 8;
  cfg.top_k = 2;
  CHECK_THROWS_AS(iterative_search([](const Vector&) { return std::nan(""); }, Vector::Constant(3, 1.0 / 3), cfg),
                  NumericalError);
}

TEST_CASE("search configuration validation") {
  SearchConfig cfg;
  cfg.top_k = cfg.samples + 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.alpha_min = cfg.alpha_max * 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("mixm keeps the start when the search does not improve the true score") {
  InfluenceMatrix S;
  S.values = Matrix::Constant(2, 3, 1.0);
  S.task_names = {"a", "b"};
  S.domain_names = {"x", "y", "z"};
  S.orientation = Orientation::Benefit;
  MixMOptions opts;
  opts.candidates = 32;
  opts.search.iterations = 3;
  opts.search.samples = 32;
  const Vector w0 = Vector::Constant(3, 1.0 / 3);
  const MixMResult r = run_mixm(S, w0, opts, 4);
  CHECK(r.true_score_searched <= r.true_score_start + 1e-12);
  CHECK(r.true_score_start == doctest::Approx(2.0 / (1 + 1e-8)));
  CHECK(std::abs(r.w_best.sum() - 1.0) <= 1e-9);
  CHECK(r.dataset.size() == 32);
}

TEST_CASE("mixm never ends below its starting score") {
  InfluenceMatrix S;
  S.values.resize(3, 4);
  S.values << 0.8, 0.1, -0.2, 0.4, 0.2, 0.9, 0.3, -0.5, -0.1, 0.4, 1.2, 0.3;
  S.task_names = {"a", "b", "c"};
  S.domain_names = {"p", "q", "r", "s"};
  S.orientation = Orientation::Benefit;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector w0 = Vector::Constant(4, 0.25);
    MixMOptions opts;
    opts.search.iterations = 6;
    opts.search.samples = 128;
    const MixMResult r = run_mixm(S, w0, opts, seed);
    CHECK(aggregate_score(S, r.w_best, 1e-8) >= aggregate_score(S, w0, 1e-8));
  }
}
