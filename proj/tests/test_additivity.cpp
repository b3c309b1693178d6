#include "doctest.h"
#include "oracles.hpp"
#include "scenarios.hpp"
#include "tikmix/additivity.hpp"
#include "tikmix/error.hpp"

using namespace tikmix;

TEST_CASE("largest-remainder apportionment") {
  Vector w(3);
  w << 0.5, 0.3, 0.2;
  CHECK(apportion(w, 10) == std::vector<std::size_t>{5, 3, 2});
  w << 0.34, 0.33, 0.33;
  CHECK(apportion(w, 10) == std::vector<std::size_t>{4, 3, 3});
  w << 0.999, 0.0005, 0.0005;
  const auto c = apportion(w, 7);
  CHECK(c[0] + c[1] + c[2] == 7);
}

TEST_CASE("pearson agrees with the oracle and flags zero variance") {
  Vector a(5), b(5);
  a << 1, 2, 3, 4, 6;
  b << 2, 1, 4, 3, 7;
  CHECK(*pearson(a, b) == doctest::Approx(oracle::pearson({1, 2, 3, 4, 6}, {2, 1, 4, 3, 7})));
  CHECK(!pearson(a, Vector::Constant(5, 1.0)).has_value());
}

TEST_CASE("quadratic influence is additive over mixed groups") {
  const DomainCorpus corpus = generate_synthetic_corpus(scenarios::separated_clusters(), 0);
  ModelState m{{ModelKind::Quadratic, 2}, Vector(2)};
  m.params << 0.3, -0.1;
  AdditivityOptions opts;
  opts.config_count = 64;
  opts.curvature_samples = 512;
  const AdditivityReport r = additivity_experiment(m, {}, corpus, MixtureWeights::uniform(corpus.domain_names()), opts, 1);
  CHECK(r.weights.size() == 64);
  CHECK(r.predicted.rows() == r.measured.rows());
  for (const auto& p : r.pearson) {
    REQUIRE(p.has_value());
    CHECK(*p >= 0.9999);
  }
  for (const auto& w : r.weights) CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
}

TEST_CASE("identical configurations leave the correlation undefined") {
  const DomainCorpus corpus = generate_synthetic_corpus(scenarios::separated_clusters(), 0);
  const ModelState m{{ModelKind::Quadratic, 2}, Vector::Zero(2)};
  AdditivityOptions opts;
  opts.config_count = 2;
  opts.scale_low = opts.scale_high = 1.0;
  opts.curvature_samples = 64;
  opts.token_budget = 64;
  const AdditivityReport r = additivity_experiment(m, {}, corpus, MixtureWeights::uniform(corpus.domain_names()), opts, 2);
  for (const auto& p : r.pearson) CHECK(!p.has_value());
}

TEST_CASE("degenerate configurations are dropped and too few survivors is an error") {
  const DomainCorpus corpus = generate_synthetic_corpus(scenarios::separated_clusters(), 0);
  const ModelState m{{ModelKind::Quadratic, 2}, Vector::Zero(2)};
  AdditivityOptions opts;
  opts.config_count = 8;
  opts.token_budget = 2;
  opts.curvature_samples = 64;
  CHECK_THROWS_AS(additivity_experiment(m, {}, corpus, MixtureWeights::uniform(corpus.domain_names()), opts, 3),
                  StatisticsError);
  opts.token_budget = 3;
  opts.scale_low = opts.scale_high = 1.0;
  const AdditivityReport r = additivity_experiment(m, {}, corpus, MixtureWeights::uniform(corpus.domain_names()), opts, 3);
  CHECK(r.outliers_removed == 0);
  CHECK(r.weights.size() == 8);
}
