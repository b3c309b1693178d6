#include "doctest.h"
#include "oracles.hpp"
#include "tikmix/error.hpp"
#include "tikmix/mixture.hpp"
#include "tikmix/rng.hpp"

using namespace tikmix;

TEST_CASE("projection matches the bisection oracle") {
  Rng rng = make_rng(1);
  for (int draw = 0; draw < 200; ++draw) {
    const Eigen::Index m = 2 + draw % 7;
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = 2.0 * standard_normal(rng);
    const Vector p = project_to_simplex(v);
    CHECK((p - oracle::simplex_projection(v)).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK(p.minCoeff() >= 0.0);
  }
}

TEST_CASE("points already on the simplex are fixed by projection") {
  Vector w(3);
  w << 0.2, 0.5, 0.3;
  CHECK((project_to_simplex(w) - w).norm() < 1e-15);
}

TEST_CASE("entropy conventions") {
  Vector w(3);
  w << 1.0, 0.0, 0.0;
  CHECK(entropy(w) == 0.0);
  CHECK(entropy(Vector::Constant(4, 0.25)) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("mixture weights validation") {
  MixtureWeights w = MixtureWeights::uniform({"a", "b"});
  CHECK_NOTHROW(w.validate());
  w.w[0] = 0.7;
  CHECK_THROWS_AS(w.validate(), InputError);
  w.w << 1.2, -0.2;
  CHECK_THROWS_AS(w.validate(), InputError);
  Vector tiny(2);
  tiny << -1e-15, 1.0 + 1e-15;
  const Vector c = clean_simplex_point(tiny);
  CHECK(c.minCoeff() >= 0.0);
  CHECK(std::abs(c.sum() - 1.0) <= 1e-15);
}
