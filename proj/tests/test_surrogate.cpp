#include "doctest.h"
#include "tikmix/error.hpp"
#include "tikmix/lhs.hpp"
#include "tikmix/surrogate.hpp"

using namespace tikmix;

namespace {

InfluenceMatrix fixed_matrix() {
  InfluenceMatrix S;
  S.values.resize(3, 4);
  S.values << 0.8, 0.1, -0.2, 0.4, 0.2, 0.9, 0.3, -0.5, -0.1, 0.4, 1.2, 0.3;
  S.task_names = {"a", "b", "c"};
  S.domain_names = {"p", "q", "r", "s"};
  S.orientation = Orientation::Benefit;
  return S;
}

double rmse(const SurrogateModel& m, const SurrogateDataset& d) {
  double s = 0;
  for (std::size_t k = 0; k < d.size(); ++k) s += std::pow(m.predict(d.w[k]) - d.y[k], 2);
  return std::sqrt(s / static_cast<double>(d.size()));
}

}  // namespace

TEST_CASE("constant labels give a constant predictor") {
  const auto cands = lhs_candidates(SamplingBox::around(Vector::Constant(3, 1.0 / 3)), 32, 1);
  SurrogateDataset d{cands, std::vector<double>(32, 2.5)};
  const SurrogateModel m = fit_surrogate(d);
  CHECK(m.predict(Vector::Constant(3, 1.0 / 3)) == 2.5);
  CHECK(m.predict(cands[7]) == 2.5);
  CHECK(m.training_rmse == 0.0);
}

TEST_CASE("boosting beats the mean predictor and fits held-out data") {
  const InfluenceMatrix S = fixed_matrix();
  const SamplingBox box = SamplingBox::around(Vector::Constant(4, 0.25));
  const SurrogateDataset train = label_candidates(lhs_candidates(box, 256, 2), S, 1e-8);
  const SurrogateDataset test = label_candidates(lhs_candidates(box, 64, 3), S, 1e-8);
  const SurrogateModel m = fit_surrogate(train);

  double mean = 0;
  for (double y : train.y) mean += y / static_cast<double>(train.size());
  double mean_rmse = 0;
  for (double y : train.y) mean_rmse += (y - mean) * (y - mean) / static_cast<double>(train.size());
  mean_rmse = std::sqrt(mean_rmse);
  CHECK(m.training_rmse <= mean_rmse);
  CHECK(m.training_rmse == doctest::Approx(rmse(m, train)).epsilon(1e-12));

  double test_mean = 0;
  for (double y : test.y) test_mean += y / static_cast<double>(test.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    ss_res += std::pow(m.predict(test.w[k]) - test.y[k], 2);
    ss_tot += std::pow(test.y[k] - test_mean, 2);
  }
  CHECK(1.0 - ss_res / ss_tot > 0.9);
}

TEST_CASE("fitting is deterministic and respects the tree shape") {
  const InfluenceMatrix S = fixed_matrix();
  const SurrogateDataset d = label_candidates(lhs_candidates(SamplingBox::around(Vector::Constant(4, 0.25)), 64, 4), S, 1e-8);
  BoostingParams p;
  p.trees = 20;
  p.max_depth = 2;
  const SurrogateModel a = fit_surrogate(d, p);
  CHECK(a == fit_surrogate(d, p));
  CHECK(a.trees.size() == 20);
  for (const auto& t : a.trees) CHECK(t.nodes.size() <= 7);
}

TEST_CASE("too few entries is a configuration error") {
  SurrogateDataset d;
  for (int k = 0; k < 15; ++k) {
    d.w.push_back(Vector::Constant(2, 0.5));
    d.y.push_back(k);
  }
  CHECK_THROWS_AS(fit_surrogate(d), ConfigError);
  BoostingParams bad;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
