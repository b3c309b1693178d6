#include <limits>
#include <sstream>

#include "doctest.h"
#include "scenarios.hpp"
#include "tikmix/error.hpp"
#include "tikmix/mixd.hpp"
#include "tikmix/rng.hpp"
#include "tikmix/search.hpp"
#include "tikmix/serialize.hpp"

using namespace tikmix;

namespace {

// Every artifact goes through text, exactly as it would through a file.
Json through_text(const Json& j) { return Json::parse(dump(j)); }

bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }
bool same(const Matrix& a, const Matrix& b) { return a.rows() == b.rows() && a.cols() == b.cols() && a == b; }

InfluenceMatrix sample_matrix() {
  InfluenceMatrix m;
  m.values.resize(2, 3);
  m.values << 0.1, -1.0 / 3.0, 2e-300, 12345.678901234567, -0.0, std::numeric_limits<double>::denorm_min();
  m.task_names = {"reasoning", "coding"};
  m.domain_names = {"web", "books", "code"};
  m.checkpoint_id = "stage-1";
  m.orientation = Orientation::Benefit;
  m.damping = 3.2e-4;
  m.diagnostics = {{true, false, 12, 1e-11}, {false, true, 1000, 0.25}};
  return m;
}

}  // namespace

TEST_CASE("doubles print in shortest round-trip form") {
  Rng rng = make_rng(1);
  for (int k = 0; k < 2000; ++k) {
    const double v = standard_normal(rng) * std::pow(10.0, static_cast<int>(uniform_index(rng, 40)) - 20);
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(format_double(std::nan("")), NumericalError);
}

TEST_CASE("influence matrix table and metadata round-trip") {
  const InfluenceMatrix m = sample_matrix();
  std::stringstream table;
  write_matrix_table(table, m, "first line\nsecond line");
  CHECK(table.str().rfind("# first line\n# second line\ntask\tweb", 0) == 0);
  InfluenceMatrix back = read_matrix_table(table);
  apply_matrix_metadata(back, through_text(matrix_metadata(m)));
  CHECK(back == m);
  CHECK(std::signbit(back.values(1, 1)));
}

TEST_CASE("malformed tables are input errors") {
  std::stringstream ragged("task\ta\tb\nt0\t1\n");
  CHECK_THROWS_AS(read_matrix_table(ragged), InputError);
  std::stringstream text("task\ta\nt0\tnope\n");
  CHECK_THROWS_AS(read_matrix_table(text), InputError);
  std::stringstream empty("# nothing\n");
  CHECK_THROWS_AS(read_matrix_table(empty), InputError);
  InfluenceMatrix m = sample_matrix();
  CHECK_THROWS_AS(apply_matrix_metadata(m, Json{{"orientation", "sideways"}}), InputError);
}

TEST_CASE("model, weights and loss spec round-trip") {
  const ModelState m = init_model({ModelKind::Mlp, 3, 5, Activation::Sigmoid}, 4, 0.7);
  CHECK(model_from_json(through_text(to_json(m))) == m);
  MixtureWeights w{Vector(3), {"z", "a", "m"}};
  w.w << 0.1, 0.6000000000000001, 0.3;
  CHECK(weights_from_json(through_text(to_json(w))) == w);
  const LossSpec spec{LossKind::CrossEntropy, 1e-3, 2.5};
  CHECK(loss_spec_from_json(through_text(to_json(spec))) == spec);
  CHECK_THROWS(model_from_json(Json{{"architecture", to_json(m.arch)}, {"params", {1.0, 2.0}}}));
}

TEST_CASE("mixd solution round-trips") {
  InfluenceMatrix S;
  S.values.resize(2, 3);
  S.values << 0.3, -0.2, 0.9, 0.1, 0.8, -0.4;
  S.task_names = {"a", "b"};
  S.domain_names = {"x", "y", "z"};
  S.orientation = Orientation::Benefit;
  const MixDSolution s = solve_mixd(S, {});
  const MixDSolution b = mixd_solution_from_json(through_text(to_json(s)));
  CHECK(b.w_best == s.w_best);
  CHECK(b.objective.value == s.objective.value);
  CHECK(b.objective.dispersion == s.objective.dispersion);
  CHECK(b.objective.total == s.objective.total);
  CHECK(b.objective.entropy == s.objective.entropy);
  CHECK(same(b.pareto_residuals, s.pareto_residuals));
  CHECK(b.simplex_residual == s.simplex_residual);
  CHECK(b.feasible == s.feasible);
  CHECK(b.used_feasibility_phase == s.used_feasibility_phase);
  CHECK(b.iterations == s.iterations);
  CHECK(b.flagged_rows == s.flagged_rows);
  CHECK(b.note == s.note);
  CHECK(dump(to_json(b)) == dump(to_json(s)));
}

TEST_CASE("surrogate artifacts and search trace round-trip") {
  InfluenceMatrix S;
  S.values.resize(2, 3);
  S.values << 0.3, -0.2, 0.9, 0.1, 0.8, -0.4;
  S.task_names = {"a", "b"};
  S.domain_names = {"x", "y", "z"};
  S.orientation = Orientation::Benefit;
  MixMOptions opts;
  opts.candidates = 48;
  opts.search.iterations = 3;
  opts.search.samples = 32;
  const MixMResult r = run_mixm(S, Vector::Constant(3, 1.0 / 3), opts, 6);

  CHECK(dataset_from_json(through_text(to_json(r.dataset))) == r.dataset);
  const SurrogateModel model = surrogate_from_json(through_text(to_json(r.surrogate)));
  CHECK(model == r.surrogate);
  for (const auto& w : r.dataset.w) CHECK(model.predict(w) == r.surrogate.predict(w));

  const SearchResult back = search_result_from_json(through_text(to_json(r.search)));
  CHECK(same(back.w_best, r.search.w_best));
  REQUIRE(back.trace.size() == r.search.trace.size());
  for (std::size_t t = 0; t < back.trace.size(); ++t) {
    CHECK(back.trace[t].alpha == r.search.trace[t].alpha);
    CHECK(back.trace[t].concentration == r.search.trace[t].concentration);
    CHECK(back.trace[t].best_predicted == r.search.trace[t].best_predicted);
    CHECK(back.trace[t].top_k_mean_predicted == r.search.trace[t].top_k_mean_predicted);
    CHECK(same(back.trace[t].w_best, r.search.trace[t].w_best));
  }
}

TEST_CASE("additivity report round-trips including undefined correlations") {
  const DomainCorpus corpus = generate_synthetic_corpus(scenarios::separated_clusters(), 0);
  ModelState m{{ModelKind::Quadratic, 2}, Vector(2)};
  m.params << 0.2, 0.1;
  AdditivityOptions opts;
  opts.config_count = 6;
  opts.token_budget = 64;
  opts.curvature_samples = 64;
  AdditivityReport r = additivity_experiment(m, {}, corpus, MixtureWeights::uniform(corpus.domain_names()), opts, 1);
  r.pearson[1].reset();
  const AdditivityReport b = additivity_from_json(through_text(to_json(r)));
  CHECK(b.task_names == r.task_names);
  CHECK(b.domain_names == r.domain_names);
  CHECK(same(b.reference, r.reference));
  CHECK(same(b.predicted, r.predicted));
  CHECK(same(b.measured, r.measured));
  REQUIRE(b.weights.size() == r.weights.size());
  for (std::size_t k = 0; k < b.weights.size(); ++k) CHECK(same(b.weights[k], r.weights[k]));
  CHECK(b.pearson == r.pearson);
  CHECK(b.outliers_removed == r.outliers_removed);
}
