#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "tikmix/config.hpp"
#include "tikmix/error.hpp"

using namespace tikmix;

namespace {

std::string config_error(const Json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("the shipped example config parses") {
  const ExperimentConfig c = load_config(TIKMIX_DATA_DIR "/example_config.json");
  CHECK(c.scenario.domains.size() == 3);
  CHECK(c.scenario.tasks.size() == 2);
  CHECK(c.model.arch.kind == ModelKind::Mlp);
  CHECK(c.train.batch_size == 16);
  CHECK(c.plan.stages.size() == 3);
  CHECK(c.plan.stages[2].strategy == MixStrategy::TikmixM);
}

TEST_CASE("to_json and parse_config are inverse") {
  const ExperimentConfig defaults{};
  CHECK(parse_config(Json::parse(dump(to_json(defaults)))) == defaults);

  ExperimentConfig c = load_config(TIKMIX_DATA_DIR "/example_config.json");
  c.warmup.weights = Vector::Constant(3, 1.0 / 3);
  c.mixm_start = Vector::Constant(3, 1.0 / 3);
  c.plan.checkpoint_offset = 7;
  c.additivity.base_weights = Vector::Constant(3, 1.0 / 3);
  c.mixd.gamma = 0.125;
  const Json once = to_json(c);
  const ExperimentConfig back = parse_config(Json::parse(dump(once)));
  CHECK(back == c);
  CHECK(dump(to_json(back)) == dump(once));
}

TEST_CASE("unknown keys are rejected and named") {
  const std::string msg = config_error(Json{{"mixd", {{"alpha", 1.0}, {"alhpa", 2.0}}}, {"bogus", 1}});
  CHECK(msg.find("mixd.alhpa") != std::string::npos);
  CHECK(msg.find("bogus") != std::string::npos);
  const std::string nested = config_error(
      Json{{"plan", {{"stages", Json::array({Json{{"steps", 5}, {"strategy", "static"}, {"colour", 1}}})}}}});
  CHECK(nested.find("plan.stages[0].colour") != std::string::npos);
}

TEST_CASE("wrong types and bad values are config errors") {
  CHECK(config_error(Json{{"train", {{"batch_size", "many"}}}}).find("train.batch_size") != std::string::npos);
  CHECK_FALSE(config_error(Json{{"model", 3}}).empty());
  CHECK_FALSE(config_error(Json{{"influence", {{"damping_mode", "sometimes"}}}}).empty());
  CHECK_FALSE(config_error(Json{{"plan", {{"stages", Json::array({Json{{"steps", 1}, {"strategy", "greedy"}}})}}}})
                  .empty());
  CHECK_FALSE(config_error(Json::array()).empty());
}

TEST_CASE("missing or malformed files are config errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
  const auto path = std::filesystem::temp_directory_path() / "tikmix_malformed_config.json";
  std::ofstream(path) << "{\"train\": {\"batch_size\": 4,";
  CHECK_THROWS_AS(load_config(path.string()), ConfigError);
  std::filesystem::remove(path);
}
