#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tikmix/serialize.hpp"

namespace fs = std::filesystem;
using tikmix::Json;

namespace {

struct Run {
  int code;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

Run cli(const std::string& args) {
  const std::string err_file = "cli_stderr.txt";
  const std::string cmd = std::string(TIKMIX_CLI_PATH) + " " + args + " 2> " + err_file + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err_file)};
}

// Small enough that every subcommand finishes in well under a second.
Json small_config() {
  Json c = Json::parse(slurp(TIKMIX_DATA_DIR "/example_config.json"));
  for (auto& d : c["scenario"]["domains"]) d["samples"] = 120;
  for (auto& t : c["scenario"]["tasks"]) t["samples"] = 60;
  c["warmup"]["steps"] = 60;
  c["influence"]["group_sample_budget"] = 64;
  c["influence"]["curvature_samples"] = 128;
  c["mixm"] = {{"candidates", 32}, {"iterations", 3}, {"samples", 32}};
  for (auto& s : c["plan"]["stages"]) s["steps"] = 40;
  c["additivity"] = {{"config_count", 8}, {"token_budget", 64}, {"curvature_samples", 128}};
  return c;
}

// Every file a command writes, except the wall-clock sidecars.
std::vector<fs::path> outputs(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "timing.json") files.push_back(e.path().filename());
  std::sort(files.begin(), files.end());
  return files;
}

void check_identical_dirs(const fs::path& a, const fs::path& b) {
  const auto fa = outputs(a);
  CHECK(fa == outputs(b));
  for (const auto& f : fa) {
    INFO("file " << f.string());
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

struct Workspace {
  fs::path root = fs::current_path() / "cli_workspace";
  std::string config;
  std::string corpus;

  Workspace() {
    fs::remove_all(root);
    fs::create_directories(root);
    config = (root / "config.json").string();
    corpus = (root / "corpus.jsonl").string();
    spit(config, tikmix::dump(small_config()));
    REQUIRE(cli("gen-corpus --config " + config + " --seed 5 --out " + corpus).code == 0);
  }
  std::string at(const std::string& name) const { return (root / name).string(); }
};

}  // namespace

TEST_CASE("gen-corpus is deterministic in the seed") {
  Workspace ws;
  const std::string again = ws.at("again.jsonl"), other = ws.at("other.jsonl");
  REQUIRE(cli("gen-corpus --config " + ws.config + " --seed 5 --out " + again).code == 0);
  REQUIRE(cli("gen-corpus --config " + ws.config + " --seed 6 --out " + other).code == 0);
  CHECK(slurp(ws.corpus) == slurp(again));
  CHECK(slurp(ws.corpus) != slurp(other));
  CHECK(fs::exists(ws.corpus + ".timing.json"));
}

TEST_CASE("every directory command is byte-identical across reruns") {
  Workspace ws;
  const std::string common = " --config " + ws.config + " --seed 9 ";
  const std::vector<std::pair<std::string, std::string>> commands{
      {"influence", "influence --corpus " + ws.corpus},
      {"pipeline", "pipeline --corpus " + ws.corpus},
      {"additivity", "additivity --corpus " + ws.corpus},
      {"solve-d", "solve-d --matrix " TIKMIX_DATA_DIR "/example_matrix.tsv"},
      {"search-m", "search-m --matrix " TIKMIX_DATA_DIR "/example_matrix.tsv"},
  };
  for (const auto& [name, args] : commands) {
    INFO("command " << name);
    const Run a = cli(args + common + "--out " + ws.at(name + "_a"));
    const Run b = cli(args + common + "--out " + ws.at(name + "_b"));
    REQUIRE_MESSAGE(a.code == 0, a.err);
    REQUIRE(b.code == 0);
    CHECK(fs::exists(ws.at(name + "_a") + "/timing.json"));
    check_identical_dirs(ws.at(name + "_a"), ws.at(name + "_b"));
  }
  CHECK(fs::exists(ws.at("influence_a") + "/benefit.tsv.meta.json"));
  CHECK(fs::exists(ws.at("pipeline_a") + "/stage_1_influence.tsv"));
  CHECK(fs::exists(ws.at("pipeline_a") + "/weights_history.tsv"));
}

TEST_CASE("the echoed config reproduces the run") {
  Workspace ws;
  REQUIRE(cli("pipeline --config " + ws.config + " --corpus " + ws.corpus + " --seed 2 --out " + ws.at("first")).code ==
          0);
  const Json summary = Json::parse(slurp(ws.at("first") + "/summary.json"));
  CHECK(summary["run"]["seed"] == 2);
  const std::string echoed = ws.at("echoed.json");
  spit(echoed, tikmix::dump(summary["run"]["config"]));
  REQUIRE(cli("pipeline --config " + echoed + " --corpus " + ws.corpus + " --seed 2 --out " + ws.at("second")).code ==
          0);
  check_identical_dirs(ws.at("first"), ws.at("second"));
}

TEST_CASE("solve-d on the shipped matrix matches the independent golden") {
  Workspace ws;
  REQUIRE(cli("solve-d --matrix " TIKMIX_DATA_DIR "/example_matrix.tsv --seed 1 --out " + ws.at("sd")).code == 0);
  const Json sol = Json::parse(slurp(ws.at("sd") + "/solution.json"))["solution"];
  const Json golden = Json::parse(slurp(TIKMIX_DATA_DIR "/example_solution_golden.json"));
  const double tol = golden["tolerance"];
  const std::vector<std::string> order = sol["weights"]["order"];
  REQUIRE(order.size() == golden["weights"].size());
  for (std::size_t j = 0; j < order.size(); ++j)
    CHECK(std::abs(sol["weights"]["weights"][order[j]].get<double>() - golden["weights"][j].get<double>()) <= tol);
  CHECK(std::abs(sol["objective"]["value"].get<double>() - golden["objective"].get<double>()) <= tol);
  CHECK(sol["feasible"] == true);

  const Run s = cli("search-m --matrix " TIKMIX_DATA_DIR "/example_matrix.tsv --start " + ws.at("sd") +
                    "/solution.json --seed 1 --out " + ws.at("sm"));
  REQUIRE_MESSAGE(s.code == 0, s.err);
  const Json search = Json::parse(slurp(ws.at("sm") + "/search.json"));
  CHECK(search["start_source"] == "file");
  CHECK(search["w_start"] == sol["weights"]);
}

TEST_CASE("an empty domain is an input error naming the domain") {
  Workspace ws;
  std::istringstream in(slurp(ws.corpus));
  std::ostringstream kept;
  for (std::string line; std::getline(in, line);)
    if (line.find("\"split\":\"domain\",\"name\":\"math\"") == std::string::npos) kept << line << '\n';
  spit(ws.at("hollow.jsonl"), kept.str());
  const Run r = cli("influence --config " + ws.config + " --corpus " + ws.at("hollow.jsonl") + " --seed 1 --out " +
                    ws.at("hollow"));
  CHECK(r.code == 2);
  CHECK(r.err.find("math") != std::string::npos);
}

TEST_CASE("bad invocations exit with the input error code") {
  Workspace ws;
  CHECK(cli("solve-d --matrix " TIKMIX_DATA_DIR "/example_matrix.tsv --out " + ws.at("x")).code == 2);
  CHECK(cli("").code == 2);
  CHECK(cli("frobnicate --seed 1 --out " + ws.at("x")).code == 2);

  spit(ws.at("typo.json"), R"({"mixd": {"gamma": 1.0, "gamam": 2.0}})");
  const Run typo = cli("solve-d --config " + ws.at("typo.json") + " --matrix " TIKMIX_DATA_DIR
                       "/example_matrix.tsv --seed 1 --out " + ws.at("x"));
  CHECK(typo.code == 2);
  CHECK(typo.err.find("mixd.gamam") != std::string::npos);

  spit(ws.at("broken.json"), "{\"mixd\": ");
  CHECK(cli("solve-d --config " + ws.at("broken.json") + " --matrix " TIKMIX_DATA_DIR
            "/example_matrix.tsv --seed 1 --out " + ws.at("x"))
            .code == 2);

  spit(ws.at("ragged.tsv"), "task\ta\tb\nt0\t1\n");
  CHECK(cli("solve-d --matrix " + ws.at("ragged.tsv") + " --seed 1 --out " + ws.at("x")).code == 2);

  CHECK(cli("solve-d --matrix " TIKMIX_DATA_DIR "/example_matrix.tsv --seed 1 --out " + ws.at("no/such/dir")).code ==
        2);
}
