#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tikmix/additivity.hpp"
#include "tikmix/config.hpp"
#include "tikmix/corpus.hpp"
#include "tikmix/error.hpp"
#include "tikmix/influence.hpp"
#include "tikmix/mixd.hpp"
#include "tikmix/pipeline.hpp"
#include "tikmix/rng.hpp"
#include "tikmix/search.hpp"
#include "tikmix/serialize.hpp"
#include "tikmix/train.hpp"

namespace fs = std::filesystem;
using namespace tikmix;

namespace {

enum ExitCode { kOk = 0, kInputError = 2, kNumericalError = 3, kInfeasible = 4, kInternalError = 5 };

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
};

struct Args {
  Common common;
  std::string corpus;
  std::string model;
  std::string matrix;
  std::string start;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write output file '" + path.string() + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

// Output directories are created, but only beneath an existing parent.
fs::path prepare_out_dir(const std::string& out) {
  const fs::path dir(out);
  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw InputError("output parent directory '" + parent.string() + "' does not exist");
  fs::create_directories(dir);
  return dir;
}

void check_out_file(const std::string& out) {
  const fs::path p(out);
  const fs::path parent = p.has_parent_path() ? p.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw InputError("output parent directory '" + parent.string() + "' does not exist");
}

ExperimentConfig load(const Common& c) {
  if (c.config_path.empty()) return ExperimentConfig{};
  return parse_config(read_json_file(c.config_path));
}

Json run_block(const std::string& command, const ExperimentConfig& cfg, std::uint64_t seed) {
  return {{"command", command}, {"seed", seed}, {"config", to_json(cfg)}};
}

DomainCorpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus file '" + path + "'");
  DomainCorpus corpus = read_corpus(in);
  corpus.validate();
  return corpus;
}

Vector vector_or_uniform(const std::optional<Vector>& v, std::size_t m, const std::string& what) {
  if (!v) return Vector::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
  if (static_cast<std::size_t>(v->size()) != m)
    throw ConfigError(what + " has " + std::to_string(v->size()) + " entries but there are " +
                      std::to_string(m) + " domains");
  return *v;
}

MixtureWeights named(const Vector& w, const std::vector<std::string>& names) {
  MixtureWeights mw{w, names};
  mw.validate();
  return mw;
}

// Fills in the input dimension from the corpus so the echoed config is complete.
void resolve_model(ExperimentConfig& cfg, const DomainCorpus& corpus) {
  if (cfg.model.arch.input_dim == 0) cfg.model.arch.input_dim = corpus.input_dim();
  if (cfg.model.arch.input_dim != corpus.input_dim())
    throw ConfigError("model.input_dim is " + std::to_string(cfg.model.arch.input_dim) + " but the corpus has " +
                      std::to_string(corpus.input_dim()) + " features");
}

// Accepts a bare model or a file written by this tool ({"run", "model"}).
ModelState load_model_file(const std::string& path) {
  const Json j = read_json_file(path);
  ModelState model = model_from_json(j.contains("model") ? j.at("model") : j);
  model.validate();
  return model;
}

// Explicit model file, or a fresh model trained for the configured warm-up.
ModelState checkpoint_model(const ExperimentConfig& cfg, const DomainCorpus& corpus, const std::string& model_path,
                            std::uint64_t seed) {
  if (!model_path.empty()) {
    ModelState model = load_model_file(model_path);
    if (model.arch.input_dim != corpus.input_dim()) throw InputError("model input dimension does not match the corpus");
    return model;
  }
  const ModelState init = init_model(cfg.model.arch, derive_seed(seed, "init"), cfg.model.init_scale);
  const Vector w = vector_or_uniform(cfg.warmup.weights, corpus.domains.size(), "warmup.weights");
  return train(init, cfg.model.loss, corpus, named(w, corpus.domain_names()), cfg.warmup.steps,
               derive_seed(seed, "warmup"), cfg.train);
}

InfluenceMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open matrix file '" + path + "'");
  InfluenceMatrix m = read_matrix_table(in);
  const std::string meta = path + ".meta.json";
  if (fs::exists(meta)) apply_matrix_metadata(m, read_json_file(meta));
  m.validate();
  return m;
}

void write_matrix(const fs::path& path, const InfluenceMatrix& m, const Json& run) {
  std::ostringstream table;
  write_matrix_table(table, m, "run: " + run.dump());
  write_file(path, table.str());
  Json meta = matrix_metadata(m);
  meta["run"] = run;
  write_file(path.string() + ".meta.json", dump(meta));
}

std::string timing(double seconds) { return dump(Json{{"wall_clock_seconds", seconds}}); }

// Subcommands return the path of their timing sidecar.

fs::path cmd_gen_corpus(const Args& a) {
  const ExperimentConfig cfg = load(a.common);
  cfg.scenario.validate();
  check_out_file(a.common.out);
  const DomainCorpus corpus = generate_synthetic_corpus(cfg.scenario, derive_seed(a.common.seed, "corpus"));
  std::ostringstream os;
  write_corpus(os, corpus, run_block("gen-corpus", cfg, a.common.seed).dump());
  write_file(a.common.out, os.str());
  return a.common.out + ".timing.json";
}

fs::path cmd_influence(const Args& a) {
  ExperimentConfig cfg = load(a.common);
  const DomainCorpus corpus = load_corpus(a.corpus);
  resolve_model(cfg, corpus);
  const fs::path dir = prepare_out_dir(a.common.out);
  const ModelState model = checkpoint_model(cfg, corpus, a.model, a.common.seed);
  const InfluenceMatrix raw =
      build_influence_matrix(model, cfg.model.loss, corpus, cfg.influence, derive_seed(a.common.seed, "influence"));
  const Json run = run_block("influence", cfg, a.common.seed);
  write_matrix(dir / "influence.tsv", raw, run);
  write_matrix(dir / "benefit.tsv", to_benefit(raw), run);
  Json mj{{"run", run}, {"model", to_json(model)}};
  write_file(dir / "model.json", dump(mj));
  return dir / "timing.json";
}

fs::path cmd_solve_d(const Args& a) {
  const ExperimentConfig cfg = load(a.common);
  const InfluenceMatrix S = load_matrix(a.matrix);
  const fs::path dir = prepare_out_dir(a.common.out);
  const MixDSolution sol = solve_mixd(S, cfg.mixd);
  Json j{{"run", run_block("solve-d", cfg, a.common.seed)}, {"solution", to_json(sol)}};
  write_file(dir / "solution.json", dump(j));
  return dir / "timing.json";
}

fs::path cmd_search_m(const Args& a) {
  const ExperimentConfig cfg = load(a.common);
  const InfluenceMatrix S = load_matrix(a.matrix);
  const fs::path dir = prepare_out_dir(a.common.out);
  const std::size_t m = S.domain_names.size();
  Vector w0;
  std::string start_note;
  if (!a.start.empty()) {
    const Json sj = read_json_file(a.start);
    w0 = sj.contains("solution") ? weights_from_json(sj.at("solution").at("weights")).w : weights_from_json(sj).w;
    if (static_cast<std::size_t>(w0.size()) != m) throw InputError("start weights do not match the matrix");
    start_note = "file";
  } else if (cfg.mixm_start) {
    w0 = vector_or_uniform(cfg.mixm_start, m, "mixm.start");
    start_note = "config";
  } else {
    MixDConfig dcfg = cfg.mixd;
    const MixDSolution sol = solve_mixd(S, dcfg);
    if (!sol.feasible) throw InfeasibleError("TiKMiX-D found no feasible starting point: " + sol.note);
    w0 = sol.w_best.w;
    start_note = "tikmix-d";
  }
  const MixMResult res = run_mixm(S, w0, cfg.mixm, derive_seed(a.common.seed, "mixm"));
  const Json run = run_block("search-m", cfg, a.common.seed);
  Json j{{"run", run},
         {"start_source", start_note},
         {"w_start", to_json(named(w0, S.domain_names))},
         {"w_best", to_json(named(res.w_best, S.domain_names))},
         {"w_searched", vector_to_json(res.w_searched)},
         {"true_score_start", res.true_score_start},
         {"true_score_searched", res.true_score_searched},
         {"fell_back_to_start", res.fell_back_to_start},
         {"search", to_json(res.search)}};
  write_file(dir / "search.json", dump(j));
  write_file(dir / "dataset.json", dump(Json{{"run", run}, {"dataset", to_json(res.dataset)}}));
  write_file(dir / "surrogate.json", dump(Json{{"run", run}, {"surrogate", to_json(res.surrogate)}}));
  return dir / "timing.json";
}

fs::path cmd_pipeline(const Args& a) {
  ExperimentConfig cfg = load(a.common);
  const DomainCorpus corpus = load_corpus(a.corpus);
  resolve_model(cfg, corpus);
  const fs::path dir = prepare_out_dir(a.common.out);
  const auto names = corpus.domain_names();

  StagePlan plan;
  for (const auto& s : cfg.plan.stages) plan.stages.push_back(s);
  plan.initial_weights = named(vector_or_uniform(cfg.plan.initial_weights, names.size(), "plan.initial_weights"), names);
  plan.seed = derive_seed(a.common.seed, "pipeline");
  plan.train = cfg.train;
  plan.influence = cfg.influence;
  plan.mixd = cfg.mixd;
  plan.mixm = cfg.mixm;
  plan.checkpoint_offset = cfg.plan.checkpoint_offset;
  plan.divergence_threshold = cfg.plan.divergence_threshold;

  const ModelState init = a.model.empty()
                              ? init_model(cfg.model.arch, derive_seed(a.common.seed, "init"), cfg.model.init_scale)
                              : load_model_file(a.model);
  const RunRecord rec = run_pipeline(plan, init, cfg.model.loss, corpus);
  const Json run = run_block("pipeline", cfg, a.common.seed);

  std::ostringstream history;
  history << "# run: " << run.dump() << "\nstage";
  for (const auto& n : names) history << '\t' << n;
  history << "\tmean_validation_loss\n";
  Json stages = Json::array();
  for (const auto& st : rec.stages) {
    const std::string tag = "stage_" + std::to_string(st.index);
    Json sj = stage_summary_json(st);
    if (st.influence) {
      write_matrix(dir / (tag + "_influence.tsv"), *st.influence, run);
      sj["influence_file"] = tag + "_influence.tsv";
    }
    if (st.mixd) sj["mixd"] = to_json(*st.mixd);
    if (st.mixm) {
      sj["mixm"] = {{"w_best", vector_to_json(st.mixm->w_best)},
                    {"w_searched", vector_to_json(st.mixm->w_searched)},
                    {"true_score_start", st.mixm->true_score_start},
                    {"true_score_searched", st.mixm->true_score_searched},
                    {"fell_back_to_start", st.mixm->fell_back_to_start},
                    {"search", to_json(st.mixm->search)}};
    }
    write_file(dir / (tag + ".json"), dump(Json{{"run", run}, {"stage", sj}}));
    stages.push_back(tag + ".json");
    history << st.index;
    for (Eigen::Index j = 0; j < st.weights.w.size(); ++j) history << '\t' << format_double(st.weights.w[j]);
    history << '\t' << format_double(st.val_after.mean()) << '\n';
  }
  write_file(dir / "weights_history.tsv", history.str());
  write_file(dir / "model.json", dump(Json{{"run", run}, {"model", to_json(rec.final_model)}}));
  write_file(dir / "summary.json", dump(Json{{"run", run},
                                              {"stage_files", stages},
                                              {"final_mean_validation_loss", rec.final_mean_validation_loss()}}));
  return dir / "timing.json";
}

fs::path cmd_additivity(const Args& a) {
  ExperimentConfig cfg = load(a.common);
  const DomainCorpus corpus = load_corpus(a.corpus);
  resolve_model(cfg, corpus);
  const fs::path dir = prepare_out_dir(a.common.out);
  const auto names = corpus.domain_names();
  const ModelState model = checkpoint_model(cfg, corpus, a.model, a.common.seed);

  Vector base;
  if (cfg.additivity.base_weights) {
    base = vector_or_uniform(cfg.additivity.base_weights, names.size(), "additivity.base_weights");
  } else {
    const InfluenceMatrix raw = build_influence_matrix(model, cfg.model.loss, corpus, cfg.influence,
                                                       derive_seed(a.common.seed, "influence"));
    const MixDSolution sol = solve_mixd(to_benefit(raw), cfg.mixd);
    if (!sol.feasible) throw InfeasibleError("TiKMiX-D found no feasible base mixture: " + sol.note);
    base = sol.w_best.w;
  }
  const AdditivityReport rep = additivity_experiment(model, cfg.model.loss, corpus, named(base, names),
                                                     cfg.additivity.options, derive_seed(a.common.seed, "additivity"));
  write_file(dir / "additivity.json",
             dump(Json{{"run", run_block("additivity", cfg, a.common.seed)}, {"report", to_json(rep)}}));
  return dir / "timing.json";
}

int report(int code, const std::string& kind, const std::string& msg) {
  std::cerr << "tikmix: " << kind << ": " << msg << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence-driven data-mixture optimization on toy models"};
  app.require_subcommand(1);
  Args args;

  auto add_common = [&](CLI::App* sub, const std::string& out_help) {
    sub->add_option("--config", args.common.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", args.common.seed, "Root seed for every random choice")->required();
    sub->add_option("--out", args.common.out, out_help)->required();
  };

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus from the scenario");
  add_common(gen, "Corpus file to write");

  auto* infl = app.add_subcommand("influence", "Compute the task x domain influence matrix");
  add_common(infl, "Output directory");
  infl->add_option("--corpus", args.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  infl->add_option("--model", args.model, "Checkpoint model (default: warm-up from the config)")
      ->check(CLI::ExistingFile);

  auto* solve = app.add_subcommand("solve-d", "Solve the direct mixture optimization");
  add_common(solve, "Output directory");
  solve->add_option("--matrix", args.matrix, "Benefit matrix table")->required()->check(CLI::ExistingFile);

  auto* search = app.add_subcommand("search-m", "Surrogate-model mixture search");
  add_common(search, "Output directory");
  search->add_option("--matrix", args.matrix, "Benefit matrix table")->required()->check(CLI::ExistingFile);
  search->add_option("--start", args.start, "Starting weights or solve-d solution file")->check(CLI::ExistingFile);

  auto* pipe = app.add_subcommand("pipeline", "Multi-stage training with re-mixing at stage boundaries");
  add_common(pipe, "Output directory");
  pipe->add_option("--corpus", args.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  pipe->add_option("--model", args.model, "Initial model (default: fresh init)")->check(CLI::ExistingFile);

  auto* add = app.add_subcommand("additivity", "Check additivity of group influence under perturbed mixtures");
  add_common(add, "Output directory");
  add->add_option("--corpus", args.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  add->add_option("--model", args.model, "Checkpoint model (default: warm-up from the config)")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    fs::path timing_path;
    if (*gen) timing_path = cmd_gen_corpus(args);
    else if (*infl) timing_path = cmd_influence(args);
    else if (*solve) timing_path = cmd_solve_d(args);
    else if (*search) timing_path = cmd_search_m(args);
    else if (*pipe) timing_path = cmd_pipeline(args);
    else timing_path = cmd_additivity(args);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    write_file(timing_path, timing(dt.count()));
    return kOk;
  } catch (const InputError& e) {
    return report(kInputError, "input error", e.what());
  } catch (const NumericalError& e) {
    return report(kNumericalError, "numerical error", e.what());
  } catch (const InfeasibleError& e) {
    return report(kInfeasible, "infeasible", e.what());
  } catch (const Json::exception& e) {
    return report(kInputError, "input error", e.what());
  } catch (const std::exception& e) {
    return report(kInternalError, "internal error", e.what());
  }
}
