#include "tikmix/config.hpp"

#include <fstream>
#include <set>

#include "tikmix/error.hpp"

namespace tikmix {

namespace {

// Reads keys from one JSON object and remembers which ones were consumed, so
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const Json& j, std::string path, std::vector<std::string>& unknown)
      : j_(j), path_(std::move(path)), unknown_(unknown) {
    if (!j_.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  ~Section() {
    for (const auto& [key, _] : j_.items())
      if (!seen_.contains(key)) unknown_.push_back(path_.empty() ? key : path_ + "." + key);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError("config key '" + where(key) + "' has the wrong type");
    }
  }

  template <class T>
  void read(const std::string& key, T& into) {
    into = get<T>(key, into);
  }

  void read_vector(const std::string& key, std::optional<Vector>& into) {
    if (!has(key)) return;
    if (j_.at(key).is_null()) {
      into.reset();
      return;
    }
    into = vector_from_json(j_.at(key));
  }

  const Json& child(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const Json& j_;
  std::string path_;
  std::vector<std::string>& unknown_;
  std::set<std::string> seen_;
};

Json optional_vector(const std::optional<Vector>& v) { return v ? vector_to_json(*v) : Json(nullptr); }

void parse_ihvp(Section& s, IhvpConfig& cfg) {
  s.read("damping", cfg.damping);
  if (s.has("damping_mode")) {
    const auto mode = s.get<std::string>("damping_mode", "");
    if (mode == "absolute")
      cfg.damping_mode = DampingMode::Absolute;
    else if (mode == "relative")
      cfg.damping_mode = DampingMode::RelativeToMeanDiagonal;
    else
      throw ConfigError("config key '" + s.where("damping_mode") + "' must be absolute|relative");
  }
  s.read("max_iterations", cfg.max_iterations);
  s.read("residual_tolerance", cfg.residual_tolerance);
  s.read("probe_count", cfg.probe_count);
}

Json ihvp_json(const IhvpConfig& c) {
  return {{"damping", c.damping},
          {"damping_mode", c.damping_mode == DampingMode::Absolute ? "absolute" : "relative"},
          {"max_iterations", c.max_iterations},
          {"residual_tolerance", c.residual_tolerance},
          {"probe_count", c.probe_count}};
}

void parse_scenario(const Json& j, Scenario& sc, std::vector<std::string>& unknown) {
  Section s(j, "scenario", unknown);
  s.read("classification", sc.classification);
  if (s.has("domains")) {
    sc.domains.clear();
    std::size_t k = 0;
    for (const auto& d : s.child("domains")) {
      Section ds(d, "scenario.domains[" + std::to_string(k++) + "]", unknown);
      DomainDistribution dist;
      ds.read("name", dist.name);
      ds.read("samples", dist.samples);
      ds.read("mean", dist.mean);
      ds.read("stddev", dist.stddev);
      ds.read("target_weights", dist.target_weights);
      ds.read("target_bias", dist.target_bias);
      ds.read("noise_stddev", dist.noise_stddev);
      if (dist.stddev.empty()) dist.stddev.assign(dist.mean.size(), 1.0);
      if (dist.target_weights.empty()) dist.target_weights.assign(dist.mean.size(), 0.0);
      sc.domains.push_back(std::move(dist));
    }
  }
  if (s.has("tasks")) {
    sc.tasks.clear();
    std::size_t k = 0;
    for (const auto& t : s.child("tasks")) {
      Section ts(t, "scenario.tasks[" + std::to_string(k++) + "]", unknown);
      TaskMixture task;
      ts.read("name", task.name);
      ts.read("samples", task.samples);
      ts.read("mixture", task.mixture);
      sc.tasks.push_back(std::move(task));
    }
  }
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  std::vector<std::string> unknown;
  {
    Section root(j, "", unknown);
    if (root.has("scenario")) parse_scenario(root.child("scenario"), c.scenario, unknown);
    if (root.has("model")) {
      Section s(root.child("model"), "model", unknown);
      c.model.arch.kind = parse_model_kind(s.get<std::string>("kind", std::string(to_string(c.model.arch.kind))));
      c.model.arch.input_dim = s.get<std::size_t>("input_dim", 0);
      s.read("hidden", c.model.arch.hidden);
      c.model.arch.activation =
          parse_activation(s.get<std::string>("activation", std::string(to_string(c.model.arch.activation))));
      c.model.loss.loss = parse_loss_kind(s.get<std::string>("loss", std::string(to_string(c.model.loss.loss))));
      s.read("l2", c.model.loss.l2);
      s.read("loss_scale", c.model.loss.scale);
      s.read("init_scale", c.model.init_scale);
    }
    if (root.has("train")) {
      Section s(root.child("train"), "train", unknown);
      s.read("batch_size", c.train.batch_size);
      s.read("learning_rate", c.train.learning_rate);
    }
    if (root.has("warmup")) {
      Section s(root.child("warmup"), "warmup", unknown);
      s.read("steps", c.warmup.steps);
      s.read_vector("weights", c.warmup.weights);
    }
    if (root.has("influence")) {
      Section s(root.child("influence"), "influence", unknown);
      s.read("group_sample_budget", c.influence.group_sample_budget);
      s.read("curvature_samples", c.influence.curvature_samples);
      parse_ihvp(s, c.influence.ihvp);
    }
    if (root.has("mixd")) {
      Section s(root.child("mixd"), "mixd", unknown);
      s.read("alpha", c.mixd.alpha);
      s.read("beta", c.mixd.beta);
      s.read("gamma", c.mixd.gamma);
      s.read("eps_norm", c.mixd.eps_norm);
      s.read_vector("prior", c.mixd.prior);
      s.read("pareto_slack", c.mixd.pareto_slack);
      s.read("exclude_nonpositive_rows", c.mixd.exclude_nonpositive_rows);
    }
    if (root.has("mixm")) {
      Section s(root.child("mixm"), "mixm", unknown);
      auto& m = c.mixm;
      s.read("candidates", m.candidates);
      s.read("scale_low", m.scale_low);
      s.read("scale_high", m.scale_high);
      s.read("eps_norm", m.eps_norm);
      s.read("exclude_nonpositive_rows", m.exclude_nonpositive_rows);
      if (s.has("metric") && s.get<std::string>("metric", "") != "sum-normalized-influence")
        throw ConfigError("mixm.metric must be 'sum-normalized-influence'");
      s.read("trees", m.boosting.trees);
      s.read("max_depth", m.boosting.max_depth);
      s.read("learning_rate", m.boosting.learning_rate);
      s.read("min_samples_leaf", m.boosting.min_samples_leaf);
      s.read("iterations", m.search.iterations);
      s.read("samples", m.search.samples);
      s.read("alpha_min", m.search.alpha_min);
      s.read("alpha_max", m.search.alpha_max);
      s.read("top_k", m.search.top_k);
      s.read("concentration_floor", m.search.concentration_floor);
      s.read_vector("start", c.mixm_start);
    }
    if (root.has("plan")) {
      Section s(root.child("plan"), "plan", unknown);
      if (s.has("stages")) {
        c.plan.stages.clear();
        std::size_t k = 0;
        for (const auto& st : s.child("stages")) {
          Section ss(st, "plan.stages[" + std::to_string(k++) + "]", unknown);
          StageSpec spec;
          ss.read("steps", spec.steps);
          spec.strategy = parse_mix_strategy(ss.get<std::string>("strategy", "static"));
          c.plan.stages.push_back(spec);
        }
      }
      s.read_vector("initial_weights", c.plan.initial_weights);
      s.read("checkpoint_offset", c.plan.checkpoint_offset);
      s.read("divergence_threshold", c.plan.divergence_threshold);
    }
    if (root.has("additivity")) {
      Section s(root.child("additivity"), "additivity", unknown);
      auto& a = c.additivity.options;
      s.read("config_count", a.config_count);
      s.read("scale_low", a.scale_low);
      s.read("scale_high", a.scale_high);
      s.read("token_budget", a.token_budget);
      s.read("curvature_samples", a.curvature_samples);
      parse_ihvp(s, a.ihvp);
      s.read_vector("base_weights", c.additivity.base_weights);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  c.model.loss.validate();
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json domains = Json::array();
  for (const auto& d : c.scenario.domains)
    domains.push_back({{"name", d.name},
                       {"samples", d.samples},
                       {"mean", d.mean},
                       {"stddev", d.stddev},
                       {"target_weights", d.target_weights},
                       {"target_bias", d.target_bias},
                       {"noise_stddev", d.noise_stddev}});
  Json tasks = Json::array();
  for (const auto& t : c.scenario.tasks)
    tasks.push_back({{"name", t.name}, {"samples", t.samples}, {"mixture", t.mixture}});
  Json stages = Json::array();
  for (const auto& s : c.plan.stages) stages.push_back({{"steps", s.steps}, {"strategy", to_string(s.strategy)}});

  Json influence = ihvp_json(c.influence.ihvp);
  influence["group_sample_budget"] = c.influence.group_sample_budget;
  influence["curvature_samples"] = c.influence.curvature_samples;
  Json additivity = ihvp_json(c.additivity.options.ihvp);
  additivity["config_count"] = c.additivity.options.config_count;
  additivity["scale_low"] = c.additivity.options.scale_low;
  additivity["scale_high"] = c.additivity.options.scale_high;
  additivity["token_budget"] = c.additivity.options.token_budget;
  additivity["curvature_samples"] = c.additivity.options.curvature_samples;
  additivity["base_weights"] = optional_vector(c.additivity.base_weights);

  const auto& m = c.mixm;
  return {
      {"scenario", {{"classification", c.scenario.classification}, {"domains", domains}, {"tasks", tasks}}},
      {"model",
       {{"kind", to_string(c.model.arch.kind)},
        {"input_dim", c.model.arch.input_dim},
        {"hidden", c.model.arch.hidden},
        {"activation", to_string(c.model.arch.activation)},
        {"loss", to_string(c.model.loss.loss)},
        {"l2", c.model.loss.l2},
        {"loss_scale", c.model.loss.scale},
        {"init_scale", c.model.init_scale}}},
      {"train", {{"batch_size", c.train.batch_size}, {"learning_rate", c.train.learning_rate}}},
      {"warmup", {{"steps", c.warmup.steps}, {"weights", optional_vector(c.warmup.weights)}}},
      {"influence", influence},
      {"mixd",
       {{"alpha", c.mixd.alpha},
        {"beta", c.mixd.beta},
        {"gamma", c.mixd.gamma},
        {"eps_norm", c.mixd.eps_norm},
        {"prior", optional_vector(c.mixd.prior)},
        {"pareto_slack", c.mixd.pareto_slack},
        {"exclude_nonpositive_rows", c.mixd.exclude_nonpositive_rows}}},
      {"mixm",
       {{"candidates", m.candidates},
        {"scale_low", m.scale_low},
        {"scale_high", m.scale_high},
        {"eps_norm", m.eps_norm},
        {"exclude_nonpositive_rows", m.exclude_nonpositive_rows},
        {"metric", "sum-normalized-influence"},
        {"trees", m.boosting.trees},
        {"max_depth", m.boosting.max_depth},
        {"learning_rate", m.boosting.learning_rate},
        {"min_samples_leaf", m.boosting.min_samples_leaf},
        {"iterations", m.search.iterations},
        {"samples", m.search.samples},
        {"alpha_min", m.search.alpha_min},
        {"alpha_max", m.search.alpha_max},
        {"top_k", m.search.top_k},
        {"concentration_floor", m.search.concentration_floor},
        {"start", optional_vector(c.mixm_start)}}},
      {"plan",
       {{"stages", stages},
        {"initial_weights", optional_vector(c.plan.initial_weights)},
        {"checkpoint_offset", c.plan.checkpoint_offset},
        {"divergence_threshold", c.plan.divergence_threshold}}},
      {"additivity", additivity}};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

}  // namespace tikmix
