#include "tikmix/corpus.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "tikmix/error.hpp"
#include "tikmix/rng.hpp"
#include "tikmix/serialize.hpp"

namespace tikmix {

using nlohmann::json;

std::vector<std::string> DomainCorpus::domain_names() const {
  std::vector<std::string> out;
  for (const auto& d : domains) out.push_back(d.name);
  return out;
}

std::vector<std::string> DomainCorpus::task_names() const {
  std::vector<std::string> out;
  for (const auto& t : tasks) out.push_back(t.name);
  return out;
}

std::size_t DomainCorpus::input_dim() const {
  for (const auto& d : domains)
    if (!d.samples.empty()) return d.samples.front().features.size();
  for (const auto& t : tasks)
    if (!t.samples.empty()) return t.samples.front().features.size();
  return 0;
}

std::uint64_t content_hash(const Sample& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = splitmix64(h ^ bits);
  };
  for (double f : s.features) mix(f);
  mix(s.target);
  return h;
}

void DomainCorpus::validate() const {
  if (domains.size() < 2) throw InputError("corpus needs at least 2 domains");
  if (tasks.empty()) throw InputError("corpus needs at least 1 validation task");
  const std::size_t dim = input_dim();
  std::unordered_set<std::uint64_t> domain_hashes;
  for (std::size_t j = 0; j < domains.size(); ++j) {
    if (domains[j].samples.empty()) throw InputError("domain '" + domains[j].name + "' is empty");
    for (const auto& s : domains[j].samples) {
      if (s.features.size() != dim)
        throw InputError("domain '" + domains[j].name + "' has inconsistent feature dimension");
      if (s.domain_id != static_cast<int>(j))
        throw InputError("domain '" + domains[j].name + "' holds a sample with a foreign domain id");
      domain_hashes.insert(content_hash(s));
    }
  }
  for (const auto& t : tasks) {
    if (t.samples.empty()) throw InputError("validation task '" + t.name + "' is empty");
    for (const auto& s : t.samples) {
      if (s.features.size() != dim)
        throw InputError("task '" + t.name + "' has inconsistent feature dimension");
      if (s.domain_id < 0 || s.domain_id >= static_cast<int>(domains.size()))
        throw InputError("task '" + t.name + "' sample has out-of-range domain id");
      if (domain_hashes.contains(content_hash(s)))
        throw InputError("task '" + t.name + "' shares a sample with the training domains");
    }
  }
}

void Scenario::validate() const {
  if (domains.size() < 2) throw ConfigError("scenario needs at least 2 domains");
  if (tasks.empty()) throw ConfigError("scenario needs at least 1 task");
  const std::size_t dim = domains.front().mean.size();
  if (dim == 0) throw ConfigError("domain '" + domains.front().name + "' has an empty mean");
  for (const auto& d : domains) {
    auto bad = [&d](const std::string& what) {
      return ConfigError("domain '" + d.name + "': " + what);
    };
    if (d.samples == 0) throw bad("samples must be >= 1");
    if (d.mean.size() != dim) throw bad("mean has wrong dimension");
    if (d.stddev.size() != dim) throw bad("stddev has wrong dimension");
    if (d.target_weights.size() != dim) throw bad("target_weights has wrong dimension");
    for (double v : d.mean)
      if (!std::isfinite(v)) throw bad("mean must be finite");
    for (double v : d.stddev)
      if (!std::isfinite(v) || v <= 0.0) throw bad("stddev entries must be finite and > 0");
    for (double v : d.target_weights)
      if (!std::isfinite(v)) throw bad("target_weights must be finite");
    if (!std::isfinite(d.target_bias)) throw bad("target_bias must be finite");
    if (!std::isfinite(d.noise_stddev) || d.noise_stddev < 0.0)
      throw bad("noise_stddev must be finite and >= 0");
  }
  for (const auto& t : tasks) {
    if (t.samples == 0) throw ConfigError("task '" + t.name + "': samples must be >= 1");
    if (t.mixture.size() != domains.size())
      throw ConfigError("task '" + t.name + "': mixture needs one entry per domain");
    double total = 0.0;
    for (double v : t.mixture) {
      if (!std::isfinite(v) || v < 0.0)
        throw ConfigError("task '" + t.name + "': mixture entries must be finite and >= 0");
      total += v;
    }
    if (total <= 0.0) throw ConfigError("task '" + t.name + "': mixture sums to zero");
  }
}

namespace {

Sample draw_sample(const DomainDistribution& d, int domain_id, bool classification, Rng& rng) {
  Sample s;
  s.domain_id = domain_id;
  s.features.resize(d.mean.size());
  double z = d.target_bias;
  for (std::size_t i = 0; i < d.mean.size(); ++i) {
    s.features[i] = d.mean[i] + d.stddev[i] * standard_normal(rng);
    z += d.target_weights[i] * s.features[i];
  }
  z += d.noise_stddev * standard_normal(rng);
  if (classification) {
    const double p = 1.0 / (1.0 + std::exp(-z));
    s.target = uniform01(rng) < p ? 1.0 : 0.0;
  } else {
    s.target = z;
  }
  return s;
}

std::size_t pick_component(const std::vector<double>& mixture, Rng& rng) {
  double total = 0.0;
  for (double v : mixture) total += v;
  double u = uniform01(rng) * total;
  for (std::size_t j = 0; j < mixture.size(); ++j) {
    if (u < mixture[j]) return j;
    u -= mixture[j];
  }
  for (std::size_t j = mixture.size(); j-- > 0;)
    if (mixture[j] > 0.0) return j;
  return 0;
}

}  // namespace

DomainCorpus generate_synthetic_corpus(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  DomainCorpus corpus;
  for (std::size_t j = 0; j < scenario.domains.size(); ++j) {
    const auto& d = scenario.domains[j];
    Rng rng = make_rng(derive_seed(derive_seed(seed, "domain"), j));
    NamedSamples ns{d.name, {}};
    ns.samples.reserve(d.samples);
    for (std::size_t k = 0; k < d.samples; ++k)
      ns.samples.push_back(draw_sample(d, static_cast<int>(j), scenario.classification, rng));
    corpus.domains.push_back(std::move(ns));
  }
  for (std::size_t i = 0; i < scenario.tasks.size(); ++i) {
    const auto& t = scenario.tasks[i];
    Rng rng = make_rng(derive_seed(derive_seed(seed, "task"), i));
    NamedSamples ns{t.name, {}};
    ns.samples.reserve(t.samples);
    for (std::size_t k = 0; k < t.samples; ++k) {
      const std::size_t j = pick_component(t.mixture, rng);
      ns.samples.push_back(
          draw_sample(scenario.domains[j], static_cast<int>(j), scenario.classification, rng));
    }
    corpus.tasks.push_back(std::move(ns));
  }
  corpus.validate();
  return corpus;
}

void write_corpus(std::ostream& os, const DomainCorpus& corpus, const std::string& manifest_extra) {
  json manifest;
  manifest["split"] = "manifest";
  manifest["domains"] = corpus.domain_names();
  manifest["tasks"] = corpus.task_names();
  if (!manifest_extra.empty()) manifest["run"] = json::parse(manifest_extra);
  os << manifest.dump() << '\n';
  auto emit = [&os](const char* split, const std::string& name, const Sample& s, bool with_domain) {
    os << "{\"split\":\"" << split << "\",\"name\":" << json(name).dump() << ",\"features\":[";
    for (std::size_t i = 0; i < s.features.size(); ++i) {
      if (i) os << ',';
      os << format_double(s.features[i]);
    }
    os << "],\"target\":" << format_double(s.target);
    if (with_domain) os << ",\"domain\":" << s.domain_id;
    os << "}\n";
  };
  for (const auto& d : corpus.domains)
    for (const auto& s : d.samples) emit("domain", d.name, s, false);
  for (const auto& t : corpus.tasks)
    for (const auto& s : t.samples) emit("task", t.name, s, true);
}

DomainCorpus read_corpus(std::istream& is) {
  DomainCorpus corpus;
  std::unordered_map<std::string, std::size_t> domain_index;
  std::unordered_map<std::string, std::size_t> task_index;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&line_no](const std::string& what) {
    return InputError("corpus line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("split")) throw fail("record lacks 'split'");
    const std::string split = rec.at("split").get<std::string>();
    if (split == "manifest") {
      if (line_no != 1) throw fail("manifest must be the first line");
      for (const auto& n : rec.at("domains")) {
        domain_index.emplace(n.get<std::string>(), corpus.domains.size());
        corpus.domains.push_back({n.get<std::string>(), {}});
      }
      for (const auto& n : rec.at("tasks")) {
        task_index.emplace(n.get<std::string>(), corpus.tasks.size());
        corpus.tasks.push_back({n.get<std::string>(), {}});
      }
      continue;
    }
    if (!rec.contains("name") || !rec.contains("features") || !rec.contains("target"))
      throw fail("record needs 'name', 'features' and 'target'");
    Sample s;
    try {
      s.features = rec.at("features").get<std::vector<double>>();
      s.target = rec.at("target").get<double>();
    } catch (const json::exception& e) {
      throw fail(std::string("bad field type: ") + e.what());
    }
    const std::string name = rec.at("name").get<std::string>();
    if (split == "domain") {
      auto [it, inserted] = domain_index.emplace(name, corpus.domains.size());
      if (inserted) corpus.domains.push_back({name, {}});
      s.domain_id = static_cast<int>(it->second);
      corpus.domains[it->second].samples.push_back(std::move(s));
    } else if (split == "task") {
      auto [it, inserted] = task_index.emplace(name, corpus.tasks.size());
      if (inserted) corpus.tasks.push_back({name, {}});
      s.domain_id = rec.contains("domain") ? rec.at("domain").get<int>() : 0;
      corpus.tasks[it->second].samples.push_back(std::move(s));
    } else {
      throw fail("unknown split '" + split + "'");
    }
  }
  return corpus;
}

}  // namespace tikmix
