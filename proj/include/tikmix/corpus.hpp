#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tikmix/model.hpp"

namespace tikmix {

struct NamedSamples {
  std::string name;
  std::vector<Sample> samples;

  bool operator==(const NamedSamples&) const = default;
};

/// Training domains plus held-out validation tasks. Domain samples are stored
/// contiguously per domain so group gradients are one pass over a vector.
struct DomainCorpus {
  std::vector<NamedSamples> domains;
  std::vector<NamedSamples> tasks;

  std::size_t domain_count() const { return domains.size(); }
  std::size_t task_count() const { return tasks.size(); }
  std::vector<std::string> domain_names() const;
  std::vector<std::string> task_names() const;
  std::size_t input_dim() const;

  /// Non-empty domains/tasks, consistent feature dimension, domain ids match
  /// position, no sample shared between a domain and a task (content hash).
  void validate() const;

  bool operator==(const DomainCorpus&) const = default;
};

/// Gaussian features with a per-domain labelling rule.
struct DomainDistribution {
  std::string name;
  std::size_t samples = 1000;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> target_weights;  // linear rule on the features
  double target_bias = 0.0;
  double noise_stddev = 0.0;

  bool operator==(const DomainDistribution&) const = default;
};

struct TaskMixture {
  std::string name;
  std::size_t samples = 500;
  std::vector<double> mixture;  // non-negative, one entry per domain

  bool operator==(const TaskMixture&) const = default;
};

struct Scenario {
  std::vector<DomainDistribution> domains;
  std::vector<TaskMixture> tasks;
  /// Class labels (Bernoulli through a sigmoid of the linear rule) instead of
  /// real-valued targets.
  bool classification = false;

  void validate() const;
  bool operator==(const Scenario&) const = default;
};

/// Draws a corpus. Each task sample picks a source domain from the task's
/// mixture and is then generated by that domain's distribution, so task
/// utility of every domain is known by construction.
DomainCorpus generate_synthetic_corpus(const Scenario& scenario, std::uint64_t seed);

/// Line-delimited JSON. The first line is a manifest naming domains and
/// tasks in order; each following line is one sample record.
void write_corpus(std::ostream& os, const DomainCorpus& corpus, const std::string& manifest_extra);
DomainCorpus read_corpus(std::istream& is);

std::uint64_t content_hash(const Sample& s);

}  // namespace tikmix
