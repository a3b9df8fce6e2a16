#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace labelmtl::synth {

// Two pairwise tasks over one vocabulary. Every instance gets a latent
// polarity (positive / negative / neutral) from the sentiment words of its
// text, flipped by the polarity of its topic (the condition). Task A always
// reports the latent class; task B reports it with probability `correlation`
// and an independent uniform label otherwise.
struct Options {
  std::uint64_t seed = 1;
  std::size_t n_train = 2000;
  std::size_t n_dev = 500;
  std::size_t n_test = 500;
  double correlation = 0.9;
};

inline const std::vector<std::string> kLabelsA = {"positive", "negative", "neutral"};
inline const std::vector<std::string> kLabelsB = {"favor", "against", "neither"};

struct Instance {
  std::string text;
  std::string condition;
  std::string topic;
  std::string split;
  std::size_t latent = 0;  // index into the label lists
  std::size_t label = 0;   // reported label index of the owning task
};

struct Corpus {
  std::vector<Instance> task_a;
  std::vector<Instance> task_b;
};

Corpus generate(const Options& opts);

// Fraction of task B instances whose label equals the latent class under the
// index bijection between the two label lists.
double agreement(const Corpus& corpus);

std::string to_jsonl(const std::vector<Instance>& instances, const std::vector<std::string>& labels);

// Writes task_a.jsonl, task_b.jsonl and config.json into `dir`.
void write(const Corpus& corpus, const std::string& dir, std::uint64_t seed);

}  // namespace labelmtl::synth
