#pragma once

#include "labelmtl/data.hpp"
#include "labelmtl/synth.hpp"
#include "labelmtl/training.hpp"

#include <vector>

namespace testutil {

struct SynthTasks {
  labelmtl::TaskSet tasks;
  std::vector<labelmtl::Dataset> data;
};

// Both synthetic tasks, parsed through the regular JSONL path.
inline SynthTasks synth_tasks(std::uint64_t seed, std::size_t n_train, std::size_t n_dev, std::size_t n_test = 0,
                              double correlation = 0.9) {
  using namespace labelmtl;
  synth::Options o;
  o.seed = seed;
  o.n_train = n_train;
  o.n_dev = n_dev;
  o.n_test = n_test;
  o.correlation = correlation;
  const auto corpus = synth::generate(o);
  TaskSpec a, b;
  a.name = "task_a";
  a.labels = synth::kLabelsA;
  b.name = "task_b";
  b.labels = synth::kLabelsB;
  SynthTasks s{TaskSet({a, b}, "task_a"), {}};
  s.data.push_back(split_dataset(parse_dataset(synth::to_jsonl(corpus.task_a, a.labels), s.tasks[0])));
  s.data.push_back(split_dataset(parse_dataset(synth::to_jsonl(corpus.task_b, b.labels), s.tasks[1])));
  return s;
}

inline labelmtl::TrainConfig tiny_config() {
  labelmtl::TrainConfig c;
  c.model.embedding_dim = 6;
  c.model.hidden_dim = 5;
  c.model.label_dim = 4;
  c.model.ltn_hidden = 6;
  c.batch_size = 16;
  c.learning_rate = 0.01;
  c.max_epochs = 6;
  c.pretrain_epochs = 2;
  c.ltn_epochs = 2;
  c.patience = 3;
  return c;
}

}  // namespace testutil
