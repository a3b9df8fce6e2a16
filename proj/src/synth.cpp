#include "labelmtl/synth.hpp"

#include "labelmtl/run_config.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>

namespace labelmtl::synth {

namespace {

constexpr std::size_t kSentimentWords = 24;
constexpr std::size_t kFillerWords = 24;
constexpr std::size_t kTopics = 8;
constexpr double kSentimentRate = 0.3;

std::string word(const char* prefix, std::size_t i) { return prefix + std::to_string(i); }

Instance draw(std::mt19937_64& rng, const std::string& split) {
  std::uniform_int_distribution<std::size_t> len_dist(4, 10);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> senti(0, kSentimentWords - 1);
  std::uniform_int_distribution<std::size_t> filler(0, kFillerWords - 1);
  std::uniform_int_distribution<std::size_t> topic_dist(0, kTopics - 1);

  Instance inst;
  inst.split = split;
  const std::size_t len = len_dist(rng);
  int score = 0;
  for (std::size_t i = 0; i < len; ++i) {
    if (!inst.text.empty()) inst.text += ' ';
    if (unit(rng) < kSentimentRate) {
      const bool positive = unit(rng) < 0.5;
      inst.text += word(positive ? "up" : "down", senti(rng));
      score += positive ? 1 : -1;
    } else {
      inst.text += word("w", filler(rng));
    }
  }
  const std::size_t topic = topic_dist(rng);
  inst.topic = word("topic", topic);
  inst.condition = unit(rng) < 0.3 ? "about " + inst.topic : inst.topic;
  // Odd topics invert the polarity of the text.
  const int signed_score = topic % 2 == 1 ? -score : score;
  inst.latent = signed_score > 0 ? 0 : (signed_score < 0 ? 1 : 2);
  return inst;
}

void fill(std::mt19937_64& rng, std::vector<Instance>& out, const Options& opts, bool noisy) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_label(0, kLabelsA.size() - 1);
  const std::pair<const char*, std::size_t> splits[] = {
      {"train", opts.n_train}, {"dev", opts.n_dev}, {"test", opts.n_test}};
  for (const auto& [split, n] : splits)
    for (std::size_t i = 0; i < n; ++i) {
      Instance inst = draw(rng, split);
      inst.label = inst.latent;
      if (noisy && unit(rng) >= opts.correlation) inst.label = any_label(rng);
      out.push_back(std::move(inst));
    }
}

}  // namespace

Corpus generate(const Options& opts) {
  if (opts.correlation < 0.0 || opts.correlation > 1.0)
    throw ConfigError("correlation must lie in [0, 1]");
  std::mt19937_64 rng(opts.seed);
  Corpus c;
  fill(rng, c.task_a, opts, false);
  fill(rng, c.task_b, opts, true);
  return c;
}

double agreement(const Corpus& corpus) {
  if (corpus.task_b.empty()) return 0.0;
  std::size_t same = 0;
  for (const auto& inst : corpus.task_b) same += inst.label == inst.latent ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(corpus.task_b.size());
}

std::string to_jsonl(const std::vector<Instance>& instances, const std::vector<std::string>& labels) {
  std::string out;
  for (const auto& inst : instances) {
    nlohmann::ordered_json j;
    j["text"] = inst.text;
    j["condition"] = inst.condition;
    j["label"] = labels[inst.label];
    j["group"] = inst.topic;
    j["split"] = inst.split;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write(const Corpus& corpus, const std::string& dir, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto dump = [&](const std::string& name, const std::string& body) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw DataError("cannot write '" + (fs::path(dir) / name).string() + "'");
    out << body;
  };
  dump("task_a.jsonl", to_jsonl(corpus.task_a, kLabelsA));
  dump("task_b.jsonl", to_jsonl(corpus.task_b, kLabelsB));

  RunConfig rc;
  TaskSpec a;
  a.name = "task_a";
  a.labels = kLabelsA;
  a.data_path = "task_a.jsonl";
  TaskSpec b;
  b.name = "task_b";
  b.labels = kLabelsB;
  b.data_path = "task_b.jsonl";
  rc.tasks = {a, b};
  rc.main_task = "task_a";
  rc.train.seed = seed;
  // Desk-scale model; the full-size defaults are 100 wide.
  rc.train.model.embedding_dim = 32;
  rc.train.model.hidden_dim = 32;
  rc.train.model.label_dim = 32;
  rc.train.model.ltn_hidden = 32;
  // Smaller batches and a faster rate compensate for the small corpus; the
  // longer patience rides out single-epoch dips on a 500-example dev set.
  rc.train.batch_size = 32;
  rc.train.learning_rate = 0.003;
  rc.train.patience = 5;
  rc.train.max_epochs = 40;
  rc.output_dir = "run";
  dump("config.json", run_config_to_json(rc));
}

}  // namespace labelmtl::synth
