#include "labelmtl/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace labelmtl {

using json = nlohmann::json;

Metric parse_metric(std::string_view name) {
  if (name == "rho_pn") return Metric::kRhoPn;
  if (name == "mae_m") return Metric::kMaeM;
  if (name == "f1_m") return Metric::kF1M;
  if (name == "f1_fa") return Metric::kF1Fa;
  if (name == "acc") return Metric::kAcc;
  throw ConfigError("unknown metric '" + std::string(name) +
                    "' (expected rho_pn, mae_m, f1_m, f1_fa or acc)");
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kRhoPn: return "rho_pn";
    case Metric::kMaeM: return "mae_m";
    case Metric::kF1M: return "f1_m";
    case Metric::kF1Fa: return "f1_fa";
    case Metric::kAcc: return "acc";
  }
  return "acc";
}

bool higher_is_better(Metric m) { return m != Metric::kMaeM; }

std::optional<std::size_t> TaskSpec::find_label(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return i;
  return std::nullopt;
}

std::size_t TaskSpec::label_index(std::string_view label) const {
  if (auto i = find_label(label)) return *i;
  throw DataError("label '" + std::string(label) + "' is not a label of task '" + name + "'");
}

TaskSet::TaskSet(std::vector<TaskSpec> tasks, std::string_view main_task) : tasks_(std::move(tasks)) {
  if (tasks_.empty()) throw ConfigError("at least one task is required");
  std::set<std::string> names;
  bool found = false;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    auto& t = tasks_[i];
    if (!names.insert(t.name).second) throw ConfigError("duplicate task name '" + t.name + "'");
    if (t.labels.empty()) throw ConfigError("task '" + t.name + "' has no labels");
    std::set<std::string> seen(t.labels.begin(), t.labels.end());
    if (seen.size() != t.labels.size()) throw ConfigError("task '" + t.name + "' has duplicate labels");
    if (t.loss_weight < 0.0) throw ConfigError("task '" + t.name + "' has a negative loss weight");
    t.label_rows = {total_labels_, t.labels.size()};
    total_labels_ += t.labels.size();
    t.is_main = t.name == main_task;
    if (t.is_main) {
      main_ = i;
      found = true;
    }
  }
  if (!found) throw ConfigError("main task '" + std::string(main_task) + "' is not configured");
}

std::size_t TaskSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < tasks_.size(); ++i)
    if (tasks_[i].name == name) return i;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

std::vector<std::size_t> TaskSet::auxiliary() const {
  std::vector<std::size_t> aux;
  for (std::size_t i = 0; i < tasks_.size(); ++i)
    if (i != main_) aux.push_back(i);
  return aux;
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + std::string(s) + "'");
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

namespace {

// Decodes one UTF-8 code point starting at s[i]; advances i. Invalid bytes
// decode as themselves so that tokenization never fails.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> unsigned {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) & 0x3Fu : 0u;
  };
  if (b0 < 0x80) {
    i += 1;
    return b0;
  }
  if ((b0 >> 5) == 0x6 && i + 1 < s.size()) {
    const char32_t cp = ((b0 & 0x1Fu) << 6) | cont(1);
    i += 2;
    return cp;
  }
  if ((b0 >> 4) == 0xE && i + 2 < s.size()) {
    const char32_t cp = ((b0 & 0x0Fu) << 12) | (cont(1) << 6) | cont(2);
    i += 3;
    return cp;
  }
  if ((b0 >> 3) == 0x1E && i + 3 < s.size()) {
    const char32_t cp = ((b0 & 0x07u) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
    i += 4;
    return cp;
  }
  i += 1;
  return b0;
}

bool is_unicode_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t start = i;
    const char32_t cp = next_code_point(s, i);
    if (is_unicode_space(cp)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    if (cp < 0x80) {
      const char c = static_cast<char>(cp);
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    } else {
      cur.append(s.substr(start, i - start));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<Example> parse_dataset(std::string_view contents, const TaskSpec& task,
                                   const std::string& source_name, bool keep_labels) {
  std::vector<Example> out;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError(source_name + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) fail("expected a JSON object");
    auto str_field = [&](const char* key, bool required) -> std::optional<std::string> {
      auto it = obj.find(key);
      if (it == obj.end() || it->is_null()) {
        if (required) fail(std::string("missing required key '") + key + "'");
        return std::nullopt;
      }
      if (!it->is_string()) fail(std::string("key '") + key + "' must be a string");
      return it->get<std::string>();
    };
    Example ex;
    ex.id = task.name + ":" + std::to_string(line_no);
    ex.task = task.name;
    ex.text = tokenize(*str_field("text", true));
    ex.condition = tokenize(*str_field("condition", true));
    ex.group = str_field("group", false);
    try {
      ex.split = parse_split(*str_field("split", true));
    } catch (const DataError& e) {
      fail(e.what());
    }
    if (ex.text.empty()) fail("text is empty after tokenization");
    if (auto label = keep_labels ? str_field("label", false) : std::nullopt) {
      auto idx = task.find_label(*label);
      if (!idx) fail("unknown label '" + *label + "' for task '" + task.name + "'");
      ex.label = std::move(label);
      ex.label_id = idx;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<Example> load_dataset(const std::string& path, const TaskSpec& task) {
  return parse_dataset(read_file(path), task, path);
}

std::vector<Example> load_pool(const std::string& path, const TaskSpec& task) {
  return parse_dataset(read_file(path), task, path, false);
}

Dataset split_dataset(std::vector<Example> examples) {
  Dataset d;
  for (auto& ex : examples) {
    switch (ex.split) {
      case Split::kTrain: d.train.push_back(std::move(ex)); break;
      case Split::kDev: d.dev.push_back(std::move(ex)); break;
      case Split::kTest: d.test.push_back(std::move(ex)); break;
    }
  }
  return d;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{"<pad>", "<unk>"}) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2) throw DataError("vocabulary must contain the pad and unk entries");
  for (std::size_t i = 2; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second)
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

std::size_t Vocab::id(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

Vocab build_vocab(std::span<const std::vector<Example>> datasets, std::size_t min_freq) {
  if (min_freq < 1) throw ConfigError("min_freq must be at least 1");
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& ds : datasets)
    for (const auto& ex : ds) {
      for (const auto& t : ex.text) ++freq[t];
      for (const auto& t : ex.condition) ++freq[t];
    }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : freq)
    if (n >= min_freq) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens{"<pad>", "<unk>"};
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocab(std::move(tokens));
}

Batch encode_batch(std::span<const Example> examples, std::span<const std::size_t> rows,
                   const Vocab& vocab, std::size_t task, std::size_t max_len) {
  Batch b;
  b.task = task;
  b.size = rows.size();
  b.source.assign(rows.begin(), rows.end());
  std::size_t labelled = 0;
  for (std::size_t r : rows) {
    const Example& ex = examples[r];
    if (ex.text.empty()) throw DataError("example " + ex.id + " has empty text");
    b.text_lens.push_back(std::min(ex.text.size(), max_len));
    b.condition_lens.push_back(std::min(ex.condition.size(), max_len));
    if (ex.label_id) ++labelled;
  }
  if (labelled != 0 && labelled != rows.size())
    throw DataError("batch mixes labelled and unlabelled examples");
  b.text_width = b.text_lens.empty() ? 0 : *std::max_element(b.text_lens.begin(), b.text_lens.end());
  b.condition_width =
      b.condition_lens.empty() ? 0 : *std::max_element(b.condition_lens.begin(), b.condition_lens.end());
  b.text_ids.assign(b.size * b.text_width, Vocab::kPad);
  b.condition_ids.assign(b.size * b.condition_width, Vocab::kPad);
  if (labelled) b.label_ids.emplace();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Example& ex = examples[rows[i]];
    for (std::size_t t = 0; t < b.text_lens[i]; ++t) b.text_ids[i * b.text_width + t] = vocab.id(ex.text[t]);
    for (std::size_t t = 0; t < b.condition_lens[i]; ++t)
      b.condition_ids[i * b.condition_width + t] = vocab.id(ex.condition[t]);
    if (labelled) b.label_ids->push_back(*ex.label_id);
  }
  return b;
}

std::vector<Batch> make_batches(std::span<const Example> examples, const Vocab& vocab, std::size_t task,
                                std::size_t batch_size, std::uint64_t seed, std::size_t max_len) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<Batch> out;
  if (examples.empty()) return out;
  for (const auto& ex : examples)
    if (ex.task != examples.front().task) throw DataError("make_batches: examples from several tasks");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, order.size() - start);
    out.push_back(encode_batch(examples, std::span(order).subspan(start, n), vocab, task, max_len));
  }
  return out;
}

TaskAlternator::TaskAlternator(std::size_t num_tasks) : num_tasks_(num_tasks) {
  if (num_tasks == 0) throw ConfigError("task alternation needs at least one task");
}

std::size_t TaskAlternator::next() {
  const std::size_t t = position_;
  position_ = (position_ + 1) % num_tasks_;
  return t;
}

BatchStream::BatchStream(std::span<const Example> examples, const Vocab& vocab, std::size_t task,
                         std::size_t batch_size, std::uint64_t seed, std::size_t max_len)
    : examples_(examples), vocab_(&vocab), task_(task), batch_size_(batch_size), seed_(seed),
      max_len_(max_len) {
  if (examples.empty()) throw DataError("batch stream over an empty example list");
  reshuffle();
}

void BatchStream::reshuffle() {
  batches_ = make_batches(examples_, *vocab_, task_, batch_size_, mix_seed(seed_, pass_), max_len_);
}

const Batch& BatchStream::next() {
  if (cursor_ == batches_.size()) {
    ++pass_;
    cursor_ = 0;
    reshuffle();
  }
  return batches_[cursor_++];
}

std::vector<Example> downsample(std::span<const Example> examples, std::size_t n, std::uint64_t seed) {
  if (n >= examples.size()) return {examples.begin(), examples.end()};
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i : order) out.push_back(examples[i]);
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finaliser over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace labelmtl
