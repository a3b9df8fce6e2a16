#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace labelmtl {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Metric { kRhoPn, kMaeM, kF1M, kF1Fa, kAcc };

Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);
// MAE^M is the only lower-is-better metric.
bool higher_is_better(Metric m);

struct LabelRows {
  std::size_t begin = 0;
  std::size_t count = 0;
};

struct TaskSpec {
  std::string name;
  std::vector<std::string> labels;
  Metric metric = Metric::kAcc;
  double loss_weight = 1.0;
  LabelRows label_rows;
  bool is_main = false;
  std::optional<std::size_t> downsample_to;
  std::string data_path;

  std::size_t num_labels() const { return labels.size(); }
  // Throws DataError when `label` is not one of this task's labels.
  std::size_t label_index(std::string_view label) const;
  std::optional<std::size_t> find_label(std::string_view label) const;
};

// Ordered task registry. Registration order fixes the joint label-row layout
// and the auxiliary concatenation order used by the label transfer network.
class TaskSet {
 public:
  TaskSet() = default;
  TaskSet(std::vector<TaskSpec> tasks, std::string_view main_task);

  std::size_t size() const { return tasks_.size(); }
  const TaskSpec& operator[](std::size_t i) const { return tasks_[i]; }
  std::span<const TaskSpec> tasks() const { return tasks_; }
  std::size_t main_index() const { return main_; }
  const TaskSpec& main() const { return tasks_[main_]; }
  std::size_t index_of(std::string_view name) const;  // throws ConfigError
  std::size_t total_labels() const { return total_labels_; }
  // Auxiliary task indices in registration order.
  std::vector<std::size_t> auxiliary() const;

 private:
  std::vector<TaskSpec> tasks_;
  std::size_t main_ = 0;
  std::size_t total_labels_ = 0;
};

enum class Split { kTrain, kDev, kTest };

Split parse_split(std::string_view s);
std::string_view split_name(Split s);

struct Example {
  std::string id;  // "<task>:<line>"
  std::string task;
  std::vector<std::string> text;
  std::vector<std::string> condition;
  std::optional<std::string> label;
  std::optional<std::size_t> label_id;
  std::optional<std::string> group;
  Split split = Split::kTrain;
};

struct Dataset {
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
};

// Lowercases ASCII letters and splits on Unicode whitespace.
std::vector<std::string> tokenize(std::string_view s);

// One JSON object per line: text, condition, split, optional label and group.
// Lines without a label produce unlabelled examples.
std::vector<Example> load_dataset(const std::string& path, const TaskSpec& task);
std::vector<Example> parse_dataset(std::string_view contents, const TaskSpec& task,
                                   const std::string& source_name = "<memory>", bool keep_labels = true);
// Loads every line as an unlabelled example of `task`; label keys are ignored.
std::vector<Example> load_pool(const std::string& path, const TaskSpec& task);
Dataset split_dataset(std::vector<Example> examples);

class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;

  Vocab();
  explicit Vocab(std::vector<std::string> tokens);  // index order; [0]="<pad>", [1]="<unk>"

  std::size_t size() const { return tokens_.size(); }
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Counts text and condition tokens over every example; keeps tokens with
// frequency >= min_freq ordered by (-frequency, token).
Vocab build_vocab(std::span<const std::vector<Example>> datasets, std::size_t min_freq = 1);

inline constexpr std::size_t kDefaultMaxLen = 60;

struct Batch {
  std::size_t task = 0;
  std::size_t size = 0;
  std::size_t text_width = 0;
  std::size_t condition_width = 0;
  std::vector<std::size_t> text_ids;       // size x text_width, row-major
  std::vector<std::size_t> text_lens;
  std::vector<std::size_t> condition_ids;  // size x condition_width
  std::vector<std::size_t> condition_lens;
  std::optional<std::vector<std::size_t>> label_ids;
  std::vector<std::size_t> source;  // indices into the example list

  std::size_t text_id(std::size_t row, std::size_t t) const { return text_ids[row * text_width + t]; }
  std::size_t condition_id(std::size_t row, std::size_t t) const {
    return condition_ids[row * condition_width + t];
  }
};

// Pads to the longest sequence in the batch; sequences longer than max_len
// lose their tail.
Batch encode_batch(std::span<const Example> examples, std::span<const std::size_t> rows,
                   const Vocab& vocab, std::size_t task, std::size_t max_len = kDefaultMaxLen);

// Seeded shuffle, then fixed-size chunks (the final one may be smaller).
std::vector<Batch> make_batches(std::span<const Example> examples, const Vocab& vocab,
                                std::size_t task, std::size_t batch_size, std::uint64_t seed,
                                std::size_t max_len = kDefaultMaxLen);

// Round-robin task schedule.
class TaskAlternator {
 public:
  explicit TaskAlternator(std::size_t num_tasks);
  std::size_t next();
  std::size_t num_tasks() const { return num_tasks_; }

 private:
  std::size_t num_tasks_;
  std::size_t position_ = 0;
};

// Endless batch source over one task's examples; reshuffles on every pass.
class BatchStream {
 public:
  BatchStream(std::span<const Example> examples, const Vocab& vocab, std::size_t task,
              std::size_t batch_size, std::uint64_t seed, std::size_t max_len = kDefaultMaxLen);

  const Batch& next();
  std::size_t batches_per_pass() const { return batches_.size(); }
  std::size_t pass() const { return pass_; }
  bool at_pass_start() const { return cursor_ == 0; }

 private:
  void reshuffle();

  std::span<const Example> examples_;
  const Vocab* vocab_;
  std::size_t task_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t max_len_;
  std::size_t pass_ = 0;
  std::size_t cursor_ = 0;
  std::vector<Batch> batches_;
};

std::vector<Example> downsample(std::span<const Example> examples, std::size_t n, std::uint64_t seed);

// Deterministic seed derivation for sub-streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace labelmtl
