#pragma once

#include "labelmtl/metrics.hpp"
#include "labelmtl/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace labelmtl {

struct TrainConfig {
  ModelConfig model;
  bool use_ltn = false;
  bool use_semi = false;
  // Keep alternating over the auxiliary tasks once the transfer network is
  // attached; when false only the main task is trained in later phases.
  bool continue_aux_training = true;
  double learning_rate = 0.001;
  std::size_t batch_size = 128;
  std::size_t patience = 3;
  std::size_t pretrain_epochs = 10;
  // Transfer-network epochs before semi-supervision starts (use_semi only).
  std::size_t ltn_epochs = 3;
  std::size_t max_epochs = 50;
  double pseudo_weight = 1.0;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t min_freq = 1;
  std::uint64_t seed = 1;

  // Throws ConfigError on inconsistent settings.
  void validate(std::size_t num_tasks) const;
};

enum class Phase { kMtl, kLtn, kSemi };
std::string_view phase_name(Phase p);

struct StepLog {
  std::size_t epoch = 0;
  Phase phase = Phase::kMtl;
  std::size_t task = 0;
  double mtl = 0.0;     // lambda-weighted task cross-entropy
  double ltn = 0.0;     // transfer-network NLL
  double pseudo = 0.0;  // weighted pseudo-label squared error
  double total = 0.0;   // value of the loss that was backpropagated
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  Phase phase = Phase::kMtl;
  std::vector<double> task_loss;  // mean unweighted cross-entropy per task
  std::optional<double> ltn_loss;
  std::optional<double> pseudo_loss;
  double dev_metric = 0.0;
  std::optional<double> ltn_dev_metric;
  double seconds = 0.0;  // not serialized
};

struct TrainHistory {
  std::vector<std::string> task_names;
  std::string metric_name;
  std::vector<EpochRecord> epochs;
  std::vector<StepLog> steps;
  std::size_t best_epoch = 0;  // 1-based
  std::vector<std::vector<PseudoLabel>> pseudo_labels;  // one entry per semi epoch

  std::string to_csv() const;
};

struct EarlyStopDecision {
  bool stop = false;
  std::size_t best = 0;  // 0-based index into the metric sequence
};

// Stops once the metric has not improved for `patience` consecutive epochs.
// Ties keep the earlier epoch.
EarlyStopDecision early_stop(std::span<const double> dev_metrics, std::size_t patience, bool higher_better);

struct TrainResult {
  Model model;
  TrainHistory history;
};

// `datasets` is indexed like `tasks`.
TrainResult train(const TrainConfig& config, const TaskSet& tasks, const std::vector<Dataset>& datasets);

std::vector<std::size_t> predict_labels(const Model& model, std::span<const Example> examples, std::size_t task,
                                        bool use_ltn, std::size_t batch_size = 256,
                                        std::size_t max_len = kDefaultMaxLen);

metrics::MetricReport evaluate(const Model& model, std::span<const Example> examples, std::size_t task,
                               bool use_ltn, std::size_t max_len = kDefaultMaxLen);

// Auxiliary training inputs with their labels removed, bound to the main task.
std::vector<Example> unlabelled_pool(const TaskSet& tasks, const std::vector<Dataset>& datasets);

}  // namespace labelmtl
