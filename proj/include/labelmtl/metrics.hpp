#pragma once

#include "labelmtl/data.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace labelmtl::metrics {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PredictionRecord {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::optional<std::string> group;
};

double accuracy(std::span<const PredictionRecord> records);

// Unweighted mean of per-class F1 over classes [0, num_classes). Precision,
// recall and F1 are 0 whenever their denominator is 0.
double macro_f1(std::span<const PredictionRecord> records, std::size_t num_classes);

double class_f1(std::span<const PredictionRecord> records, std::size_t cls);

// Mean of the favor and against F1 scores; other classes only enter through
// the confusion counts.
double f1_favor_against(std::span<const PredictionRecord> records, std::size_t favor, std::size_t against);

// Per topic: macro recall over the classes present in that topic's gold
// labels. Returns the mean over topics.
double macro_recall_over_topics(std::span<const PredictionRecord> records);

// Per topic: mean over gold-present classes of the class's mean |gold - pred|
// (label indices are the ordinal scale). Returns the mean over topics.
double macro_mae_over_topics(std::span<const PredictionRecord> records);

// Per-topic values underlying the two topic-averaged metrics.
std::map<std::string, double> per_topic(std::span<const PredictionRecord> records, Metric metric);

struct Complementarity {
  double only_ltn_pct = 0.0;
  double only_main_pct = 0.0;
};

// Percentages of correct predictions made by exactly one predictor, relative
// to the instances either predictor gets right.
Complementarity complementarity(std::span<const std::size_t> main_preds, std::span<const std::size_t> ltn_preds,
                                std::span<const std::size_t> golds);

struct MetricReport {
  std::string task;
  std::string metric_name;
  double value = 0.0;
  std::size_t n_instances = 0;
  std::map<std::string, double> per_group;
};

// Dispatches on the task's metric. f1_fa looks up the favor/against labels
// by name.
double evaluate(Metric metric, std::span<const PredictionRecord> records, const TaskSpec& task);
MetricReport report(std::span<const PredictionRecord> records, const TaskSpec& task);

std::string to_json(const MetricReport& r);

}  // namespace labelmtl::metrics
