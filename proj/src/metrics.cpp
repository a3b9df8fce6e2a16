#include "labelmtl/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

namespace labelmtl::metrics {

namespace {

void require_nonempty(std::span<const PredictionRecord> records, const char* what) {
  if (records.empty()) throw MetricError(std::string(what) + ": no prediction records");
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::map<std::string, std::vector<PredictionRecord>> by_topic(std::span<const PredictionRecord> records,
                                                              const char* what) {
  std::map<std::string, std::vector<PredictionRecord>> groups;
  for (const auto& r : records) {
    if (!r.group) throw MetricError(std::string(what) + ": record without a topic group");
    groups[*r.group].push_back(r);
  }
  return groups;
}

double topic_macro_recall(std::span<const PredictionRecord> records) {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_class;  // gold -> (hits, total)
  for (const auto& r : records) {
    auto& [hit, total] = per_class[r.gold];
    ++total;
    if (r.predicted == r.gold) ++hit;
  }
  double s = 0.0;
  for (const auto& [cls, ht] : per_class) s += static_cast<double>(ht.first) / static_cast<double>(ht.second);
  return s / static_cast<double>(per_class.size());
}

double topic_macro_mae(std::span<const PredictionRecord> records) {
  std::map<std::size_t, std::pair<double, std::size_t>> per_class;  // gold -> (abs error sum, count)
  for (const auto& r : records) {
    auto& [err, n] = per_class[r.gold];
    err += std::abs(static_cast<double>(r.gold) - static_cast<double>(r.predicted));
    ++n;
  }
  double s = 0.0;
  for (const auto& [cls, en] : per_class) s += en.first / static_cast<double>(en.second);
  return s / static_cast<double>(per_class.size());
}

}  // namespace

double accuracy(std::span<const PredictionRecord> records) {
  require_nonempty(records, "accuracy");
  std::size_t hit = 0;
  for (const auto& r : records) hit += r.gold == r.predicted ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(records.size());
}

double class_f1(std::span<const PredictionRecord> records, std::size_t cls) {
  double tp = 0, fp = 0, fn = 0;
  for (const auto& r : records) {
    if (r.predicted == cls && r.gold == cls) ++tp;
    else if (r.predicted == cls) ++fp;
    else if (r.gold == cls) ++fn;
  }
  const double precision = safe_div(tp, tp + fp);
  const double recall = safe_div(tp, tp + fn);
  return safe_div(2.0 * precision * recall, precision + recall);
}

double macro_f1(std::span<const PredictionRecord> records, std::size_t num_classes) {
  require_nonempty(records, "macro_f1");
  if (num_classes == 0) throw MetricError("macro_f1: no classes");
  double s = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) s += class_f1(records, c);
  return s / static_cast<double>(num_classes);
}

double f1_favor_against(std::span<const PredictionRecord> records, std::size_t favor, std::size_t against) {
  require_nonempty(records, "f1_favor_against");
  return 0.5 * (class_f1(records, favor) + class_f1(records, against));
}

double macro_recall_over_topics(std::span<const PredictionRecord> records) {
  require_nonempty(records, "macro_recall_over_topics");
  const auto groups = by_topic(records, "macro_recall_over_topics");
  double s = 0.0;
  for (const auto& [topic, rs] : groups) s += topic_macro_recall(rs);
  return s / static_cast<double>(groups.size());
}

double macro_mae_over_topics(std::span<const PredictionRecord> records) {
  require_nonempty(records, "macro_mae_over_topics");
  const auto groups = by_topic(records, "macro_mae_over_topics");
  double s = 0.0;
  for (const auto& [topic, rs] : groups) s += topic_macro_mae(rs);
  return s / static_cast<double>(groups.size());
}

std::map<std::string, double> per_topic(std::span<const PredictionRecord> records, Metric metric) {
  std::map<std::string, double> out;
  if (metric != Metric::kRhoPn && metric != Metric::kMaeM) return out;
  for (const auto& [topic, rs] : by_topic(records, "per_topic"))
    out[topic] = metric == Metric::kRhoPn ? topic_macro_recall(rs) : topic_macro_mae(rs);
  return out;
}

Complementarity complementarity(std::span<const std::size_t> main_preds, std::span<const std::size_t> ltn_preds,
                                std::span<const std::size_t> golds) {
  if (main_preds.size() != golds.size() || ltn_preds.size() != golds.size())
    throw MetricError("complementarity: prediction lists are not aligned");
  std::size_t either = 0, only_ltn = 0, only_main = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const bool m = main_preds[i] == golds[i];
    const bool l = ltn_preds[i] == golds[i];
    if (m || l) ++either;
    if (l && !m) ++only_ltn;
    if (m && !l) ++only_main;
  }
  if (either == 0) throw MetricError("complementarity: neither predictor is ever correct");
  const double c = static_cast<double>(either);
  return {100.0 * static_cast<double>(only_ltn) / c, 100.0 * static_cast<double>(only_main) / c};
}

double evaluate(Metric metric, std::span<const PredictionRecord> records, const TaskSpec& task) {
  switch (metric) {
    case Metric::kAcc: return accuracy(records);
    case Metric::kF1M: return macro_f1(records, task.num_labels());
    case Metric::kRhoPn: return macro_recall_over_topics(records);
    case Metric::kMaeM: return macro_mae_over_topics(records);
    case Metric::kF1Fa: {
      auto favor = task.find_label("favor");
      if (!favor) favor = task.find_label("favour");
      const auto against = task.find_label("against");
      if (!favor || !against)
        throw ConfigError("task '" + task.name + "' uses f1_fa but lacks 'favor' and 'against' labels");
      return f1_favor_against(records, *favor, *against);
    }
  }
  throw MetricError("unknown metric");
}

MetricReport report(std::span<const PredictionRecord> records, const TaskSpec& task) {
  MetricReport r;
  r.task = task.name;
  r.metric_name = std::string(metric_name(task.metric));
  r.value = evaluate(task.metric, records, task);
  r.n_instances = records.size();
  r.per_group = per_topic(records, task.metric);
  return r;
}

std::string to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["task"] = r.task;
  j["metric_name"] = r.metric_name;
  j["value"] = r.value;
  j["n_instances"] = r.n_instances;
  j["per_group"] = nlohmann::ordered_json::object();
  for (const auto& [g, v] : r.per_group) j["per_group"][g] = v;
  return j.dump();
}

}  // namespace labelmtl::metrics
