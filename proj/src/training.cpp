#include "labelmtl/training.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

namespace labelmtl {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

enum Salt : std::uint64_t { kInitSalt = 1, kLtnSalt = 2, kPoolSalt = 3, kDownsampleSalt = 4, kStreamSalt = 100 };

}  // namespace

void TrainConfig::validate(std::size_t num_tasks) const {
  if (use_semi && !use_ltn) throw ConfigError("use_semi requires use_ltn");
  if (use_ltn && num_tasks < 2) throw ConfigError("use_ltn requires at least two tasks");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (pretrain_epochs == 0 && use_ltn) throw ConfigError("pretrain_epochs must be positive");
  if (use_semi && ltn_epochs == 0) throw ConfigError("ltn_epochs must be positive with use_semi");
  if (pseudo_weight < 0.0) throw ConfigError("pseudo_weight must be nonnegative");
  if (max_len == 0) throw ConfigError("max_len must be positive");
  if (min_freq == 0) throw ConfigError("min_freq must be at least 1");
  if (model.use_lel && model.label_fit == LabelFit::kPad && model.label_dim > 2 * model.hidden_dim)
    throw ConfigError("label_fit 'pad' needs label_dim <= 2 * hidden_dim");
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::kMtl: return "mtl";
    case Phase::kLtn: return "ltn";
    case Phase::kSemi: return "semi";
  }
  return "mtl";
}

std::string TrainHistory::to_csv() const {
  std::ostringstream os;
  os << "epoch,phase";
  for (const auto& t : task_names) os << ",loss_" << t;
  os << ",ltn_loss,pseudo_loss,dev_" << metric_name << ",ltn_dev_" << metric_name << "\n";
  for (const auto& e : epochs) {
    os << e.epoch << "," << phase_name(e.phase);
    for (double l : e.task_loss) os << "," << fmt_double(l);
    os << "," << (e.ltn_loss ? fmt_double(*e.ltn_loss) : "");
    os << "," << (e.pseudo_loss ? fmt_double(*e.pseudo_loss) : "");
    os << "," << fmt_double(e.dev_metric);
    os << "," << (e.ltn_dev_metric ? fmt_double(*e.ltn_dev_metric) : "") << "\n";
  }
  return os.str();
}

EarlyStopDecision early_stop(std::span<const double> dev_metrics, std::size_t patience, bool higher_better) {
  EarlyStopDecision d;
  if (dev_metrics.empty()) return d;
  for (std::size_t i = 1; i < dev_metrics.size(); ++i) {
    const bool better = higher_better ? dev_metrics[i] > dev_metrics[d.best] : dev_metrics[i] < dev_metrics[d.best];
    if (better) d.best = i;
  }
  d.stop = dev_metrics.size() - 1 - d.best >= patience;
  return d;
}

std::vector<std::size_t> predict_labels(const Model& model, std::span<const Example> examples, std::size_t task,
                                        bool use_ltn, std::size_t batch_size, std::size_t max_len) {
  if (use_ltn && !model.has_ltn()) throw ConfigError("model has no label transfer network");
  if (use_ltn && task != model.tasks().main_index())
    throw ConfigError("the label transfer network only predicts the main task");
  std::vector<std::size_t> out;
  out.reserve(examples.size());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, examples.size() - start);
    rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = start + i;
    const Batch b = encode_batch(examples, rows, model.vocab(), task, max_len);
    const Tensor h = model.encode(b);
    Tensor p;
    if (use_ltn) {
      std::optional<Tensor> feats;
      if (model.config().use_diversity_feats) feats = diversity_matrix(examples, rows);
      p = model.transfer(h, feats ? &*feats : nullptr);
    } else {
      p = model.predict(h, task);
    }
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < p.cols(); ++c)
        if (p.at(r, c) > p.at(r, best)) best = c;
      out.push_back(best);
    }
  }
  return out;
}

metrics::MetricReport evaluate(const Model& model, std::span<const Example> examples, std::size_t task,
                               bool use_ltn, std::size_t max_len) {
  if (examples.empty()) throw metrics::MetricError("evaluate: empty dataset");
  for (const auto& ex : examples)
    if (!ex.label_id) throw metrics::MetricError("evaluate: example " + ex.id + " has no gold label");
  const auto preds = predict_labels(model, examples, task, use_ltn, 256, max_len);
  std::vector<metrics::PredictionRecord> records;
  records.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i)
    records.push_back({*examples[i].label_id, preds[i], examples[i].group});
  return metrics::report(records, model.tasks()[task]);
}

std::vector<Example> unlabelled_pool(const TaskSet& tasks, const std::vector<Dataset>& datasets) {
  std::vector<Example> pool;
  for (std::size_t t : tasks.auxiliary())
    for (const auto& ex : datasets[t].train) {
      Example u = ex;
      u.task = tasks.main().name;
      u.label.reset();
      u.label_id.reset();
      pool.push_back(std::move(u));
    }
  return pool;
}

namespace {

struct Trainer {
  const TrainConfig& cfg;
  const TaskSet& tasks;
  std::vector<std::vector<Example>> train_sets;
  std::span<const Example> main_dev;
  std::vector<Example> pool;
  Model model;
  ad::RmsProp optimizer;
  TrainHistory history;

  Trainer(const TrainConfig& c, const TaskSet& ts, std::vector<std::vector<Example>> train, std::span<const Example> dev,
          std::vector<Example> unlabelled, Vocab vocab)
      : cfg(c), tasks(ts), train_sets(std::move(train)), main_dev(dev), pool(std::move(unlabelled)),
        model(c.model, ts, std::move(vocab), mix_seed(c.seed, kInitSalt)),
        optimizer(ad::RmsProp::Options{c.learning_rate, 0.9, 1e-8}) {
    optimizer.add_parameters(model.parameters());
    for (const auto& t : tasks.tasks()) history.task_names.push_back(t.name);
    history.metric_name = std::string(metric_name(tasks.main().metric));
  }

  double dev_metric(bool use_ltn) const {
    return evaluate(model, main_dev, tasks.main_index(), use_ltn, cfg.max_len).value;
  }

  Tensor diversity_for(std::size_t task, const Batch& b) const {
    return diversity_matrix(train_sets[task], b.source);
  }

  void run_epoch(std::size_t epoch, Phase phase, std::vector<BatchStream>& streams, BatchStream* pool_stream,
                 const std::vector<std::vector<double>>& pseudo_targets) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t main = tasks.main_index();
    const std::size_t steps = streams[main].batches_per_pass() * tasks.size();
    TaskAlternator schedule(tasks.size());
    std::vector<double> loss_sum(tasks.size(), 0.0);
    std::vector<std::size_t> loss_n(tasks.size(), 0);
    double ltn_sum = 0.0, pseudo_sum = 0.0;
    std::size_t ltn_n = 0, pseudo_n = 0;

    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t t = schedule.next();
      if (phase != Phase::kMtl && t != main && !cfg.continue_aux_training) continue;
      const Batch& batch = streams[t].next();
      const Tensor h = model.encode(batch);
      const Tensor ce = ad::cross_entropy(model.predict(h, t), *batch.label_ids);
      const Tensor weighted = ad::scale(ce, tasks[t].loss_weight);
      StepLog log{epoch, phase, t, weighted.item(), 0.0, 0.0, 0.0};
      Tensor total = weighted;
      loss_sum[t] += ce.item();
      ++loss_n[t];

      if (phase != Phase::kMtl && t == main) {
        std::optional<Tensor> feats;
        if (cfg.model.use_diversity_feats) feats = diversity_for(t, batch);
        const Tensor z = model.transfer(h, feats ? &*feats : nullptr);
        const Tensor ltn = ltn_supervised_loss(z, *batch.label_ids);
        log.ltn = ltn.item();
        total = ad::add(total, ltn);
        ltn_sum += log.ltn;
        ++ltn_n;
      }
      if (phase == Phase::kSemi && t == main && pool_stream) {
        const Batch& pb = pool_stream->next();
        const Tensor p_main = model.predict(model.encode(pb), main);
        std::vector<double> z;
        z.reserve(pb.size * p_main.cols());
        for (std::size_t r : pb.source) z.insert(z.end(), pseudo_targets[r].begin(), pseudo_targets[r].end());
        const Tensor target = Tensor::constant(pb.size, p_main.cols(), std::move(z));
        const Tensor pseudo = ad::scale(pseudo_label_loss(p_main, target), cfg.pseudo_weight);
        log.pseudo = pseudo.item();
        total = ad::add(total, pseudo);
        pseudo_sum += log.pseudo;
        ++pseudo_n;
      }
      log.total = total.item();
      history.steps.push_back(log);

      ad::backward(total);
      optimizer.step();
      optimizer.zero_grad();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = phase;
    for (std::size_t t = 0; t < tasks.size(); ++t)
      rec.task_loss.push_back(loss_n[t] ? loss_sum[t] / static_cast<double>(loss_n[t]) : 0.0);
    if (ltn_n) rec.ltn_loss = ltn_sum / static_cast<double>(ltn_n);
    if (pseudo_n) rec.pseudo_loss = pseudo_sum / static_cast<double>(pseudo_n);
    rec.dev_metric = dev_metric(false);
    if (model.has_ltn()) rec.ltn_dev_metric = dev_metric(true);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.epochs.push_back(std::move(rec));
  }
};

}  // namespace

TrainResult train(const TrainConfig& config, const TaskSet& tasks, const std::vector<Dataset>& datasets) {
  config.validate(tasks.size());
  if (datasets.size() != tasks.size())
    throw ConfigError("expected " + std::to_string(tasks.size()) + " datasets, got " + std::to_string(datasets.size()));
  std::vector<std::vector<Example>> train_sets;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& ds = datasets[t];
    std::vector<Example> tr;
    for (const auto& ex : ds.train)
      if (ex.label_id) tr.push_back(ex);
    if (tasks[t].downsample_to)
      tr = downsample(tr, *tasks[t].downsample_to, mix_seed(config.seed, kDownsampleSalt + 1000 * t));
    if (tr.empty()) throw DataError("task '" + tasks[t].name + "' has no labelled training examples");
    train_sets.push_back(std::move(tr));
  }
  const auto& dev = datasets[tasks.main_index()].dev;
  if (dev.empty()) throw DataError("main task '" + tasks.main().name + "' has no dev examples");

  Vocab vocab = build_vocab(train_sets, config.min_freq);
  std::vector<Example> pool;
  if (config.use_semi) {
    std::vector<Dataset> stripped(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) stripped[t].train = train_sets[t];
    pool = unlabelled_pool(tasks, stripped);
  }

  Trainer tr(config, tasks, std::move(train_sets), dev, std::move(pool), std::move(vocab));
  std::vector<BatchStream> streams;
  for (std::size_t t = 0; t < tasks.size(); ++t)
    streams.emplace_back(tr.train_sets[t], tr.model.vocab(), t, config.batch_size,
                         mix_seed(config.seed, kStreamSalt + t), config.max_len);
  std::optional<BatchStream> pool_stream;
  if (!tr.pool.empty())
    pool_stream.emplace(tr.pool, tr.model.vocab(), tasks.main_index(), config.batch_size,
                        mix_seed(config.seed, kPoolSalt), config.max_len);

  const bool hib = higher_is_better(tasks.main().metric);
  Phase phase = Phase::kMtl;
  std::size_t phase_start = 0;  // index into history.epochs
  std::optional<std::size_t> best;
  std::vector<std::vector<double>> best_params;
  std::vector<std::vector<double>> pseudo_targets;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (phase == Phase::kSemi) {
      auto labels = generate_pseudo_labels(tr.pool, tr.model, epoch, 256, config.max_len);
      pseudo_targets.clear();
      for (const auto& pl : labels) pseudo_targets.push_back(pl.z);
      tr.history.pseudo_labels.push_back(std::move(labels));
    }
    tr.run_epoch(epoch, phase, streams, pool_stream ? &*pool_stream : nullptr, pseudo_targets);
    const EpochRecord& rec = tr.history.epochs.back();
    std::clog << "epoch " << epoch << " [" << phase_name(phase) << "] dev " << tr.history.metric_name << "="
              << rec.dev_metric;
    if (rec.ltn_dev_metric) std::clog << " ltn=" << *rec.ltn_dev_metric;
    std::clog << " (" << rec.seconds << "s)\n";

    // Only epochs whose model carries the transfer network are eligible for
    // the returned snapshot when one is requested.
    const bool eligible = !config.use_ltn || phase != Phase::kMtl;
    if (eligible) {
      const std::size_t idx = tr.history.epochs.size() - 1;
      const double v = rec.dev_metric;
      const bool better =
          !best || (hib ? v > tr.history.epochs[*best].dev_metric : v < tr.history.epochs[*best].dev_metric);
      if (better) {
        best = idx;
        best_params = tr.model.snapshot();
      }
    }

    std::vector<double> phase_metrics;
    for (std::size_t i = phase_start; i < tr.history.epochs.size(); ++i)
      phase_metrics.push_back(tr.history.epochs[i].dev_metric);
    const std::size_t in_phase = phase_metrics.size();
    const bool stalled = early_stop(phase_metrics, config.patience, hib).stop;

    if (phase == Phase::kMtl) {
      if (config.use_ltn && (stalled || in_phase >= config.pretrain_epochs)) {
        tr.optimizer.add_parameters(tr.model.attach_ltn(mix_seed(config.seed, kLtnSalt)));
        phase = Phase::kLtn;
        phase_start = tr.history.epochs.size();
      } else if (!config.use_ltn && stalled) {
        break;
      }
    } else if (phase == Phase::kLtn) {
      if (config.use_semi && in_phase >= config.ltn_epochs) {
        phase = Phase::kSemi;
        phase_start = tr.history.epochs.size();
      } else if (!config.use_semi && stalled) {
        break;
      }
    } else if (stalled) {
      break;
    }
  }

  if (best) {
    tr.model.restore(best_params);
    tr.history.best_epoch = tr.history.epochs[*best].epoch;
  } else if (!tr.history.epochs.empty()) {
    // max_epochs ended before any eligible epoch; keep the final state.
    tr.history.best_epoch = tr.history.epochs.back().epoch;
  }
  return TrainResult{std::move(tr.model), std::move(tr.history)};
}

}  // namespace labelmtl
