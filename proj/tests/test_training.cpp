#include "labelmtl/training.hpp"
#include "synth_fixture.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace labelmtl;
using ad::Tensor;

TEST_CASE("early stop examples") {
  const std::vector<double> plateau = {1, 2, 3, 3, 3, 3};
  for (std::size_t n = 1; n < plateau.size(); ++n)
    CHECK_FALSE(early_stop(std::span(plateau).first(n), 3, true).stop);
  const auto d = early_stop(plateau, 3, true);
  CHECK(d.stop);
  CHECK(d.best == 2);

  std::vector<double> rising;
  for (int i = 0; i < 50; ++i) {
    rising.push_back(i);
    CHECK_FALSE(early_stop(rising, 3, true).stop);
  }

  const std::vector<double> mae = {0.9, 0.8, 0.85, 0.86, 0.87};
  CHECK_FALSE(early_stop(std::span(mae).first(4), 3, false).stop);
  const auto m = early_stop(mae, 3, false);
  CHECK(m.stop);
  CHECK(m.best == 1);

  const std::vector<double> tie = {0.5, 0.7, 0.7};
  CHECK(early_stop(tie, 3, true).best == 1);
}

TEST_CASE("config validation happens before training") {
  auto s = testutil::synth_tasks(1, 20, 10);
  TrainConfig c = testutil::tiny_config();
  c.use_semi = true;
  CHECK_THROWS_AS(train(c, s.tasks, s.data), ConfigError);
  c.use_semi = false;
  c.use_ltn = true;
  TaskSpec only = s.tasks[0];
  const TaskSet single({only}, only.name);
  const std::vector<Dataset> one = {s.data[0]};
  CHECK_THROWS_AS(train(c, single, one), ConfigError);
  c.use_ltn = false;
  c.batch_size = 0;
  CHECK_THROWS_AS(train(c, s.tasks, s.data), ConfigError);
}

TEST_CASE("training is deterministic") {
  const auto s = testutil::synth_tasks(2, 60, 20);
  TrainConfig c = testutil::tiny_config();
  c.use_ltn = true;
  c.use_semi = true;
  const auto a = train(c, s.tasks, s.data);
  const auto b = train(c, s.tasks, s.data);
  CHECK(a.history.to_csv() == b.history.to_csv());
  REQUIRE(a.history.steps.size() == b.history.steps.size());
  for (std::size_t i = 0; i < a.history.steps.size(); ++i) CHECK(a.history.steps[i].total == b.history.steps[i].total);
  CHECK(a.model.snapshot() == b.model.snapshot());

  c.seed = 3;
  const auto other = train(c, s.tasks, s.data);
  CHECK(other.history.to_csv() != a.history.to_csv());
}

TEST_CASE("phased run: ordering, loss additivity, pseudo-label validity, best snapshot") {
  const auto s = testutil::synth_tasks(4, 60, 20);
  TrainConfig c = testutil::tiny_config();
  c.use_ltn = true;
  c.use_semi = true;
  c.max_epochs = 7;
  const auto r = train(c, s.tasks, s.data);
  const auto& h = r.history;

  // Phases never go backwards and follow mtl -> ltn -> semi.
  REQUIRE(!h.epochs.empty());
  for (std::size_t i = 1; i < h.epochs.size(); ++i) CHECK(h.epochs[i].phase >= h.epochs[i - 1].phase);
  CHECK(h.epochs.front().phase == Phase::kMtl);
  std::size_t mtl_epochs = 0, ltn_epochs = 0, semi_epochs = 0;
  for (const auto& e : h.epochs) {
    CHECK(e.epoch == (&e - h.epochs.data()) + 1);
    if (e.phase == Phase::kMtl) ++mtl_epochs;
    if (e.phase == Phase::kLtn) ++ltn_epochs;
    if (e.phase == Phase::kSemi) ++semi_epochs;
    CHECK(e.ltn_dev_metric.has_value() == (e.phase != Phase::kMtl));
    CHECK(e.pseudo_loss.has_value() == (e.phase == Phase::kSemi));
  }
  CHECK(mtl_epochs <= c.pretrain_epochs);
  CHECK(ltn_epochs == c.ltn_epochs);
  CHECK(semi_epochs >= 1);

  for (const auto& st : h.steps) {
    CHECK(std::abs(st.total - (st.mtl + st.ltn + st.pseudo)) < 1e-10);
    CHECK(st.pseudo >= 0.0);
    if (st.phase == Phase::kMtl) CHECK(st.ltn == 0.0);
    if (st.phase != Phase::kSemi) CHECK(st.pseudo == 0.0);
    if (st.task != s.tasks.main_index()) {
      CHECK(st.ltn == 0.0);
      CHECK(st.pseudo == 0.0);
    }
  }

  CHECK(h.pseudo_labels.size() == semi_epochs);
  for (const auto& epoch_labels : h.pseudo_labels) {
    CHECK(epoch_labels.size() == s.data[1].train.size());
    for (const auto& pl : epoch_labels) {
      double sum = 0.0;
      for (double z : pl.z) {
        CHECK(z >= 0.0);
        CHECK(z <= 1.0);
        sum += z;
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }

  // The returned model reproduces its best history entry, which is the best eligible epoch.
  REQUIRE(h.best_epoch >= 1);
  const auto& best = h.epochs[h.best_epoch - 1];
  CHECK(best.phase != Phase::kMtl);
  CHECK(evaluate(r.model, s.data[0].dev, 0, false).value == best.dev_metric);
  for (const auto& e : h.epochs)
    if (e.phase != Phase::kMtl) CHECK(e.dev_metric <= best.dev_metric);
}

TEST_CASE("single-task baseline") {
  const auto s = testutil::synth_tasks(5, 40, 20);
  TaskSpec only = s.tasks[0];
  const TaskSet single({only}, only.name);
  const std::vector<Dataset> one = {s.data[0]};
  TrainConfig c = testutil::tiny_config();
  c.model.use_lel = false;
  c.max_epochs = 2;
  const auto r = train(c, single, one);
  CHECK(!r.model.label_matrix().has_value());
  for (const auto& st : r.history.steps) {
    CHECK(st.task == 0);
    CHECK(st.total == st.mtl);
  }
  // Every step of an epoch trains the single task, one pass over its data.
  const std::size_t batches = (40 + c.batch_size - 1) / c.batch_size;
  CHECK(r.history.steps.size() == batches * r.history.epochs.size());
}

TEST_CASE("history CSV layout") {
  const auto s = testutil::synth_tasks(6, 30, 10);
  TrainConfig c = testutil::tiny_config();
  c.use_ltn = true;
  c.max_epochs = 3;
  const auto r = train(c, s.tasks, s.data);
  std::istringstream in(r.history.to_csv());
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "epoch,phase,loss_task_a,loss_task_b,ltn_loss,pseudo_loss,dev_acc,ltn_dev_acc");
  CHECK(first.rfind("1,mtl,", 0) == 0);
}

TEST_CASE("LTN loss respects the stop-gradient contract") {
  const auto s = testutil::synth_tasks(7, 20, 5);
  std::vector<std::vector<Example>> corpus = {s.data[0].train, s.data[1].train};
  const Vocab vocab = build_vocab(corpus);
  const auto batches = make_batches(s.data[0].train, vocab, 0, 8, 1);
  for (bool backprop : {false, true}) {
    ModelConfig mc = testutil::tiny_config().model;
    mc.ltn_backprop_to_encoder = backprop;
    Model m(mc, s.tasks, vocab, 11);
    m.attach_ltn(12);
    const Batch& b = batches[0];
    const Tensor h = m.encode(b);
    const Tensor div = diversity_matrix(s.data[0].train, b.source);
    ad::backward(ltn_supervised_loss(m.transfer(h, &div), *b.label_ids));
    double encoder = 0.0, rows = 0.0, ltn = 0.0;
    for (const auto& [name, t] : m.named_parameters()) {
      double mag = 0.0;
      if (t.has_grad())
        for (double g : t.grad()) mag += std::abs(g);
      if (name.rfind("encoder.", 0) == 0 || name.rfind("task.", 0) == 0 || name == "labels.projection")
        encoder += mag;
      else if (name == "labels.rows")
        rows += mag;
      else
        ltn += mag;
    }
    CAPTURE(backprop);
    CHECK(rows > 0.0);
    CHECK(ltn > 0.0);
    if (backprop) CHECK(encoder > 0.0);
    else CHECK(encoder == 0.0);
  }
}

TEST_CASE("full toy model passes grad_check") {
  const auto s = testutil::synth_tasks(8, 12, 4);
  std::vector<std::vector<Example>> corpus = {s.data[0].train, s.data[1].train};
  const Vocab vocab = build_vocab(corpus);
  ModelConfig mc;
  mc.embedding_dim = 3;
  mc.hidden_dim = 2;
  mc.label_dim = 3;
  mc.ltn_hidden = 3;
  mc.ltn_backprop_to_encoder = true;
  Model m(mc, s.tasks, vocab, 21);
  m.attach_ltn(22);
  const auto ba = make_batches(s.data[0].train, vocab, 0, 3, 1)[0];
  const auto bb = make_batches(s.data[1].train, vocab, 1, 3, 1)[0];
  const Tensor div = diversity_matrix(s.data[0].train, ba.source);
  auto loss = [&] {
    const Tensor ha = m.encode(ba), hb = m.encode(bb);
    const Tensor la = ad::cross_entropy(m.predict(ha, 0), *ba.label_ids);
    const Tensor lb = ad::cross_entropy(m.predict(hb, 1), *bb.label_ids);
    const Tensor lt = ltn_supervised_loss(m.transfer(ha, &div), *ba.label_ids);
    return ad::add(ad::add(la, lb), lt);
  };
  // Keep every ReLU pre-activation well away from its kink so central
  // differences stay on one side of it.
  std::mt19937_64 rng(23);
  for (auto& layer : m.task_layers())
    for (auto& v : layer.bias.mutable_values()) v = std::uniform_real_distribution<double>(0.05, 0.3)(rng) *
                                                    (rng() % 2 ? 1.0 : -1.0);
  for (const auto* b : {&ba, &bb}) {
    const Tensor h = m.encode(*b);
    const auto& layer = m.task_layers()[b == &ba ? 0 : 1];
    for (std::size_t r = 0; r < h.rows(); ++r)
      for (std::size_t c = 0; c < h.cols(); ++c) {
        double z = layer.bias.at(0, c);
        for (std::size_t k = 0; k < h.cols(); ++k) z += h.at(r, k) * layer.weights.at(k, c);
        REQUIRE(std::abs(z) > 1e-3);
      }
  }
  auto params = m.parameters();
  const auto rep = ad::grad_check(loss, params);
  CAPTURE(rep.worst_param);
  CAPTURE(rep.analytic);
  CAPTURE(rep.numeric);
  CHECK(rep.max_relative_error < 1e-4);
}

TEST_CASE("evaluate errors") {
  const auto s = testutil::synth_tasks(9, 10, 5);
  std::vector<std::vector<Example>> corpus = {s.data[0].train, s.data[1].train};
  const Model m(testutil::tiny_config().model, s.tasks, build_vocab(corpus), 1);
  CHECK_THROWS_AS(evaluate(m, std::vector<Example>{}, 0, false), metrics::MetricError);
  auto unlabelled = s.data[0].dev;
  unlabelled[0].label_id.reset();
  CHECK_THROWS_AS(evaluate(m, unlabelled, 0, false), metrics::MetricError);
  CHECK_THROWS(evaluate(m, s.data[0].dev, 0, true));  // no LTN attached
}

TEST_CASE("pseudo-label generation") {
  const auto s = testutil::synth_tasks(10, 20, 5);
  std::vector<std::vector<Example>> corpus = {s.data[0].train, s.data[1].train};
  Model m(testutil::tiny_config().model, s.tasks, build_vocab(corpus), 1);
  m.attach_ltn(2);
  CHECK(generate_pseudo_labels(std::vector<Example>{}, m, 1).empty());
  const auto pool = unlabelled_pool(s.tasks, s.data);
  CHECK(pool.size() == s.data[1].train.size());
  for (const auto& ex : pool) {
    CHECK(!ex.label_id);
    CHECK(ex.task == "task_a");
  }
  const auto a = generate_pseudo_labels(pool, m, 3, 7);
  const auto b = generate_pseudo_labels(pool, m, 3, 64);
  REQUIRE(a.size() == pool.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].example_id == pool[i].id);
    CHECK(a[i].epoch == 3);
    CHECK(testutil::max_abs_diff(a[i].z, b[i].z) < 1e-12);
    double sum = 0.0;
    for (double z : a[i].z) sum += z;
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
  const std::string jsonl = pseudo_labels_to_jsonl(a);
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == static_cast<long>(a.size()));
  CHECK(jsonl.find("\"id\"") != std::string::npos);
}

TEST_CASE("checkpoint round trip is bitwise") {
  const auto s = testutil::synth_tasks(11, 40, 20);
  TrainConfig c = testutil::tiny_config();
  c.use_ltn = true;
  c.max_epochs = 4;
  const auto r = train(c, s.tasks, s.data);
  const std::string text = checkpoint_to_json(r.model);
  const Model back = checkpoint_from_json(text);
  CHECK(back.snapshot() == r.model.snapshot());
  CHECK(back.has_ltn());
  CHECK(back.vocab() == r.model.vocab());
  CHECK(checkpoint_to_json(back) == text);
  CHECK(evaluate(back, s.data[0].dev, 0, false).value == evaluate(r.model, s.data[0].dev, 0, false).value);
  CHECK(evaluate(back, s.data[0].dev, 0, true).value == evaluate(r.model, s.data[0].dev, 0, true).value);

  const auto path = std::filesystem::temp_directory_path() / "labelmtl_ckpt_test.json";
  save_checkpoint(r.model, path.string());
  CHECK(load_checkpoint(path.string()).snapshot() == r.model.snapshot());
  std::filesystem::remove(path);

  CHECK_THROWS(checkpoint_from_json("{\"format\":\"something-else\"}"));
}
