#include "labelmtl/encoder.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace labelmtl;
using ad::Tensor;

namespace {

struct Fixture {
  std::vector<Example> examples;
  Vocab vocab;
};

Fixture fixture(const std::vector<std::pair<std::string, std::string>>& rows) {
  Fixture f;
  for (const auto& [text, cond] : rows) {
    Example e;
    e.task = "t";
    e.text = tokenize(text);
    e.condition = tokenize(cond);
    f.examples.push_back(e);
  }
  std::vector<std::vector<Example>> corpus = {f.examples};
  f.vocab = build_vocab(corpus);
  return f;
}

Batch batch_of(const Fixture& f) {
  std::vector<std::size_t> rows(f.examples.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return encode_batch(f.examples, rows, f.vocab, 0);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Step-by-step scalar LSTM with gate order input, forget, output, candidate.
void scalar_cell(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c,
                 const LstmCellParams& p) {
  const std::size_t in = x.size(), H = h.size();
  const auto W = p.weights.values();
  const auto b = p.bias.values();
  std::vector<double> z(4 * H);
  for (std::size_t j = 0; j < 4 * H; ++j) {
    double s = b[j];
    for (std::size_t k = 0; k < in; ++k) s += x[k] * W[k * 4 * H + j];
    for (std::size_t k = 0; k < H; ++k) s += h[k] * W[(in + k) * 4 * H + j];
    z[j] = s;
  }
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sigmoid(z[j]), f = sigmoid(z[H + j]), o = sigmoid(z[2 * H + j]), g = std::tanh(z[3 * H + j]);
    c[j] = f * c[j] + i * g;
    h[j] = o * std::tanh(c[j]);
  }
}

void copy_cell(const LstmCellParams& from, LstmCellParams& to) {
  std::copy(from.weights.values().begin(), from.weights.values().end(), to.weights.mutable_values().begin());
  std::copy(from.bias.values().begin(), from.bias.values().end(), to.bias.mutable_values().begin());
}

}  // namespace

TEST_CASE("lstm cell with zero weights collapses to zero") {
  std::mt19937_64 rng(1);
  LstmCellParams cell = LstmCellParams::init(rng, 3, 2, 0.1, 0.0);
  std::fill(cell.weights.mutable_values().begin(), cell.weights.mutable_values().end(), 0.0);
  const LstmState prev{Tensor::constant(1, 2, 0.0), Tensor::constant(1, 2, 0.0)};
  const auto next = lstm_cell(Tensor::row({0.4, -1.0, 2.0}), prev, cell);
  for (double v : next.h.values()) CHECK(v == 0.0);
  for (double v : next.c.values()) CHECK(v == 0.0);

  LstmCellParams biased = LstmCellParams::init(rng, 3, 2, 0.1, 1.0);
  std::fill(biased.weights.mutable_values().begin(), biased.weights.mutable_values().end(), 0.0);
  const auto still = lstm_cell(Tensor::row({0, 0, 0}), prev, biased);
  for (double v : still.c.values()) CHECK(v == 0.0);
}

TEST_CASE("lstm init follows the documented scheme") {
  std::mt19937_64 rng(4);
  const auto cell = LstmCellParams::init(rng, 5, 3);
  for (double w : cell.weights.values()) CHECK(std::abs(w) <= 0.1);
  const auto b = cell.bias.values();
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(b[3 + j] == 1.0);  // forget gate
    CHECK(b[j] == 0.0);
  }
}

TEST_CASE("lstm cell matches a scalar re-implementation") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t in = 2 + trial % 4, H = 1 + trial % 3;
    LstmCellParams cell{testutil::random_param(rng, in + H, 4 * H, -1, 1), testutil::random_param(rng, 1, 4 * H, -1, 1)};
    std::vector<double> h = testutil::uniform(rng, H, -1, 1), c = testutil::uniform(rng, H, -1, 1);
    LstmState state{Tensor::row(h), Tensor::row(c)};
    for (int t = 0; t < 4; ++t) {
      const auto x = testutil::uniform(rng, in);
      state = lstm_cell(Tensor::row(x), state, cell);
      scalar_cell(x, h, c, cell);
      CHECK(testutil::max_abs_diff(state.h.values(), h) < 1e-10);
      CHECK(testutil::max_abs_diff(state.c.values(), c) < 1e-10);
    }
  }
}

TEST_CASE("length-one text with tied directions gives equal halves") {
  const auto f = fixture({{"solo", "cond"}});
  std::mt19937_64 rng(3);
  EncoderParams p = EncoderParams::init(rng, f.vocab.size(), 4, 3);
  copy_cell(p.text_forward, p.text_backward);
  copy_cell(p.condition_forward, p.condition_backward);
  const Tensor h = conditional_encode(batch_of(f), p);
  REQUIRE(h.cols() == 6);
  for (std::size_t k = 0; k < 3; ++k) CHECK(h.at(0, k) == h.at(0, 3 + k));
}

TEST_CASE("pad-region content does not change encodings") {
  const auto f = fixture({{"a b c d e f", "x y z"}, {"b", "x"}, {"c d", "y z w v"}});
  std::mt19937_64 rng(8);
  const EncoderParams p = EncoderParams::init(rng, f.vocab.size(), 5, 4);
  const Batch clean = batch_of(f);
  Batch noisy = clean;
  std::uniform_int_distribution<std::size_t> any(2, f.vocab.size() - 1);
  for (std::size_t r = 0; r < noisy.size; ++r) {
    for (std::size_t t = noisy.text_lens[r]; t < noisy.text_width; ++t)
      noisy.text_ids[r * noisy.text_width + t] = any(rng);
    for (std::size_t t = noisy.condition_lens[r]; t < noisy.condition_width; ++t)
      noisy.condition_ids[r * noisy.condition_width + t] = any(rng);
  }
  const Tensor a = conditional_encode(clean, p);
  const Tensor b = conditional_encode(noisy, p);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == b.values()[i]);

  // Encoding an example alone agrees with encoding it inside a wider batch.
  const auto alone = fixture({{"b", "x"}});
  Fixture same_vocab = alone;
  same_vocab.vocab = f.vocab;
  const Tensor single = conditional_encode(batch_of(same_vocab), p);
  for (std::size_t k = 0; k < single.cols(); ++k) CHECK(std::abs(single.at(0, k) - a.at(1, k)) < 1e-12);
}

TEST_CASE("the condition influences the encoding") {
  const auto f = fixture({{"same text here", "alpha"}, {"same text here", "beta gamma"}});
  std::mt19937_64 rng(12);
  const EncoderParams p = EncoderParams::init(rng, f.vocab.size(), 4, 3);
  const Tensor h = conditional_encode(batch_of(f), p);
  double diff = 0.0;
  for (std::size_t k = 0; k < h.cols(); ++k) diff = std::max(diff, std::abs(h.at(0, k) - h.at(1, k)));
  CHECK(diff > 1e-6);
}

TEST_CASE("empty condition is allowed, empty text is not") {
  auto f = fixture({{"some words", ""}});
  std::mt19937_64 rng(2);
  const EncoderParams p = EncoderParams::init(rng, f.vocab.size(), 3, 2);
  CHECK_NOTHROW(conditional_encode(batch_of(f), p));
  Batch b = batch_of(f);
  b.text_lens[0] = 0;
  CHECK_THROWS_AS(conditional_encode(b, p), DataError);
}

TEST_CASE("task transform skip connection") {
  std::mt19937_64 rng(6);
  TaskLayerParams zero = TaskLayerParams::init(rng, 4);
  std::fill(zero.weights.mutable_values().begin(), zero.weights.mutable_values().end(), 0.0);
  Tensor h = testutil::random_param(rng, 2, 4);
  const Tensor out = task_transform(h, zero);
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(out.values()[i] == h.values()[i]);

  // With the layer switched off the Jacobian is exactly the identity.
  const Tensor w = Tensor::constant(2, 4, testutil::uniform(rng, 8));
  ad::backward(ad::sum(ad::mul(task_transform(h, zero), w)));
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h.grad()[i] == w.values()[i]);

  // With an active layer the identity term is still there: d(out)/dh - d(relu part)/dh = I.
  const TaskLayerParams live{testutil::random_param(rng, 4, 4), testutil::random_param(rng, 1, 4)};
  std::vector<Tensor> params = {h};
  auto loss = [&] { return ad::sum(ad::mul(task_transform(h, live), w)); };
  CHECK(ad::grad_check(loss, params).max_relative_error < 1e-4);

  const TaskLayerParams other{testutil::random_param(rng, 4, 4), testutil::random_param(rng, 1, 4)};
  const Tensor a = task_transform(h, live), b = task_transform(h, other);
  CHECK(testutil::max_abs_diff(a.values(), b.values()) > 1e-6);
}

TEST_CASE("full encoder passes grad_check") {
  const auto f = fixture({{"a b c", "x"}, {"b c d e", "y z"}, {"e", ""}});
  std::mt19937_64 rng(30);
  EncoderParams p = EncoderParams::init(rng, f.vocab.size(), 3, 2);
  // Scale weights up so the check is not dominated by near-linear behaviour.
  for (auto t : p.parameters())
    for (auto& v : t.mutable_values()) v *= 5.0;
  const Batch b = batch_of(f);
  const Tensor w = Tensor::constant(3, 4, testutil::uniform(rng, 12));
  auto params = p.parameters();
  auto loss = [&] { return ad::sum(ad::mul(conditional_encode(b, p), w)); };
  const auto rep = ad::grad_check(loss, params);
  CHECK(rep.max_relative_error < 1e-4);
}
