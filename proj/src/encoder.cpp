#include "labelmtl/encoder.hpp"

namespace labelmtl {

std::vector<double> uniform_values(std::mt19937_64& rng, std::size_t n, double limit) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

LstmCellParams LstmCellParams::init(std::mt19937_64& rng, std::size_t input, std::size_t hidden,
                                    double limit, double forget_bias) {
  LstmCellParams p;
  p.weights = Tensor::parameter(input + hidden, 4 * hidden, uniform_values(rng, (input + hidden) * 4 * hidden, limit));
  std::vector<double> b(4 * hidden, 0.0);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = forget_bias;
  p.bias = Tensor::parameter(1, 4 * hidden, std::move(b));
  return p;
}

LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmCellParams& cell) {
  const std::size_t d = cell.hidden_dim();
  const Tensor parts[] = {x, prev.h};
  const Tensor z = ad::add(ad::matmul(ad::concat_cols(parts), cell.weights), cell.bias);
  const Tensor in = ad::sigmoid(ad::slice_cols(z, 0, d));
  const Tensor forget = ad::sigmoid(ad::slice_cols(z, d, d));
  const Tensor out = ad::sigmoid(ad::slice_cols(z, 2 * d, d));
  const Tensor cand = ad::tanh(ad::slice_cols(z, 3 * d, d));
  const Tensor c = ad::add(ad::mul(forget, prev.c), ad::mul(in, cand));
  return {ad::mul(out, ad::tanh(c)), c};
}

EncoderParams EncoderParams::init(std::mt19937_64& rng, std::size_t vocab, std::size_t emb,
                                  std::size_t hidden) {
  EncoderParams p;
  p.word_embeddings = Tensor::parameter(vocab, emb, uniform_values(rng, vocab * emb, 0.1));
  p.condition_forward = LstmCellParams::init(rng, emb, hidden);
  p.condition_backward = LstmCellParams::init(rng, emb, hidden);
  p.text_forward = LstmCellParams::init(rng, emb, hidden);
  p.text_backward = LstmCellParams::init(rng, emb, hidden);
  return p;
}

std::vector<Tensor> EncoderParams::parameters() const {
  return {word_embeddings,         condition_forward.weights, condition_forward.bias,
          condition_backward.weights, condition_backward.bias, text_forward.weights,
          text_forward.bias,       text_backward.weights,     text_backward.bias};
}

LstmState run_lstm(const Tensor& embeddings, std::span<const std::size_t> ids, std::size_t width,
                   std::span<const std::size_t> lens, bool forward, const LstmCellParams& cell,
                   const LstmState& init) {
  const std::size_t rows = lens.size();
  LstmState state = init;
  std::vector<std::size_t> step_ids(rows);
  std::vector<bool> bool_mask(rows);
  for (std::size_t k = 0; k < width; ++k) {
    const std::size_t t = forward ? k : width - 1 - k;
    bool any = false;
    for (std::size_t r = 0; r < rows; ++r) {
      step_ids[r] = ids[r * width + t];
      bool_mask[r] = t < lens[r];
      any = any || bool_mask[r];
    }
    if (!any) continue;
    const Tensor x = ad::embedding_lookup(embeddings, step_ids);
    const LstmState next = lstm_cell(x, state, cell);
    state = {ad::select_rows(bool_mask, next.h, state.h), ad::select_rows(bool_mask, next.c, state.c)};
  }
  return state;
}

Tensor conditional_encode(const Batch& batch, const EncoderParams& params) {
  const std::size_t rows = batch.size;
  const std::size_t d = params.hidden_dim();
  for (std::size_t r = 0; r < rows; ++r)
    if (batch.text_lens[r] == 0) throw DataError("conditional_encode: empty text sequence");
  const LstmState zero{Tensor::constant(rows, d, 0.0), Tensor::constant(rows, d, 0.0)};

  const LstmState cond_fw = run_lstm(params.word_embeddings, batch.condition_ids, batch.condition_width,
                                     batch.condition_lens, true, params.condition_forward, zero);
  const LstmState cond_bw = run_lstm(params.word_embeddings, batch.condition_ids, batch.condition_width,
                                     batch.condition_lens, false, params.condition_backward, zero);

  const LstmState text_fw = run_lstm(params.word_embeddings, batch.text_ids, batch.text_width, batch.text_lens,
                                     true, params.text_forward, {zero.h, cond_fw.c});
  const LstmState text_bw = run_lstm(params.word_embeddings, batch.text_ids, batch.text_width, batch.text_lens,
                                     false, params.text_backward, {zero.h, cond_bw.c});
  const Tensor halves[] = {text_fw.h, text_bw.h};
  return ad::concat_cols(halves);
}

TaskLayerParams TaskLayerParams::init(std::mt19937_64& rng, std::size_t width, double limit) {
  return {Tensor::parameter(width, width, uniform_values(rng, width * width, limit)),
          Tensor::parameter(1, width, std::vector<double>(width, 0.0))};
}

Tensor task_transform(const Tensor& h, const TaskLayerParams& layer) {
  return ad::add(ad::relu(ad::add(ad::matmul(h, layer.weights), layer.bias)), h);
}

}  // namespace labelmtl
