#pragma once

#include "labelmtl/autodiff.hpp"
#include "labelmtl/data.hpp"

#include <random>
#include <utility>

namespace labelmtl {

using ad::Tensor;

std::vector<double> uniform_values(std::mt19937_64& rng, std::size_t n, double limit);

// Gate layout along the 4*hidden axis: input, forget, output, candidate.
struct LstmCellParams {
  Tensor weights;  // [(input + hidden) x 4*hidden]
  Tensor bias;     // [1 x 4*hidden]

  std::size_t input_dim() const { return weights.rows() - hidden_dim(); }
  std::size_t hidden_dim() const { return bias.cols() / 4; }

  static LstmCellParams init(std::mt19937_64& rng, std::size_t input, std::size_t hidden,
                             double limit = 0.1, double forget_bias = 1.0);
};

struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmCellParams& cell);

struct EncoderParams {
  Tensor word_embeddings;  // [vocab x emb]
  LstmCellParams condition_forward;
  LstmCellParams condition_backward;
  LstmCellParams text_forward;
  LstmCellParams text_backward;

  std::size_t embedding_dim() const { return word_embeddings.cols(); }
  std::size_t hidden_dim() const { return text_forward.hidden_dim(); }
  std::size_t output_dim() const { return 2 * hidden_dim(); }

  static EncoderParams init(std::mt19937_64& rng, std::size_t vocab, std::size_t emb, std::size_t hidden);
  std::vector<Tensor> parameters() const;
};

// Runs one direction over a padded id matrix, updating only rows whose
// sequence covers the current position.
LstmState run_lstm(const Tensor& embeddings, std::span<const std::size_t> ids, std::size_t width,
                   std::span<const std::size_t> lens, bool forward, const LstmCellParams& cell,
                   const LstmState& init);

// Condition BiLSTM final cell states seed the text BiLSTM (per direction,
// zero hidden state); returns [text forward final h, text backward final h].
Tensor conditional_encode(const Batch& batch, const EncoderParams& params);

struct TaskLayerParams {
  Tensor weights;  // [width x width]
  Tensor bias;     // [1 x width]

  static TaskLayerParams init(std::mt19937_64& rng, std::size_t width, double limit = 0.1);
};

// relu(h W + b) + h
Tensor task_transform(const Tensor& h, const TaskLayerParams& layer);

}  // namespace labelmtl
