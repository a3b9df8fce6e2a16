#pragma once

#include "labelmtl/autodiff.hpp"
#include "labelmtl/data.hpp"

#include <array>
#include <random>

namespace labelmtl {

using ad::Tensor;

// o = sum_j p_j l_j for every row of p; p is [B x L_i], rows is [L_i x l].
Tensor output_label_embedding(const Tensor& p, const Tensor& rows);

struct DiversityFeatures {
  double num_types = 0.0;
  double type_token_ratio = 0.0;
  double shannon_entropy = 0.0;  // nats
  double simpson_index = 0.0;    // sum of squared type probabilities
  double renyi_entropy = 0.0;    // order 2, nats

  static constexpr std::size_t kCount = 5;
  std::array<double, kCount> as_array() const {
    return {num_types, type_token_ratio, shannon_entropy, simpson_index, renyi_entropy};
  }
};

DiversityFeatures diversity_features(std::span<const std::string> tokens);

// Stacks the features of the given examples' texts into a [rows x 5] constant.
Tensor diversity_matrix(std::span<const Example> examples, std::span<const std::size_t> rows);

struct LtnLayout {
  std::size_t num_aux = 0;
  std::size_t label_dim = 0;
  bool diversity = false;
  bool main_predictions = false;
  std::size_t hidden = 100;
  std::size_t outputs = 0;  // main task labels

  std::size_t input_width() const {
    return (num_aux + (main_predictions ? 1 : 0)) * label_dim + (diversity ? DiversityFeatures::kCount : 0);
  }
};

// One rectifier hidden layer followed by a softmax over the main task's labels.
struct LtnParams {
  LtnLayout layout;
  Tensor hidden_weights;  // [input x hidden]
  Tensor hidden_bias;     // [1 x hidden]
  Tensor output_weights;  // [hidden x outputs]
  Tensor output_bias;     // [1 x outputs]

  static LtnParams init(std::mt19937_64& rng, const LtnLayout& layout, double limit = 0.1);
  std::vector<Tensor> parameters() const;
};

// aux_outputs in task registration order; main_output only when the layout
// enables main-prediction features; diversity ([B x 5]) only when enabled.
Tensor ltn_forward(std::span<const Tensor> aux_outputs, const Tensor* main_output,
                   const Tensor* diversity, const LtnParams& params);

Tensor ltn_supervised_loss(const Tensor& z, std::span<const std::size_t> gold);

Tensor pseudo_label_loss(const Tensor& p_main, const Tensor& z);

struct PseudoLabel {
  std::string example_id;
  std::vector<double> z;
  std::size_t epoch = 0;
};

}  // namespace labelmtl
