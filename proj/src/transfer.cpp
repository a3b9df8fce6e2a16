#include "labelmtl/transfer.hpp"

#include "labelmtl/encoder.hpp"

#include <cmath>
#include <map>

namespace labelmtl {

Tensor output_label_embedding(const Tensor& p, const Tensor& rows) {
  if (p.cols() != rows.rows())
    throw ad::DimensionError("output_label_embedding: distribution " + p.shape().str() +
                             " does not match label rows " + rows.shape().str());
  return ad::matmul(p, rows);
}

DiversityFeatures diversity_features(std::span<const std::string> tokens) {
  if (tokens.empty()) throw DataError("diversity_features: empty token list");
  std::map<std::string_view, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];
  const double n = static_cast<double>(tokens.size());
  DiversityFeatures f;
  f.num_types = static_cast<double>(counts.size());
  f.type_token_ratio = f.num_types / n;
  for (const auto& [type, c] : counts) {
    const double p = static_cast<double>(c) / n;
    f.shannon_entropy -= p * std::log(p);
    f.simpson_index += p * p;
  }
  // Clamp the -0.0 of a single-type text.
  f.shannon_entropy = std::max(f.shannon_entropy, 0.0);
  f.renyi_entropy = -std::log(f.simpson_index);
  return f;
}

Tensor diversity_matrix(std::span<const Example> examples, std::span<const std::size_t> rows) {
  std::vector<double> v;
  v.reserve(rows.size() * DiversityFeatures::kCount);
  for (std::size_t r : rows) {
    const auto f = diversity_features(examples[r].text).as_array();
    v.insert(v.end(), f.begin(), f.end());
  }
  return Tensor::constant(rows.size(), DiversityFeatures::kCount, std::move(v));
}

LtnParams LtnParams::init(std::mt19937_64& rng, const LtnLayout& layout, double limit) {
  if (layout.outputs == 0) throw ConfigError("label transfer network needs at least one output label");
  LtnParams p;
  p.layout = layout;
  const std::size_t in = layout.input_width();
  p.hidden_weights = Tensor::parameter(in, layout.hidden, uniform_values(rng, in * layout.hidden, limit));
  p.hidden_bias = Tensor::parameter(1, layout.hidden, std::vector<double>(layout.hidden, 0.0));
  p.output_weights =
      Tensor::parameter(layout.hidden, layout.outputs, uniform_values(rng, layout.hidden * layout.outputs, limit));
  p.output_bias = Tensor::parameter(1, layout.outputs, std::vector<double>(layout.outputs, 0.0));
  return p;
}

std::vector<Tensor> LtnParams::parameters() const {
  return {hidden_weights, hidden_bias, output_weights, output_bias};
}

Tensor ltn_forward(std::span<const Tensor> aux_outputs, const Tensor* main_output,
                   const Tensor* diversity, const LtnParams& params) {
  const LtnLayout& lay = params.layout;
  if (aux_outputs.size() != lay.num_aux)
    throw ad::DimensionError("ltn_forward: expected " + std::to_string(lay.num_aux) +
                             " auxiliary outputs, got " + std::to_string(aux_outputs.size()));
  if ((main_output != nullptr) != lay.main_predictions)
    throw ad::DimensionError("ltn_forward: main-prediction features do not match the network layout");
  if ((diversity != nullptr) != lay.diversity)
    throw ad::DimensionError("ltn_forward: diversity features do not match the network layout");
  std::vector<Tensor> parts(aux_outputs.begin(), aux_outputs.end());
  if (main_output) parts.push_back(*main_output);
  if (diversity) parts.push_back(*diversity);
  const Tensor input = ad::concat_cols(parts);
  if (input.cols() != lay.input_width())
    throw ad::DimensionError("ltn_forward: input width " + std::to_string(input.cols()) +
                             " but the network expects " + std::to_string(lay.input_width()));
  const Tensor hidden = ad::relu(ad::add(ad::matmul(input, params.hidden_weights), params.hidden_bias));
  return ad::softmax(ad::add(ad::matmul(hidden, params.output_weights), params.output_bias));
}

Tensor ltn_supervised_loss(const Tensor& z, std::span<const std::size_t> gold) {
  return ad::cross_entropy(z, gold);
}

Tensor pseudo_label_loss(const Tensor& p_main, const Tensor& z) { return ad::mse(p_main, z); }

}  // namespace labelmtl
