#include "labelmtl/heads.hpp"

#include "labelmtl/encoder.hpp"

namespace labelmtl {

TaskHeadParams TaskHeadParams::init(std::mt19937_64& rng, std::size_t labels, std::size_t width,
                                    double limit) {
  return {Tensor::parameter(labels, width, uniform_values(rng, labels * width, limit)),
          Tensor::parameter(1, labels, std::vector<double>(labels, 0.0))};
}

Tensor softmax_head(const Tensor& h, const TaskHeadParams& head) {
  return ad::softmax(ad::add(ad::matmul_nt(h, head.weights), head.bias));
}

LabelEmbeddingMatrix LabelEmbeddingMatrix::init(std::mt19937_64& rng, std::size_t total_labels,
                                                std::size_t label_dim, std::size_t hidden_width,
                                                LabelFit fit, double limit) {
  if (fit == LabelFit::kPad && label_dim > hidden_width)
    throw ConfigError("label_dim " + std::to_string(label_dim) + " exceeds hidden width " +
                      std::to_string(hidden_width) + "; padding needs label_dim <= hidden width");
  LabelEmbeddingMatrix m;
  m.fit = fit;
  m.rows = Tensor::parameter(total_labels, label_dim, uniform_values(rng, total_labels * label_dim, limit));
  if (fit == LabelFit::kProject)
    m.projection = Tensor::parameter(hidden_width, label_dim,
                                     uniform_values(rng, hidden_width * label_dim, limit));
  return m;
}

std::vector<Tensor> LabelEmbeddingMatrix::parameters() const {
  if (fit == LabelFit::kProject) return {rows, projection};
  return {rows};
}

Tensor LabelEmbeddingMatrix::fit_hidden(const Tensor& h) const {
  if (fit == LabelFit::kProject) return ad::matmul(h, projection);
  // A zero-padded label row only sees the first label_dim hidden coordinates.
  if (h.cols() == label_dim()) return h;
  return ad::slice_cols(h, 0, label_dim());
}

double label_compatibility(std::span<const double> label, std::span<const double> hidden) {
  if (label.size() != hidden.size())
    throw ad::DimensionError("label_compatibility: lengths " + std::to_string(label.size()) + " and " +
                             std::to_string(hidden.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < label.size(); ++i) s += label[i] * hidden[i];
  return s;
}

std::vector<double> task_mask(const LabelRows& rows, std::size_t total_labels) {
  if (rows.begin + rows.count > total_labels || rows.count == 0)
    throw ConfigError("task label rows out of range of the label embedding matrix");
  std::vector<double> m(total_labels, 0.0);
  for (std::size_t i = rows.begin; i < rows.begin + rows.count; ++i) m[i] = 1.0;
  return m;
}

Tensor lel_predict(const Tensor& h, const LabelEmbeddingMatrix& lel, const LabelRows& task) {
  const Tensor scores = ad::matmul_nt(lel.fit_hidden(h), lel.rows);
  return ad::masked_softmax(scores, task_mask(task, lel.total_labels()));
}

Tensor lel_task_distribution(const Tensor& h, const LabelEmbeddingMatrix& lel, const LabelRows& task) {
  return ad::slice_cols(lel_predict(h, lel, task), task.begin, task.count);
}

Tensor mtl_loss(std::span<const Tensor> task_losses, std::span<const double> weights) {
  if (task_losses.size() != weights.size())
    throw ad::DimensionError("mtl_loss: " + std::to_string(task_losses.size()) + " losses but " +
                             std::to_string(weights.size()) + " weights");
  if (task_losses.empty()) return Tensor::scalar(0.0);
  Tensor total = ad::scale(task_losses[0], weights[0]);
  for (std::size_t i = 1; i < task_losses.size(); ++i)
    total = ad::add(total, ad::scale(task_losses[i], weights[i]));
  return total;
}

}  // namespace labelmtl
