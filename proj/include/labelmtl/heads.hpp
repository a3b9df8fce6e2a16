#pragma once

#include "labelmtl/autodiff.hpp"
#include "labelmtl/data.hpp"

#include <random>

namespace labelmtl {

using ad::Tensor;

// Per-task output layer of the baseline model: p = softmax(h W^T + b).
struct TaskHeadParams {
  Tensor weights;  // [labels x width]
  Tensor bias;     // [1 x labels]

  static TaskHeadParams init(std::mt19937_64& rng, std::size_t labels, std::size_t width,
                             double limit = 0.1);
};

Tensor softmax_head(const Tensor& h, const TaskHeadParams& head);

// How the hidden width is reconciled with the label embedding width.
enum class LabelFit {
  kProject,  // learned linear map from the hidden width down to label_dim
  kPad,      // label rows implicitly zero-padded to the hidden width
};

struct LabelEmbeddingMatrix {
  Tensor rows;        // [total labels x label_dim]
  Tensor projection;  // [hidden width x label_dim]; only with LabelFit::kProject
  LabelFit fit = LabelFit::kProject;

  std::size_t label_dim() const { return rows.cols(); }
  std::size_t total_labels() const { return rows.rows(); }

  static LabelEmbeddingMatrix init(std::mt19937_64& rng, std::size_t total_labels,
                                   std::size_t label_dim, std::size_t hidden_width, LabelFit fit,
                                   double limit = 0.1);
  std::vector<Tensor> parameters() const;

  // Maps [B x hidden width] into the label space [B x label_dim].
  Tensor fit_hidden(const Tensor& h) const;
  // Rows of one task, [count x label_dim].
  Tensor task_rows(const LabelRows& r) const { return ad::slice_rows(rows, r.begin, r.count); }
};

// c(l, h) = l . h
double label_compatibility(std::span<const double> label, std::span<const double> hidden);

std::vector<double> task_mask(const LabelRows& rows, std::size_t total_labels);

// Masked softmax of (fit(h) L^T) over every label row; entries outside the
// task's rows are exactly zero. Result is [B x total labels].
Tensor lel_predict(const Tensor& h, const LabelEmbeddingMatrix& lel, const LabelRows& task);

// The task's slice of lel_predict, [B x task labels].
Tensor lel_task_distribution(const Tensor& h, const LabelEmbeddingMatrix& lel, const LabelRows& task);

// sum_i weights[i] * losses[i]
Tensor mtl_loss(std::span<const Tensor> task_losses, std::span<const double> weights);

}  // namespace labelmtl
