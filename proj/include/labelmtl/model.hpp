#pragma once

#include "labelmtl/data.hpp"
#include "labelmtl/encoder.hpp"
#include "labelmtl/heads.hpp"
#include "labelmtl/transfer.hpp"

#include <optional>
#include <string>
#include <utility>

namespace labelmtl {

struct ModelConfig {
  std::size_t embedding_dim = 100;
  std::size_t hidden_dim = 100;
  std::size_t label_dim = 100;
  std::size_t ltn_hidden = 100;
  bool use_lel = true;
  LabelFit label_fit = LabelFit::kProject;
  bool use_diversity_feats = true;
  bool use_main_pred_feats = false;
  // When false the transfer loss only reaches the transfer MLP and the label
  // embeddings; auxiliary predictions enter it as constants.
  bool ltn_backprop_to_encoder = false;
};

class Model {
 public:
  Model(ModelConfig config, TaskSet tasks, Vocab vocab, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const TaskSet& tasks() const { return tasks_; }
  const Vocab& vocab() const { return vocab_; }

  // Adds the label transfer network (and, without the joint label layer, the
  // label matrix it reads from). Returns the newly created parameters.
  std::vector<Tensor> attach_ltn(std::uint64_t seed);
  bool has_ltn() const { return ltn_.has_value(); }

  Tensor encode(const Batch& batch) const;
  // Task distribution [B x L_task] from shared encodings h.
  Tensor predict(const Tensor& h, std::size_t task) const;
  // o_task for a task distribution [B x L_task].
  Tensor output_embedding(const Tensor& p_task, std::size_t task) const;
  // Main-task distribution produced by the transfer network; `diversity` is
  // required exactly when diversity features are enabled.
  Tensor transfer(const Tensor& h, const Tensor* diversity) const;

  // Every trainable tensor, including the transfer network once attached.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;

  EncoderParams& encoder() { return encoder_; }
  const EncoderParams& encoder() const { return encoder_; }
  std::vector<TaskLayerParams>& task_layers() { return task_layers_; }
  std::vector<TaskHeadParams>& heads() { return heads_; }
  const std::optional<LabelEmbeddingMatrix>& label_matrix() const { return labels_; }
  std::optional<LabelEmbeddingMatrix>& label_matrix() { return labels_; }
  const std::optional<LtnParams>& ltn() const { return ltn_; }

  // Parameter values, in named_parameters() order.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  void check_task(std::size_t task) const;

  ModelConfig config_;
  TaskSet tasks_;
  Vocab vocab_;
  EncoderParams encoder_;
  std::vector<TaskLayerParams> task_layers_;
  std::vector<TaskHeadParams> heads_;  // baseline mode only
  std::optional<LabelEmbeddingMatrix> labels_;
  std::optional<LtnParams> ltn_;
};

// Main-task pseudo-labels for pool examples, computed in pool order.
std::vector<PseudoLabel> generate_pseudo_labels(std::span<const Example> pool, const Model& model,
                                                std::size_t epoch, std::size_t batch_size = 128,
                                                std::size_t max_len = kDefaultMaxLen);

std::string pseudo_labels_to_jsonl(std::span<const PseudoLabel> labels);

// Versioned JSON checkpoint; parameter arrays carry shape headers and
// round-trip bitwise.
std::string checkpoint_to_json(const Model& model);
Model checkpoint_from_json(const std::string& text);
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace labelmtl
