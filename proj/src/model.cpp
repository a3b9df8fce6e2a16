#include "labelmtl/model.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace labelmtl {

using json = nlohmann::ordered_json;

Model::Model(ModelConfig config, TaskSet tasks, Vocab vocab, std::uint64_t seed)
    : config_(config), tasks_(std::move(tasks)), vocab_(std::move(vocab)) {
  if (config_.embedding_dim == 0 || config_.hidden_dim == 0 || config_.label_dim == 0)
    throw ConfigError("model dimensions must be positive");
  std::mt19937_64 rng(seed);
  encoder_ = EncoderParams::init(rng, vocab_.size(), config_.embedding_dim, config_.hidden_dim);
  const std::size_t width = encoder_.output_dim();
  for (std::size_t t = 0; t < tasks_.size(); ++t) task_layers_.push_back(TaskLayerParams::init(rng, width));
  if (config_.use_lel) {
    labels_ = LabelEmbeddingMatrix::init(rng, tasks_.total_labels(), config_.label_dim, width, config_.label_fit);
  } else {
    for (std::size_t t = 0; t < tasks_.size(); ++t)
      heads_.push_back(TaskHeadParams::init(rng, tasks_[t].num_labels(), width));
  }
}

std::vector<Tensor> Model::attach_ltn(std::uint64_t seed) {
  if (ltn_) throw std::logic_error("label transfer network already attached");
  if (tasks_.size() < 2) throw ConfigError("the label transfer network needs at least two tasks");
  std::mt19937_64 rng(seed);
  std::vector<Tensor> created;
  if (!labels_) {
    LabelEmbeddingMatrix m;
    m.fit = LabelFit::kPad;
    m.rows = Tensor::parameter(tasks_.total_labels(), config_.label_dim,
                               uniform_values(rng, tasks_.total_labels() * config_.label_dim, 0.1));
    labels_ = m;
    created.push_back(m.rows);
  }
  LtnLayout layout;
  layout.num_aux = tasks_.size() - 1;
  layout.label_dim = config_.label_dim;
  layout.diversity = config_.use_diversity_feats;
  layout.main_predictions = config_.use_main_pred_feats;
  layout.hidden = config_.ltn_hidden;
  layout.outputs = tasks_.main().num_labels();
  ltn_ = LtnParams::init(rng, layout);
  for (const auto& p : ltn_->parameters()) created.push_back(p);
  return created;
}

void Model::check_task(std::size_t task) const {
  if (task >= tasks_.size()) throw ConfigError("unknown task index " + std::to_string(task));
}

Tensor Model::encode(const Batch& batch) const { return conditional_encode(batch, encoder_); }

Tensor Model::predict(const Tensor& h, std::size_t task) const {
  check_task(task);
  const Tensor ht = task_transform(h, task_layers_[task]);
  if (config_.use_lel) return lel_task_distribution(ht, *labels_, tasks_[task].label_rows);
  return softmax_head(ht, heads_[task]);
}

Tensor Model::output_embedding(const Tensor& p_task, std::size_t task) const {
  check_task(task);
  if (!labels_) throw std::logic_error("output label embeddings need a label embedding matrix");
  return output_label_embedding(p_task, labels_->task_rows(tasks_[task].label_rows));
}

Tensor Model::transfer(const Tensor& h, const Tensor* diversity) const {
  if (!ltn_) throw std::logic_error("model has no label transfer network");
  auto source = [&](std::size_t task) {
    Tensor p = predict(h, task);
    if (!config_.ltn_backprop_to_encoder) p = ad::stop_gradient(p);
    return output_embedding(p, task);
  };
  std::vector<Tensor> aux;
  for (std::size_t t : tasks_.auxiliary()) aux.push_back(source(t));
  std::optional<Tensor> main;
  if (config_.use_main_pred_feats) main = source(tasks_.main_index());
  return ltn_forward(aux, main ? &*main : nullptr, diversity, *ltn_);
}

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  const char* enc_names[] = {"embeddings",          "condition_fw.weights", "condition_fw.bias",
                             "condition_bw.weights", "condition_bw.bias",    "text_fw.weights",
                             "text_fw.bias",        "text_bw.weights",      "text_bw.bias"};
  const auto enc = encoder_.parameters();
  for (std::size_t i = 0; i < enc.size(); ++i) out.emplace_back(std::string("encoder.") + enc_names[i], enc[i]);
  for (std::size_t t = 0; t < tasks_.size(); ++t) {
    const std::string pre = "task." + tasks_[t].name + ".";
    out.emplace_back(pre + "layer.weights", task_layers_[t].weights);
    out.emplace_back(pre + "layer.bias", task_layers_[t].bias);
    if (!config_.use_lel) {
      out.emplace_back(pre + "head.weights", heads_[t].weights);
      out.emplace_back(pre + "head.bias", heads_[t].bias);
    }
  }
  if (labels_) {
    out.emplace_back("labels.rows", labels_->rows);
    if (labels_->fit == LabelFit::kProject) out.emplace_back("labels.projection", labels_->projection);
  }
  if (ltn_) {
    out.emplace_back("ltn.hidden.weights", ltn_->hidden_weights);
    out.emplace_back("ltn.hidden.bias", ltn_->hidden_bias);
    out.emplace_back("ltn.output.weights", ltn_->output_weights);
    out.emplace_back("ltn.output.bias", ltn_->output_bias);
  }
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<std::vector<double>> Model::snapshot() const {
  std::vector<std::vector<double>> out;
  for (const auto& t : parameters()) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

void Model::restore(const std::vector<std::vector<double>>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw std::logic_error("snapshot does not match the model's parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto dst = params[k].mutable_values();
    if (dst.size() != values[k].size()) throw std::logic_error("snapshot shape mismatch");
    std::copy(values[k].begin(), values[k].end(), dst.begin());
  }
}

std::vector<PseudoLabel> generate_pseudo_labels(std::span<const Example> pool, const Model& model,
                                                std::size_t epoch, std::size_t batch_size, std::size_t max_len) {
  std::vector<PseudoLabel> out;
  if (pool.empty()) return out;
  if (!model.has_ltn()) throw std::logic_error("pseudo-labelling needs a label transfer network");
  const bool div = model.config().use_diversity_feats;
  out.reserve(pool.size());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < pool.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, pool.size() - start);
    rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = start + i;
    const Batch b = encode_batch(pool, rows, model.vocab(), model.tasks().main_index(), max_len);
    std::optional<Tensor> feats;
    if (div) feats = diversity_matrix(pool, rows);
    const Tensor z = model.transfer(model.encode(b), feats ? &*feats : nullptr);
    for (std::size_t r = 0; r < n; ++r) {
      PseudoLabel pl;
      pl.example_id = pool[start + r].id;
      pl.epoch = epoch;
      pl.z.assign(z.values().begin() + static_cast<std::ptrdiff_t>(r * z.cols()),
                  z.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * z.cols()));
      out.push_back(std::move(pl));
    }
  }
  return out;
}

std::string pseudo_labels_to_jsonl(std::span<const PseudoLabel> labels) {
  std::string out;
  for (const auto& pl : labels) {
    json j;
    j["id"] = pl.example_id;
    j["z"] = pl.z;
    j["epoch"] = pl.epoch;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

constexpr const char* kFormat = "labelmtl-checkpoint";
constexpr int kVersion = 1;

json model_config_json(const ModelConfig& c) {
  json j;
  j["embedding_dim"] = c.embedding_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["label_dim"] = c.label_dim;
  j["ltn_hidden"] = c.ltn_hidden;
  j["use_lel"] = c.use_lel;
  j["label_fit"] = c.label_fit == LabelFit::kProject ? "project" : "pad";
  j["use_diversity_feats"] = c.use_diversity_feats;
  j["use_main_pred_feats"] = c.use_main_pred_feats;
  j["ltn_backprop_to_encoder"] = c.ltn_backprop_to_encoder;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.label_dim = j.at("label_dim").get<std::size_t>();
  c.ltn_hidden = j.at("ltn_hidden").get<std::size_t>();
  c.use_lel = j.at("use_lel").get<bool>();
  c.label_fit = j.at("label_fit").get<std::string>() == "pad" ? LabelFit::kPad : LabelFit::kProject;
  c.use_diversity_feats = j.at("use_diversity_feats").get<bool>();
  c.use_main_pred_feats = j.at("use_main_pred_feats").get<bool>();
  c.ltn_backprop_to_encoder = j.at("ltn_backprop_to_encoder").get<bool>();
  return c;
}

}  // namespace

std::string checkpoint_to_json(const Model& model) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["model_config"] = model_config_json(model.config());
  j["main_task"] = model.tasks().main().name;
  json tasks = json::array();
  for (const auto& t : model.tasks().tasks()) {
    json tj;
    tj["name"] = t.name;
    tj["labels"] = t.labels;
    tj["metric"] = std::string(metric_name(t.metric));
    tj["loss_weight"] = t.loss_weight;
    tasks.push_back(tj);
  }
  j["tasks"] = tasks;
  j["vocab"] = model.vocab().tokens();
  j["has_ltn"] = model.has_ltn();
  json params = json::array();
  for (const auto& [name, t] : model.named_parameters()) {
    json pj;
    pj["name"] = name;
    pj["rows"] = t.rows();
    pj["cols"] = t.cols();
    pj["values"] = std::vector<double>(t.values().begin(), t.values().end());
    params.push_back(pj);
  }
  j["parameters"] = params;
  return j.dump();
}

Model checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) throw DataError("not a labelmtl checkpoint");
    if (j.at("version").get<int>() != kVersion)
      throw DataError("unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
    std::vector<TaskSpec> specs;
    for (const auto& tj : j.at("tasks")) {
      TaskSpec t;
      t.name = tj.at("name").get<std::string>();
      t.labels = tj.at("labels").get<std::vector<std::string>>();
      t.metric = parse_metric(tj.at("metric").get<std::string>());
      t.loss_weight = tj.at("loss_weight").get<double>();
      specs.push_back(std::move(t));
    }
    Model model(model_config_from_json(j.at("model_config")),
                TaskSet(std::move(specs), j.at("main_task").get<std::string>()),
                Vocab(j.at("vocab").get<std::vector<std::string>>()), 0);
    if (j.at("has_ltn").get<bool>()) model.attach_ltn(0);
    auto named = model.named_parameters();
    const auto& params = j.at("parameters");
    if (params.size() != named.size())
      throw DataError("checkpoint holds " + std::to_string(params.size()) + " parameters, model expects " +
                      std::to_string(named.size()));
    for (std::size_t k = 0; k < named.size(); ++k) {
      const auto& pj = params[k];
      auto& [name, tensor] = named[k];
      if (pj.at("name").get<std::string>() != name)
        throw DataError("checkpoint parameter '" + pj.at("name").get<std::string>() + "' where '" + name +
                        "' was expected");
      if (pj.at("rows").get<std::size_t>() != tensor.rows() || pj.at("cols").get<std::size_t>() != tensor.cols())
        throw DataError("checkpoint parameter '" + name + "' has shape [" + std::to_string(pj.at("rows").get<std::size_t>()) +
                        "x" + std::to_string(pj.at("cols").get<std::size_t>()) + "], expected " + tensor.shape().str());
      const auto values = pj.at("values").get<std::vector<double>>();
      if (values.size() != tensor.size()) throw DataError("checkpoint parameter '" + name + "' has the wrong size");
      std::copy(values.begin(), values.end(), tensor.mutable_values().begin());
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(model);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace labelmtl
