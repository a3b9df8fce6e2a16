#include "labelmtl/run_config.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace labelmtl {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

const std::set<std::string> kTrainKeys = {
    "use_lel",        "use_ltn",         "use_semi",        "use_diversity_feats", "use_main_pred_feats",
    "ltn_backprop_to_encoder", "continue_aux_training", "label_fit", "embedding_dim", "hidden_dim",
    "label_dim",      "ltn_hidden",      "learning_rate",   "batch_size",          "patience",
    "pretrain_epochs", "ltn_epochs",     "max_epochs",      "pseudo_weight",       "max_len",
    "min_freq"};

TrainConfig parse_train(const json& j) {
  reject_unknown(j, kTrainKeys, "train");
  TrainConfig c;
  const std::string w = "train";
  read_opt(j, "use_lel", c.model.use_lel, w);
  read_opt(j, "use_ltn", c.use_ltn, w);
  read_opt(j, "use_semi", c.use_semi, w);
  read_opt(j, "use_diversity_feats", c.model.use_diversity_feats, w);
  read_opt(j, "use_main_pred_feats", c.model.use_main_pred_feats, w);
  read_opt(j, "ltn_backprop_to_encoder", c.model.ltn_backprop_to_encoder, w);
  read_opt(j, "continue_aux_training", c.continue_aux_training, w);
  std::string fit = "project";
  read_opt(j, "label_fit", fit, w);
  if (fit == "project") c.model.label_fit = LabelFit::kProject;
  else if (fit == "pad") c.model.label_fit = LabelFit::kPad;
  else throw ConfigError("label_fit must be 'project' or 'pad', got '" + fit + "'");
  read_opt(j, "embedding_dim", c.model.embedding_dim, w);
  read_opt(j, "hidden_dim", c.model.hidden_dim, w);
  read_opt(j, "label_dim", c.model.label_dim, w);
  read_opt(j, "ltn_hidden", c.model.ltn_hidden, w);
  read_opt(j, "learning_rate", c.learning_rate, w);
  read_opt(j, "batch_size", c.batch_size, w);
  read_opt(j, "patience", c.patience, w);
  read_opt(j, "pretrain_epochs", c.pretrain_epochs, w);
  read_opt(j, "ltn_epochs", c.ltn_epochs, w);
  read_opt(j, "max_epochs", c.max_epochs, w);
  read_opt(j, "pseudo_weight", c.pseudo_weight, w);
  read_opt(j, "max_len", c.max_len, w);
  read_opt(j, "min_freq", c.min_freq, w);
  return c;
}

json train_to_json(const TrainConfig& c) {
  json j;
  j["use_lel"] = c.model.use_lel;
  j["use_ltn"] = c.use_ltn;
  j["use_semi"] = c.use_semi;
  j["use_diversity_feats"] = c.model.use_diversity_feats;
  j["use_main_pred_feats"] = c.model.use_main_pred_feats;
  j["ltn_backprop_to_encoder"] = c.model.ltn_backprop_to_encoder;
  j["continue_aux_training"] = c.continue_aux_training;
  j["label_fit"] = c.model.label_fit == LabelFit::kPad ? "pad" : "project";
  j["embedding_dim"] = c.model.embedding_dim;
  j["hidden_dim"] = c.model.hidden_dim;
  j["label_dim"] = c.model.label_dim;
  j["ltn_hidden"] = c.model.ltn_hidden;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["patience"] = c.patience;
  j["pretrain_epochs"] = c.pretrain_epochs;
  j["ltn_epochs"] = c.ltn_epochs;
  j["max_epochs"] = c.max_epochs;
  j["pseudo_weight"] = c.pseudo_weight;
  j["max_len"] = c.max_len;
  j["min_freq"] = c.min_freq;
  return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, {"tasks", "main_task", "train", "seed", "output_dir"}, "config");
  RunConfig rc;
  if (!j.contains("tasks") || !j["tasks"].is_array() || j["tasks"].empty())
    throw ConfigError("config needs a non-empty 'tasks' array");
  if (!j.contains("main_task")) throw ConfigError("config needs 'main_task'");
  read_opt(j, "main_task", rc.main_task, "config");
  for (const auto& tj : j["tasks"]) {
    reject_unknown(tj, {"name", "data", "labels", "metric", "loss_weight", "downsample_to"}, "task entry");
    TaskSpec t;
    if (!tj.contains("name") || !tj.contains("data") || !tj.contains("labels"))
      throw ConfigError("task entries need 'name', 'data' and 'labels'");
    read_opt(tj, "name", t.name, "task entry");
    std::string data;
    read_opt(tj, "data", data, "task '" + t.name + "'");
    t.data_path = fs::path(data).is_absolute() ? data : (fs::path(base_dir) / data).lexically_normal().string();
    read_opt(tj, "labels", t.labels, "task '" + t.name + "'");
    std::string metric = "acc";
    read_opt(tj, "metric", metric, "task '" + t.name + "'");
    t.metric = parse_metric(metric);
    read_opt(tj, "loss_weight", t.loss_weight, "task '" + t.name + "'");
    if (auto it = tj.find("downsample_to"); it != tj.end() && !it->is_null()) {
      std::size_t n = 0;
      read_opt(tj, "downsample_to", n, "task '" + t.name + "'");
      t.downsample_to = n;
    }
    rc.tasks.push_back(std::move(t));
  }
  if (j.contains("train")) rc.train = parse_train(j["train"]);
  read_opt(j, "seed", rc.train.seed, "config");
  read_opt(j, "output_dir", rc.output_dir, "config");
  if (!fs::path(rc.output_dir).is_absolute())
    rc.output_dir = (fs::path(base_dir) / rc.output_dir).lexically_normal().string();
  // TaskSet construction validates names, labels and the main task.
  const TaskSet ts = rc.task_set();
  rc.train.validate(ts.size());
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), fs::path(path).parent_path().string());
}

std::string run_config_to_json(const RunConfig& config, const std::string& base_dir) {
  json j;
  j["main_task"] = config.main_task;
  json tasks = json::array();
  for (const auto& t : config.tasks) {
    json tj;
    tj["name"] = t.name;
    tj["data"] = base_dir.empty() ? t.data_path : fs::path(t.data_path).lexically_relative(base_dir).string();
    tj["labels"] = t.labels;
    tj["metric"] = std::string(metric_name(t.metric));
    tj["loss_weight"] = t.loss_weight;
    tj["downsample_to"] = t.downsample_to ? json(*t.downsample_to) : json(nullptr);
    tasks.push_back(tj);
  }
  j["tasks"] = tasks;
  j["train"] = train_to_json(config.train);
  j["seed"] = config.train.seed;
  j["output_dir"] =
      base_dir.empty() ? config.output_dir : fs::path(config.output_dir).lexically_relative(base_dir).string();
  return j.dump(2) + "\n";
}

std::vector<Dataset> load_task_data(const RunConfig& config) {
  std::vector<Dataset> out;
  for (const auto& t : config.tasks) out.push_back(split_dataset(load_dataset(t.data_path, t)));
  return out;
}

}  // namespace labelmtl
