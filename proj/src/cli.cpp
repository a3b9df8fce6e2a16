#include "labelmtl/cli.hpp"

#include "labelmtl/pca.hpp"
#include "labelmtl/run_config.hpp"
#include "labelmtl/synth.hpp"
#include "labelmtl/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace labelmtl::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<Example> select_split(const Dataset& d, const std::string& split) {
  if (split == "all") {
    std::vector<Example> all = d.train;
    all.insert(all.end(), d.dev.begin(), d.dev.end());
    all.insert(all.end(), d.test.begin(), d.test.end());
    return all;
  }
  switch (parse_split(split)) {
    case Split::kTrain: return d.train;
    case Split::kDev: return d.dev;
    case Split::kTest: return d.test;
  }
  return {};
}

json report_json(const metrics::MetricReport& r) { return json::parse(metrics::to_json(r)); }

// Dev and test reports of the main task for one predictor; empty splits are skipped.
json split_reports(const Model& model, const Dataset& data, bool use_ltn, std::size_t max_len) {
  json j = json::object();
  const std::size_t main = model.tasks().main_index();
  if (!data.dev.empty()) j["dev"] = report_json(evaluate(model, data.dev, main, use_ltn, max_len));
  if (!data.test.empty()) j["test"] = report_json(evaluate(model, data.test, main, use_ltn, max_len));
  return j;
}

double value_or_nan(const Model& model, const std::vector<Example>& ex, bool use_ltn, std::size_t max_len) {
  if (ex.empty()) return std::numeric_limits<double>::quiet_NaN();
  return evaluate(model, ex, model.tasks().main_index(), use_ltn, max_len).value;
}

}  // namespace

std::string cmd_train(const TrainArgs& args, std::ostream& log) {
  RunConfig rc = load_run_config(args.config);
  if (args.seed) rc.train.seed = *args.seed;
  if (args.out) rc.output_dir = *args.out;
  const TaskSet tasks = rc.task_set();
  const auto datasets = load_task_data(rc);

  TrainResult result = train(rc.train, tasks, datasets);
  const fs::path dir(rc.output_dir);
  fs::create_directories(dir);
  save_checkpoint(result.model, (dir / "checkpoint.json").string());
  write_file(dir / "history.csv", result.history.to_csv());
  write_file(dir / "config.json", run_config_to_json(rc));

  json m;
  m["main_task"] = tasks.main().name;
  m["best_epoch"] = result.history.best_epoch;
  const Dataset& main_data = datasets[tasks.main_index()];
  m["main"] = split_reports(result.model, main_data, false, rc.train.max_len);
  if (result.model.has_ltn()) m["ltn"] = split_reports(result.model, main_data, true, rc.train.max_len);
  write_file(dir / "metrics.json", m.dump(2) + "\n");

  if (!result.history.pseudo_labels.empty())
    write_file(dir / "pseudo_labels.jsonl", pseudo_labels_to_jsonl(result.history.pseudo_labels.back()));
  log << "wrote " << (dir / "checkpoint.json").string() << ", history.csv, metrics.json\n";
  return dir.string();
}

metrics::MetricReport cmd_eval(const EvalArgs& args, std::ostream& out) {
  const Model model = load_checkpoint(args.checkpoint);
  const std::size_t task = model.tasks().index_of(args.task);
  if (args.use_ltn) {
    if (!model.has_ltn()) throw ConfigError("--use-ltn given but checkpoint '" + args.checkpoint + "' has no LTN");
    if (task != model.tasks().main_index())
      throw ConfigError("--use-ltn only predicts the main task '" + model.tasks().main().name + "'");
  }
  const Dataset data = split_dataset(load_dataset(args.data, model.tasks()[task]));
  const auto examples = select_split(data, args.split);
  const auto report = evaluate(model, examples, task, args.use_ltn);
  const std::string body = metrics::to_json(report);
  out << body << "\n";
  if (args.out) write_file(fs::path(*args.out) / "metrics.json", body + "\n");
  return report;
}

std::vector<PseudoLabel> cmd_relabel(const RelabelArgs& args) {
  const Model model = load_checkpoint(args.checkpoint);
  if (!model.has_ltn()) throw ConfigError("relabel needs a checkpoint with an LTN: '" + args.checkpoint + "'");
  const auto pool = load_pool(args.pool, model.tasks().main());
  auto labels = generate_pseudo_labels(pool, model, 0);
  write_file(fs::path(args.out) / "pseudo_labels.jsonl", pseudo_labels_to_jsonl(labels));
  return labels;
}

std::string export_labels_csv(const Model& model) {
  if (!model.config().use_lel || !model.label_matrix())
    throw ConfigError("export-labels needs a checkpoint trained with the label embedding layer");
  const auto& rows = model.label_matrix()->rows;
  const std::size_t n = rows.rows();
  const std::size_t l = rows.cols();
  const auto p = pca::fit(rows.values(), n, l, 2);

  std::ostringstream os;
  os << "task,label,pc1,pc2";
  for (std::size_t k = 0; k < l; ++k) os << ",v" << k;
  os << "\n";
  std::size_t r = 0;
  for (const auto& t : model.tasks().tasks())
    for (const auto& label : t.labels) {
      os << t.name << "," << label << "," << fmt(p.projections[r * 2]) << "," << fmt(p.projections[r * 2 + 1]);
      for (std::size_t k = 0; k < l; ++k) os << "," << fmt(rows.values()[r * l + k]);
      os << "\n";
      ++r;
    }
  return os.str();
}

void cmd_export_labels(const ExportArgs& args) {
  const Model model = load_checkpoint(args.checkpoint);
  write_file(fs::path(args.out) / "label_embeddings.csv", export_labels_csv(model));
}

void cmd_synth(const SynthArgs& args) {
  synth::Options o;
  o.seed = args.seed;
  o.n_train = args.n_per_task;
  o.n_dev = args.n_dev.value_or(args.n_per_task / 4);
  o.n_test = args.n_test.value_or(args.n_per_task / 4);
  o.correlation = args.correlation;
  synth::write(synth::generate(o), args.out, args.seed);
}

std::vector<AblationRow> cmd_ablate(const AblateArgs& args, std::ostream& log) {
  RunConfig base = load_run_config(args.config);
  if (args.seed) base.train.seed = *args.seed;
  if (args.out) base.output_dir = *args.out;
  const TaskSet tasks = base.task_set();
  const auto datasets = load_task_data(base);
  const Dataset& main_data = datasets[tasks.main_index()];

  struct Setting {
    const char* name;
    bool lel, ltn, semi, main_preds, diversity;
  };
  const Setting grid[] = {
      {"mtl", false, false, false, false, true},
      {"mtl+lel", true, false, false, false, true},
      {"mtl+ltn", false, true, false, false, true},
      {"mtl+lel+ltn", true, true, false, false, true},
      {"mtl+lel+ltn+main_preds", true, true, false, true, true},
      {"mtl+lel+ltn+main_preds-diversity", true, true, false, true, false},
      {"mtl+lel+ltn+semi", true, true, true, false, true},
  };

  std::vector<AblationRow> rows;
  for (const auto& s : grid) {
    TrainConfig c = base.train;
    c.model.use_lel = s.lel;
    c.use_ltn = s.ltn;
    c.use_semi = s.semi;
    c.model.use_main_pred_feats = s.main_preds;
    c.model.use_diversity_feats = s.diversity;
    log << "ablate: " << s.name << "\n";
    const TrainResult r = train(c, tasks, datasets);
    rows.push_back({s.name, "main", value_or_nan(r.model, main_data.dev, false, c.max_len),
                    value_or_nan(r.model, main_data.test, false, c.max_len), r.history.best_epoch});
    if (r.model.has_ltn())
      rows.push_back({s.name, "ltn", value_or_nan(r.model, main_data.dev, true, c.max_len),
                      value_or_nan(r.model, main_data.test, true, c.max_len), r.history.best_epoch});
  }
  write_file(fs::path(base.output_dir) / "ablation.csv",
             ablation_csv(rows, std::string(metric_name(tasks.main().metric))));
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows, const std::string& metric) {
  std::string s = "setting,predictor,dev_" + metric + ",test_" + metric + ",best_epoch\n";
  for (const auto& r : rows)
    s += r.setting + "," + r.predictor + "," + fmt(r.dev) + "," + fmt(r.test) + "," + std::to_string(r.best_epoch) + "\n";
  return s;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task learning with label embeddings and label transfer"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
  train_cmd->add_option("--config", train_args.config, "run config (JSON)")->required();
  train_cmd->add_option("--seed", train_args.seed, "override the config seed");
  train_cmd->add_option("--out", train_args.out, "override the output directory");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--data", eval_args.data, "JSONL dataset")->required();
  eval_cmd->add_option("--task", eval_args.task, "task the dataset belongs to")->required();
  eval_cmd->add_option("--split", eval_args.split, "train, dev, test or all")
      ->check(CLI::IsMember({"train", "dev", "test", "all"}));
  eval_cmd->add_flag("--use-ltn", eval_args.use_ltn, "predict with the label transfer network");
  eval_cmd->add_option("--out", eval_args.out, "directory for metrics.json");

  RelabelArgs relabel_args;
  auto* relabel_cmd = app.add_subcommand("relabel", "write LTN pseudo-labels for an unlabelled pool");
  relabel_cmd->add_option("--checkpoint", relabel_args.checkpoint)->required();
  relabel_cmd->add_option("--pool", relabel_args.pool, "JSONL pool")->required();
  relabel_cmd->add_option("--out", relabel_args.out, "output directory")->required();

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export-labels", "export label embeddings with PCA coordinates");
  export_cmd->add_option("--checkpoint", export_args.checkpoint)->required();
  export_cmd->add_option("--out", export_args.out, "output directory")->required();

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate two correlated synthetic tasks");
  synth_cmd->add_option("--seed", synth_args.seed);
  synth_cmd->add_option("--n-per-task", synth_args.n_per_task, "training examples per task");
  synth_cmd->add_option("--n-dev", synth_args.n_dev);
  synth_cmd->add_option("--n-test", synth_args.n_test);
  synth_cmd->add_option("--correlation", synth_args.correlation)->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "run the ablation grid over one config");
  ablate_cmd->add_option("--config", ablate_args.config)->required();
  ablate_cmd->add_option("--seed", ablate_args.seed);
  ablate_cmd->add_option("--out", ablate_args.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train_cmd) {
      cmd_train(train_args, out);
    } else if (*eval_cmd) {
      cmd_eval(eval_args, out);
    } else if (*relabel_cmd) {
      const auto labels = cmd_relabel(relabel_args);
      out << "wrote " << labels.size() << " pseudo-labels\n";
    } else if (*export_cmd) {
      cmd_export_labels(export_args);
    } else if (*synth_cmd) {
      cmd_synth(synth_args);
    } else if (*ablate_cmd) {
      const auto rows = cmd_ablate(ablate_args, out);
      for (const auto& r : rows)
        out << r.setting << " [" << r.predictor << "] dev " << fmt(r.dev) << " test " << fmt(r.test) << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace labelmtl::cli
