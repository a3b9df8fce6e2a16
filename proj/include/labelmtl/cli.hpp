#pragma once

#include "labelmtl/metrics.hpp"
#include "labelmtl/model.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace labelmtl::cli {

// Each command throws on bad input; run() turns exceptions into a message
// and a nonzero exit status.

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};
// Writes checkpoint.json, history.csv and metrics.json (plus config.json and,
// with semi-supervision, pseudo_labels.jsonl). Returns the output directory.
std::string cmd_train(const TrainArgs& args, std::ostream& log);

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string task;
  std::string split = "all";  // train, dev, test or all
  bool use_ltn = false;
  std::optional<std::string> out;
};
metrics::MetricReport cmd_eval(const EvalArgs& args, std::ostream& out);

struct RelabelArgs {
  std::string checkpoint;
  std::string pool;
  std::string out;
};
std::vector<PseudoLabel> cmd_relabel(const RelabelArgs& args);

struct ExportArgs {
  std::string checkpoint;
  std::string out;
};
// One CSV row per (task, label): the top-2 principal coordinates of the
// mean-centred label matrix followed by the raw vector.
std::string export_labels_csv(const Model& model);
void cmd_export_labels(const ExportArgs& args);

struct SynthArgs {
  std::uint64_t seed = 1;
  std::size_t n_per_task = 2000;
  std::optional<std::size_t> n_dev;   // defaults to n_per_task / 4
  std::optional<std::size_t> n_test;  // defaults to n_per_task / 4
  double correlation = 0.9;
  std::string out;
};
void cmd_synth(const SynthArgs& args);

struct AblationRow {
  std::string setting;
  std::string predictor;  // "main" or "ltn"
  double dev = 0.0;
  double test = 0.0;
  std::size_t best_epoch = 0;
};
struct AblateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};
std::vector<AblationRow> cmd_ablate(const AblateArgs& args, std::ostream& log);
std::string ablation_csv(const std::vector<AblationRow>& rows, const std::string& metric);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace labelmtl::cli
