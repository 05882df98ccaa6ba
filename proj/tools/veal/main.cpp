#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "veal/errors.hpp"

namespace {

using namespace veal::cli;

void add_common(CLI::App* cmd, CommonOptions& common, bool with_out = true) {
  cmd->add_option("--config", common.config, "experiment config (JSON)");
  cmd->add_option("--seed", common.seed, "global seed, overrides the config");
  if (with_out) cmd->add_option("--out", common.out, "output directory");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const veal::UsageError*>(&e) || dynamic_cast<const veal::ConfigError*>(&e) ||
      dynamic_cast<const veal::CapacityError*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veal: vision-encoder knowledge and entity-aligned training experiments"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic landmark dataset");
  add_common(c_synth, synth.common);

  ScoreOptions score;
  auto* c_score = app.add_subcommand("score", "write per-image similarity and RSR scores");
  add_common(c_score, score.common);
  c_score->add_option("--data", score.data, "dataset directory")->required();

  SelectOptions select;
  auto* c_select = app.add_subcommand("select", "pick a knowledge-based training subset");
  add_common(c_select, select.common);
  c_select->add_option("--data", select.data, "dataset directory")->required();
  c_select->add_option("--method", select.method, "HDS, HSS, LCS or BRS");
  c_select->add_option("--k", select.k, "subset size");
  c_select->add_flag("--all", select.whole_dataset, "select among all records, not the train split");

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "train a dual-branch model");
  add_common(c_train, train.common);
  c_train->add_option("--data", train.data, "dataset directory")->required();
  c_train->add_option("--subset", train.subset, "subset json restricting the training records");
  c_train->add_option("--ablation", train.ablation, "lm_only, hr, hr+le, hr+lh or full")
      ->capture_default_str();

  EvalOptions eval;
  auto* c_eval = app.add_subcommand("eval", "judge checkpoints on the held-out split");
  add_common(c_eval, eval.common);
  c_eval->add_option("--data", eval.data, "dataset directory")->required();
  c_eval->add_option("--checkpoint", eval.checkpoints, "[name=]params.bin, repeatable")->required();
  c_eval->add_option("--judge", eval.judge, "rule or external");
  c_eval->add_option("--endpoint", eval.endpoint, "external judge URL (http://host:port/path)");
  c_eval->add_option("--baseline", eval.baseline, "row the deltas are computed against");
  c_eval->add_flag("--incremental", eval.incremental, "compare each row with the previous one");

  ReportOptions report;
  auto* c_report = app.add_subcommand("report", "build a report table from results or raw counts");
  add_common(c_report, report.common);
  c_report->add_option("--input", report.inputs, "report.json, repeatable");
  c_report->add_option("--counts", report.counts, "name=strong/known/weak/unknown, repeatable");
  c_report->add_option("--baseline", report.baseline, "row the deltas are computed against");
  c_report->add_flag("--incremental", report.incremental, "compare each row with the previous one");

  std::uint64_t grad_seed = 7;
  auto* c_grad = app.add_subcommand("gradcheck", "finite-difference check of the combined objective");
  c_grad->add_option("--seed", grad_seed, "seed for the random parameters")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_synth) cmd_synth(synth, std::cout);
    if (*c_score) cmd_score(score, std::cout);
    if (*c_select) cmd_select(select, std::cout);
    if (*c_train) cmd_train(train, std::cout);
    if (*c_eval) cmd_eval(eval, std::cout);
    if (*c_report) cmd_report(report, std::cout);
    if (*c_grad) {
      const double worst = cmd_gradcheck(grad_seed, std::cout);
      return worst <= 1e-5 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
