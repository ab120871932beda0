#include <CLI11.hpp>

#include <iostream>

#include "rgan/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Robust GAN laboratory: train, evaluate, theory checks, plots"};
  app.require_subcommand(1);

  rgan::cli::TrainOptions train;
  auto* t = app.add_subcommand("train", "Train every (arm, seed) pair of a config");
  t->add_option("--config", train.config, "Experiment config file")->required();
  t->add_option("--seed", train.seed, "Run this seed only");
  t->add_option("--arm", train.arm, "Run this arm only");
  t->add_option("--out", train.out, "Output directory (overrides output_dir)");
  t->add_flag("--parallel-seeds", train.parallel_seeds, "Run the seeds of an arm concurrently");

  rgan::cli::EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("checkpoint", eval.checkpoint, "Checkpoint file")->required();
  e->add_option("--samples", eval.samples, "Generated samples for coverage and losses");
  e->add_option("--csv", eval.csv, "CSV to append the metrics row to");

  rgan::theory::CheckOptions checks;
  auto* c = app.add_subcommand("theory-check", "Verify the optimal-discriminator identities");
  c->add_option("--seed", checks.seed, "Seed for the random densities");
  c->add_option("--trials", checks.trials, "Random density pairs");

  rgan::cli::PlotOptions plot;
  auto* p = app.add_subcommand("plot", "Render SVG charts from a metrics CSV");
  p->add_option("metrics", plot.metrics, "Metrics CSV")->required();
  p->add_option("--checkpoint", plot.checkpoint, "Checkpoint for sample scatter plots");
  p->add_option("--out", plot.out, "Output directory");
  p->add_option("--metric", plot.metric, "Column to plot against step");
  p->add_option("--samples", plot.samples, "Points per scatter series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : rgan::cli::kInputError;
  }

  if (*t) return rgan::cli::cmd_train(train, std::cout, std::cerr);
  if (*e) return rgan::cli::cmd_eval(eval, std::cout, std::cerr);
  if (*c) return rgan::cli::cmd_theory_check(checks, std::cout, std::cerr);
  return rgan::cli::cmd_plot(plot, std::cout, std::cerr);
}
