#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "rgan/theory.hpp"

// Subcommand implementations behind the rgan executable. Each returns the
// process exit code and reports errors on `err` instead of throwing.
namespace rgan::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInputError = 2, kDiverged = 3 };

struct TrainOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;  // replaces the seed list
  std::optional<std::string> arm;     // replaces the arm list
  std::optional<std::filesystem::path> out;
  bool parallel_seeds = false;
};

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::optional<std::size_t> samples;      // overrides eval.samples
  std::optional<std::filesystem::path> csv;  // default: <checkpoint>.eval.csv
};

/// Prints the snapshot's metrics row, appends it to the CSV, and says whether
/// it reproduces the metrics recorded in the checkpoint.
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);

int cmd_theory_check(const theory::CheckOptions& options, std::ostream& out, std::ostream& err);

struct PlotOptions {
  std::filesystem::path metrics;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> out;  // default: the CSV's directory
  std::string metric = "mmd";
  std::size_t samples = 1000;
};

/// Writes <arm>_<metric>.svg per arm in the CSV (or <metric>.svg when it has
/// no rows) and, given a checkpoint, samples.svg and worst_latent.svg.
int cmd_plot(const PlotOptions& options, std::ostream& out, std::ostream& err);

}  // namespace rgan::cli
