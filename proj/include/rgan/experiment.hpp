#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rgan/config.hpp"
#include "rgan/eval_metrics.hpp"
#include "rgan/theory.hpp"

namespace rgan::experiment {

/// One evaluation snapshot. Quantities that do not apply (mode coverage on
/// two_moons, the gap without a finite training set) are NaN.
struct MetricsRecord {
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  Arm arm = Arm::baseline;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double mode_coverage = 0.0;
  double high_quality_fraction = 0.0;
  double mmd = 0.0;
  double mmd_worst_noise = 0.0;
  double robustness_gap = 0.0;
  double gen_gap_d = 0.0;

  /// Bitwise equality, so NaN fields compare equal to themselves.
  bool same_as(const MetricsRecord& other) const;
};

// Metrics CSV: header row, '.' decimals, LF line endings.
inline constexpr std::string_view kMetricsHeader =
    "step,seed,arm,d_loss,g_loss,mode_coverage,high_quality_fraction,mmd,mmd_worst_noise,robustness_gap,gen_gap_d";

std::string csv_row(const MetricsRecord& r);
std::string metrics_csv(const std::vector<MetricsRecord>& records);
/// Throws InputError naming the line on a bad header or row.
std::vector<MetricsRecord> parse_metrics_csv(std::string_view text);

/// D objective whose train/fresh gap an arm reports: the robust objective
/// for arms whose discriminator trains against perturbed data.
theory::GapObjective gap_objective(const ExperimentConfig& config, Arm arm);

/// Metrics of a snapshot. Every random draw derives from (seed, step), so the
/// result does not depend on training randomness or evaluation order.
MetricsRecord evaluate_snapshot(const ExperimentConfig& config, Arm arm, std::uint64_t seed, std::uint64_t step,
                                const gan::GanModel& model, const std::optional<Tensor>& train_pool);

/// Training pool a run with `seed` uses, if the config fixes one.
std::optional<Tensor> training_pool(const ExperimentConfig& config, std::uint64_t seed);

struct Checkpoint {
  std::string config_text;  // serialized ExperimentConfig
  Arm arm = Arm::baseline;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  gan::GanModel model;
  models::AdamState g_opt;
  models::AdamState d_opt;
  std::optional<MetricsRecord> recorded;  // metrics at `step`, if evaluated
};

std::string serialize(const Checkpoint& ckpt);
/// Throws InputError on any malformed or truncated content.
Checkpoint parse_checkpoint(std::string_view text);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

struct RunResult {
  Arm arm = Arm::baseline;
  std::uint64_t seed = 0;
  std::vector<MetricsRecord> records;
  Checkpoint checkpoint;
  double cpu_seconds = 0.0;  // training plus evaluation, this thread only
};

RunResult run_one(const ExperimentConfig& config, Arm arm, std::uint64_t seed);

/// Every (arm, seed) pair in config order. With `parallel_seeds` the seeds of
/// an arm run on separate threads; results are identical either way.
std::vector<RunResult> run_all(const ExperimentConfig& config, bool parallel_seeds);

std::string run_stem(Arm arm, std::uint64_t seed);

// Summary: final-step medians per arm plus comparisons against the baseline.
struct ArmSummary {
  Arm arm = Arm::baseline;
  std::size_t seeds = 0;
  double median_mode_coverage = 0.0;
  double median_high_quality_fraction = 0.0;
  double median_mmd = 0.0;
  double median_mmd_worst_noise = 0.0;
  double median_robustness_gap = 0.0;
  double median_gen_gap_d = 0.0;
};

double median(std::vector<double> values);
std::vector<ArmSummary> summarize(const std::vector<RunResult>& runs);
std::string summary_csv(const std::vector<ArmSummary>& summary);

/// Writes per-run CSVs and checkpoints plus summary.csv under `dir`.
void write_outputs(const std::filesystem::path& dir, const std::vector<RunResult>& runs);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace rgan::experiment
