#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgan/robust.hpp"

namespace rgan::eval {

struct ModeReport {
  std::size_t covered = 0;
  std::size_t total = 0;
  double high_quality_fraction = 0.0;
  std::vector<std::size_t> hits;  // per mode
  double capture_radius = 0.0;
  std::size_t min_hits = 0;
};

/// Assigns each sample to its nearest mode; a hit needs distance <= 3 sigma.
/// A mode is covered with at least max(5, N / (10 k)) hits. Requires N >= 100.
ModeReport mode_coverage(const Tensor& samples, const Tensor& centers, double sigma);

inline const std::vector<double> kBandwidthScales{0.25, 0.5, 1.0, 2.0, 4.0};

enum class MmdEstimator { unbiased, biased };

/// Median Euclidean distance over distinct pairs of the pooled sample.
double median_pairwise_distance(const Tensor& x, const Tensor& y);

/// Squared MMD with RBF kernels exp(-|a - b|^2 / (2 h^2)), summed over
/// h = scale * median pairwise distance. The unbiased estimator can go
/// negative; see clamp_for_report.
double mmd_rbf(const Tensor& x, const Tensor& y, const std::vector<double>& scales = kBandwidthScales,
               MmdEstimator estimator = MmdEstimator::unbiased);

inline double clamp_for_report(double mmd) { return mmd < 0.0 ? 0.0 : mmd; }

struct StressReport {
  double metric_clean = 0.0;  // mean over repeats
  double metric_worst = 0.0;
  double robustness_gap = 0.0;
  double clean_std = 0.0;
  double worst_std = 0.0;
  double gap_std = 0.0;
  std::size_t repeats = 0;
};

/// MMD of generated samples against real ones, with latents drawn from the
/// prior and with the same latents moved by eps1 along their worst
/// directions. Each repeat draws fresh real samples and latents and solves
/// the perturbation again.
StressReport worst_noise_stress(const gan::GanModel& model, const gan::DataSource& data,
                                const robust::PerturbationConfig& cfg, std::size_t n, std::size_t repeats,
                                std::uint64_t seed);

}  // namespace rgan::eval
