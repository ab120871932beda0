#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rgan/robust.hpp"

// Experiment configuration and its flat `key = value` text form.
//
//   # comment
//   arms = baseline, rgan
//   seeds = 1, 2, 3
//   robust.eps1 = 0.01
//
// Keys carry a dotted section prefix (data., gan., robust., eval.). Unknown
// or repeated keys and unparsable values are InputErrors naming the line.
namespace rgan::experiment {

enum class Arm { baseline, rgan, ablation_g_only, ablation_d_only, ablation_random_noise };

std::string to_string(Arm arm);
Arm arm_from_string(const std::string& name);
robust::Ablation ablation_of(Arm arm);

struct EvalConfig {
  std::uint64_t interval = 1000;   // steps between metric rows
  std::size_t samples = 2000;      // generated samples for mode coverage and losses
  std::size_t stress_samples = 1000;
  std::size_t stress_repeats = 5;
  std::size_t gap_fresh = 50000;   // fresh real samples for the generalization gap

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct ExperimentConfig {
  std::vector<Arm> arms{Arm::baseline, Arm::rgan};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output_dir = "runs";
  gan::DataSource data{};
  robust::RganConfig robust{};  // robust.base holds the shared GAN settings
  EvalConfig eval{};

  /// Throws InputError (line 0) when any field is out of range.
  void validate() const;
  /// Training configuration for one arm.
  robust::RganConfig arm_config(Arm arm) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key, in a fixed order; parse_config(serialize(c)) == c.
std::string serialize(const ExperimentConfig& config);

// Number formatting shared by every text artifact: shortest representation
// that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

}  // namespace rgan::experiment
