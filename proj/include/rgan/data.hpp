#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rgan/tensor.hpp"

namespace rgan::gan {

/// Synthetic target distributions.
///
///   ring         `modes` isotropic Gaussians (std `sigma`) evenly spaced on a
///                circle of `radius`.
///   grid         grid x grid Gaussians centred on the origin, `spacing` apart.
///   two_moons    interleaved half circles with Gaussian `noise`.
///   discrete_1d  integer support 0..K-1 with probabilities `probs`.
struct DataSource {
  enum class Kind { ring, two_moons, grid, discrete_1d };

  Kind kind = Kind::ring;
  std::size_t modes = 8;
  double radius = 2.0;
  double sigma = 0.05;
  std::size_t grid = 5;
  double spacing = 2.0;
  double noise = 0.05;
  std::vector<double> probs;

  void validate() const;
  std::size_t dim() const;
  Tensor sample(std::size_t n, std::mt19937_64& rng) const;
  /// Mode centres as a k x dim matrix; two_moons has none.
  std::optional<Tensor> mode_centers() const;

  friend bool operator==(const DataSource&, const DataSource&) = default;
};

std::string to_string(DataSource::Kind kind);
DataSource::Kind data_kind_from_string(const std::string& name);

}  // namespace rgan::gan
