#include "rgan/data.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "rgan/errors.hpp"

namespace rgan::gan {

std::string to_string(DataSource::Kind kind) {
  switch (kind) {
    case DataSource::Kind::ring: return "ring";
    case DataSource::Kind::two_moons: return "two_moons";
    case DataSource::Kind::grid: return "grid";
    case DataSource::Kind::discrete_1d: return "discrete_1d";
  }
  return "?";
}

DataSource::Kind data_kind_from_string(const std::string& name) {
  for (auto k : {DataSource::Kind::ring, DataSource::Kind::two_moons, DataSource::Kind::grid,
                 DataSource::Kind::discrete_1d}) {
    if (to_string(k) == name) return k;
  }
  throw InputError("unknown data kind '" + name + "'");
}

void DataSource::validate() const {
  if (!(sigma > 0)) throw ContractError("data sigma must be positive");
  switch (kind) {
    case Kind::ring:
      if (modes == 0 || !(radius > 0)) throw ContractError("ring needs modes >= 1 and radius > 0");
      break;
    case Kind::grid:
      if (grid == 0 || !(spacing > 0)) throw ContractError("grid needs size >= 1 and spacing > 0");
      break;
    case Kind::two_moons:
      if (!(noise >= 0)) throw ContractError("two_moons noise must be non-negative");
      break;
    case Kind::discrete_1d: {
      if (probs.empty()) throw ContractError("discrete_1d needs a probability table");
      double total = 0;
      for (double p : probs) {
        if (!(p >= 0)) throw ContractError("discrete_1d probabilities must be non-negative");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) throw ContractError("discrete_1d probabilities must sum to 1");
      break;
    }
  }
}

std::size_t DataSource::dim() const { return kind == Kind::discrete_1d ? 1 : 2; }

Tensor DataSource::sample(std::size_t n, std::mt19937_64& rng) const {
  auto out = Tensor::zeros({n, dim()});
  auto d = out.mutable_data();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (kind) {
    case Kind::ring: {
      std::uniform_int_distribution<std::size_t> pick(0, modes - 1);
      for (std::size_t i = 0; i < n; ++i) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(pick(rng)) / static_cast<double>(modes);
        const double ex = normal(rng);
        const double ey = normal(rng);
        d[2 * i] = radius * std::cos(angle) + sigma * ex;
        d[2 * i + 1] = radius * std::sin(angle) + sigma * ey;
      }
      break;
    }
    case Kind::grid: {
      std::uniform_int_distribution<std::size_t> pick(0, grid * grid - 1);
      const double offset = 0.5 * static_cast<double>(grid - 1);
      for (std::size_t i = 0; i < n; ++i) {
        const auto cell = pick(rng);
        const double ex = normal(rng);
        const double ey = normal(rng);
        d[2 * i] = (static_cast<double>(cell % grid) - offset) * spacing + sigma * ex;
        d[2 * i + 1] = (static_cast<double>(cell / grid) - offset) * spacing + sigma * ey;
      }
      break;
    }
    case Kind::two_moons: {
      for (std::size_t i = 0; i < n; ++i) {
        const bool upper = unit(rng) < 0.5;
        const double t = std::numbers::pi * unit(rng);
        const double ex = normal(rng);
        const double ey = normal(rng);
        if (upper) {
          d[2 * i] = std::cos(t) + noise * ex;
          d[2 * i + 1] = std::sin(t) + noise * ey;
        } else {
          d[2 * i] = 1.0 - std::cos(t) + noise * ex;
          d[2 * i + 1] = 0.5 - std::sin(t) + noise * ey;
        }
      }
      break;
    }
    case Kind::discrete_1d: {
      std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
      for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<double>(pick(rng));
      break;
    }
  }
  return out;
}

std::optional<Tensor> DataSource::mode_centers() const {
  switch (kind) {
    case Kind::ring: {
      auto c = Tensor::zeros({modes, 2});
      for (std::size_t k = 0; k < modes; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(modes);
        c.at(k, 0) = radius * std::cos(angle);
        c.at(k, 1) = radius * std::sin(angle);
      }
      return c;
    }
    case Kind::grid: {
      auto c = Tensor::zeros({grid * grid, 2});
      const double offset = 0.5 * static_cast<double>(grid - 1);
      for (std::size_t k = 0; k < grid * grid; ++k) {
        c.at(k, 0) = (static_cast<double>(k % grid) - offset) * spacing;
        c.at(k, 1) = (static_cast<double>(k / grid) - offset) * spacing;
      }
      return c;
    }
    case Kind::discrete_1d: {
      auto c = Tensor::zeros({probs.size(), 1});
      for (std::size_t k = 0; k < probs.size(); ++k) c.at(k, 0) = static_cast<double>(k);
      return c;
    }
    case Kind::two_moons: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace rgan::gan
