#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rgan/gan.hpp"
#include "rgan/models.hpp"
#include "rgan/tensor.hpp"

// Independent oracles shared by the unit tests. Nothing here calls into the
// autodiff tape or the matmul kernel.
namespace rgan::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

/// Central differences of a scalar function of one tensor.
inline Tensor fd_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h = 1e-5) {
  auto g = Tensor::zeros(x.shape());
  auto xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double up = f(xp);
    xp[i] = orig - h;
    const double down = f(xp);
    xp[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), or the absolute difference when both are
/// below `floor`.
inline double relative_error(const Tensor& a, const Tensor& b, double floor = 1e-8) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), floor});
  return std::sqrt(diff) / scale;
}

/// Triple loop product.
inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  auto c = Tensor::zeros({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a.at(i, p) * b.at(p, j);
      c.at(i, j) = s;
    }
  return c;
}

inline double activate(models::Activation a, double x) {
  switch (a) {
    case models::Activation::identity: return x;
    case models::Activation::relu: return x > 0 ? x : 0.0;
    case models::Activation::leaky_relu: return x > 0 ? x : 0.2 * x;
    case models::Activation::tanh: return std::tanh(x);
    case models::Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

/// Scalar-loop MLP forward pass for one input row.
inline std::vector<double> mlp_row(const models::MlpSpec& spec, const models::ParamSet& p,
                                   std::vector<double> h) {
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const auto& w = p.weights[l];
    const auto& b = p.biases[l];
    std::vector<double> next(w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < w.rows(); ++i) s += h[i] * w.at(i, j);
      next[j] = activate(l + 1 == spec.num_layers() ? spec.output : spec.hidden, s);
    }
    h = std::move(next);
  }
  return h;
}

inline std::vector<double> row_of(const Tensor& t, std::size_t r) {
  auto s = t.row(r);
  return {s.begin(), s.end()};
}

/// Angle in degrees between two equal-length vectors.
inline double angle_deg(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double c = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

/// Small G/D pair with random weights and biases.
inline gan::GanModel random_gan(std::mt19937_64& rng, std::size_t latent = 3, std::size_t dim = 2,
                                models::Activation act = models::Activation::tanh) {
  gan::GanModel m;
  m.g_spec = models::generator_spec(latent, {6}, dim, act);
  m.d_spec = models::discriminator_spec(dim, {5}, act);
  m.g = models::init_params(m.g_spec, rng());
  m.d = models::init_params(m.d_spec, rng());
  for (auto& b : m.g.biases) b = random_tensor(b.shape(), rng, -0.3, 0.3);
  for (auto& b : m.d.biases) b = random_tensor(b.shape(), rng, -0.3, 0.3);
  return m;
}

/// Identity generator on 2D latents and D(x) = sigmoid(w . x + b).
inline gan::GanModel linear_logit_gan(double w0, double w1, double b) {
  gan::GanModel m;
  m.g_spec = models::MlpSpec{{2, 2}, models::Activation::relu, models::Activation::identity};
  m.d_spec = models::MlpSpec{{2, 1}, models::Activation::relu, models::Activation::sigmoid};
  m.g = {{Tensor::matrix({{1, 0}, {0, 1}})}, {Tensor::vector({0, 0})}};
  m.d = {{Tensor::matrix({{w0}, {w1}})}, {Tensor::vector({b})}};
  return m;
}

inline Tensor unit_row(double angle) { return Tensor::matrix({{std::cos(angle), std::sin(angle)}}); }

}  // namespace rgan::testing
