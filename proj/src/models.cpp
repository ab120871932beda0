#include "rgan/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rgan/errors.hpp"

namespace rgan::models {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  for (auto a : {Activation::identity, Activation::relu, Activation::leaky_relu, Activation::tanh,
                 Activation::sigmoid}) {
    if (to_string(a) == name) return a;
  }
  throw InputError("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw ContractError("an MLP needs at least two layer sizes");
  if (std::any_of(layer_sizes.begin(), layer_sizes.end(), [](std::size_t s) { return s == 0; })) {
    throw ContractError("layer sizes must be positive");
  }
  if (hidden == Activation::identity || hidden == Activation::sigmoid) {
    throw ContractError("hidden activation must be relu, leaky_relu or tanh");
  }
  if (output != Activation::identity && output != Activation::sigmoid) {
    throw ContractError("output activation must be identity or sigmoid");
  }
}

void MlpSpec::validate_discriminator() const {
  validate();
  if (output_dim() != 1) throw ContractError("discriminator output size must be 1");
  if (output != Activation::sigmoid) throw ContractError("discriminator output activation must be sigmoid");
}

static std::vector<std::size_t> chain(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

MlpSpec generator_spec(std::size_t latent_dim, const std::vector<std::size_t>& hidden, std::size_t data_dim,
                       Activation act) {
  MlpSpec s{chain(latent_dim, hidden, data_dim), act, Activation::identity};
  s.validate();
  return s;
}

MlpSpec discriminator_spec(std::size_t data_dim, const std::vector<std::size_t>& hidden, Activation act) {
  MlpSpec s{chain(data_dim, hidden, 1), act, Activation::sigmoid};
  s.validate_discriminator();
  return s;
}

const Tensor& ParamSet::tensor(std::size_t i) const { return i % 2 == 0 ? weights.at(i / 2) : biases.at(i / 2); }
Tensor& ParamSet::tensor(std::size_t i) { return i % 2 == 0 ? weights.at(i / 2) : biases.at(i / 2); }

bool ParamSet::matches(const MlpSpec& spec) const {
  if (weights.size() != spec.num_layers() || biases.size() != spec.num_layers()) return false;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    if (weights[l].shape() != Shape{spec.layer_sizes[l], spec.layer_sizes[l + 1]}) return false;
    if (biases[l].shape() != Shape{spec.layer_sizes[l + 1]}) return false;
  }
  return true;
}

ParamSet init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  ParamSet p;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const auto fan_in = spec.layer_sizes[l], fan_out = spec.layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = Tensor::zeros({fan_in, fan_out});
    for (auto& v : w.mutable_data()) v = dist(rng);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Tensor::zeros({fan_out}));
  }
  return p;
}

ParamSet zeros_like(const ParamSet& p) {
  ParamSet z;
  for (const auto& w : p.weights) z.weights.push_back(Tensor::zeros(w.shape()));
  for (const auto& b : p.biases) z.biases.push_back(Tensor::zeros(b.shape()));
  return z;
}

BoundMlp bind(ad::Tape& tape, const MlpSpec& spec, const ParamSet& params, bool trainable) {
  if (!params.matches(spec)) throw DimensionError("parameter shapes do not match the MLP spec");
  BoundMlp net;
  net.spec = &spec;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    net.weights.push_back(trainable ? tape.leaf(params.weights[l]) : tape.constant(params.weights[l]));
    net.biases.push_back(trainable ? tape.leaf(params.biases[l]) : tape.constant(params.biases[l]));
  }
  return net;
}

static ad::Var activate(Activation a, ad::Var x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return ad::relu(x);
    case Activation::leaky_relu: return ad::leaky_relu(x);
    case Activation::tanh: return ad::tanh(x);
    case Activation::sigmoid: return ad::sigmoid(x);
  }
  return x;
}

ad::Var forward(const BoundMlp& net, ad::Var batch) {
  const auto& spec = *net.spec;
  const auto& in = batch.value();
  if (in.rank() != 2 || in.cols() != spec.input_dim()) {
    throw DimensionError("forward: batch shape " + shape_string(in.shape()) + " does not match input size " +
                         std::to_string(spec.input_dim()));
  }
  ad::Var h = batch;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    h = ad::add_bias(ad::matmul(h, net.weights[l]), net.biases[l]);
    h = activate(l + 1 == spec.num_layers() ? spec.output : spec.hidden, h);
  }
  return h;
}

Tensor forward(const MlpSpec& spec, const ParamSet& params, const Tensor& batch) {
  constexpr std::size_t kChunk = 4096;
  const auto rows = batch.rows();
  if (rows <= kChunk) {
    ad::Tape tape;
    auto net = bind(tape, spec, params, false);
    return forward(net, tape.constant(batch)).value();
  }
  auto out = Tensor::zeros({rows, spec.output_dim()});
  auto dst = out.mutable_data();
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < rows; start += kChunk) {
    const auto stop = std::min(rows, start + kChunk);
    idx.resize(stop - start);
    for (std::size_t i = start; i < stop; ++i) idx[i - start] = i;
    auto part = forward(spec, params, gather_rows(batch, idx));
    std::copy(part.data().begin(), part.data().end(),
              dst.begin() + static_cast<std::ptrdiff_t>(start * spec.output_dim()));
  }
  return out;
}

ParamSet collect_gradients(const ad::Gradients& grads, const BoundMlp& net) {
  ParamSet g;
  for (auto w : net.weights) g.weights.push_back(grads.of(w));
  for (auto b : net.biases) g.biases.push_back(grads.of(b));
  return g;
}

void validate(const AdamConfig& config) {
  if (!(config.lr > 0) || !(config.beta1 >= 0 && config.beta1 < 1) || !(config.beta2 >= 0 && config.beta2 < 1) ||
      !(config.eps > 0)) {
    throw ContractError("invalid Adam hyperparameters");
  }
}

AdamState AdamState::init(const ParamSet& params, AdamConfig config) {
  validate(config);
  return AdamState{config, 0, zeros_like(params), zeros_like(params)};
}

void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads) {
  if (grads.num_tensors() != params.num_tensors()) throw ContractError("adam_step: gradient missing for a parameter");
  for (std::size_t i = 0; i < params.num_tensors(); ++i) {
    if (grads.tensor(i).shape() != params.tensor(i).shape()) {
      throw ContractError("adam_step: gradient shape mismatch for parameter " + std::to_string(i));
    }
  }
  state.t += 1;
  const auto& c = state.config;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.num_tensors(); ++i) {
    auto p = params.tensor(i).mutable_data();
    auto m = state.m.tensor(i).mutable_data();
    auto v = state.v.tensor(i).mutable_data();
    auto g = grads.tensor(i).data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace rgan::models
