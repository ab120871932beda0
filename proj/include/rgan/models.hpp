#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgan/autodiff.hpp"
#include "rgan/tensor.hpp"

namespace rgan::models {

enum class Activation { identity, relu, leaky_relu, tanh, sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Layer sizes from input to output plus the activations between them.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  Activation hidden = Activation::leaky_relu;
  Activation output = Activation::identity;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }

  /// Throws ContractError when the spec is unusable.
  void validate() const;
  /// Additional discriminator constraints: scalar sigmoid head.
  void validate_discriminator() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Generator spec: latent -> hidden... -> data, identity head.
MlpSpec generator_spec(std::size_t latent_dim, const std::vector<std::size_t>& hidden, std::size_t data_dim,
                       Activation act = Activation::leaky_relu);
/// Discriminator spec: data -> hidden... -> 1, sigmoid head.
MlpSpec discriminator_spec(std::size_t data_dim, const std::vector<std::size_t>& hidden,
                           Activation act = Activation::leaky_relu);

/// Weights are stored [fan_in x fan_out] so a batch multiplies from the left.
struct ParamSet {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  std::size_t num_tensors() const { return weights.size() + biases.size(); }
  /// Flattened view in (W0, b0, W1, b1, ...) order.
  const Tensor& tensor(std::size_t i) const;
  Tensor& tensor(std::size_t i);

  bool matches(const MlpSpec& spec) const;
  friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

/// Glorot-uniform weights, zero biases; deterministic in `seed`.
ParamSet init_params(const MlpSpec& spec, std::uint64_t seed);
ParamSet zeros_like(const ParamSet& p);

/// Parameters placed on a tape, either trainable (leaves) or frozen.
struct BoundMlp {
  const MlpSpec* spec = nullptr;
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
};

BoundMlp bind(ad::Tape& tape, const MlpSpec& spec, const ParamSet& params, bool trainable);

/// Records the layered affine + activation pass on the input's tape.
ad::Var forward(const BoundMlp& net, ad::Var batch);

/// Forward pass on a detached tape. Rows are independent, so large batches
/// are evaluated in chunks without changing any result.
Tensor forward(const MlpSpec& spec, const ParamSet& params, const Tensor& batch);

/// Gradient of the tape root w.r.t. every parameter of a trainable binding.
ParamSet collect_gradients(const ad::Gradients& grads, const BoundMlp& net);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Throws ContractError for lr <= 0, betas outside [0, 1) or eps <= 0.
void validate(const AdamConfig& config);

struct AdamState {
  AdamConfig config;
  std::uint64_t t = 0;
  ParamSet m;
  ParamSet v;

  static AdamState init(const ParamSet& params, AdamConfig config);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update; `grads` must mirror `params`.
void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads);

}  // namespace rgan::models
