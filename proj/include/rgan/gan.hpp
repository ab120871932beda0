#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rgan/autodiff.hpp"
#include "rgan/data.hpp"
#include "rgan/models.hpp"

namespace rgan::gan {

enum class LossVariant { minimax, non_saturating };

std::string to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& name);

struct GanConfig {
  std::size_t batch_size = 64;
  std::size_t latent_dim = 8;
  std::vector<std::size_t> hidden{64, 64};
  models::Activation activation = models::Activation::leaky_relu;
  std::uint64_t steps = 20000;
  std::size_t d_steps_per_g_step = 1;
  models::AdamConfig g_adam{};
  models::AdamConfig d_adam{};
  LossVariant loss = LossVariant::minimax;
  /// Fixed training set size; 0 draws every batch fresh from the source.
  std::size_t train_size = 0;

  void validate() const;
  friend bool operator==(const GanConfig&, const GanConfig&) = default;
};

/// Generator and discriminator together.
struct GanModel {
  models::MlpSpec g_spec;
  models::MlpSpec d_spec;
  models::ParamSet g;
  models::ParamSet d;

  Tensor generate(const Tensor& z) const { return models::forward(g_spec, g, z); }
  Tensor discriminate(const Tensor& x) const { return models::forward(d_spec, d, x); }
};

/// Independent, reproducible sub-seed for one consumer of randomness.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

namespace stream {
inline constexpr std::uint64_t g_init = 1;
inline constexpr std::uint64_t d_init = 2;
inline constexpr std::uint64_t train_pool = 3;
inline constexpr std::uint64_t batches = 4;
inline constexpr std::uint64_t noise = 5;
inline constexpr std::uint64_t eval = 6;
}  // namespace stream

/// i.i.d. standard normal m x latent_dim batch.
Tensor sample_latent(std::size_t m, std::size_t latent_dim, std::mt19937_64& rng);

// Objective building blocks on D outputs (m x 1).
ad::Var mean_log(ad::Var d_out);            // (1/m) sum log D
ad::Var mean_log_one_minus(ad::Var d_out);  // (1/m) sum log(1 - D)

/// S_m = mean log D(x) + mean log(1 - D(fake)); D ascends this.
ad::Var d_objective(const models::BoundMlp& d, ad::Var x, ad::Var fake);
/// Generator loss on D(fake); G descends this.
ad::Var g_objective(const models::BoundMlp& d, ad::Var fake, LossVariant variant);

double d_loss_baseline(const GanModel& model, const Tensor& x, const Tensor& z);
double g_loss_baseline(const GanModel& model, const Tensor& z, LossVariant variant);

struct StepLosses {
  double d_loss = 0.0;  // objective D ascended
  double g_loss = 0.0;  // loss G descended
};

struct TrainState {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  GanModel model;
  models::AdamState g_opt;
  models::AdamState d_opt;
  std::mt19937_64 rng;
  std::mt19937_64 noise_rng;
  std::optional<Tensor> train_pool;
  StepLosses last{};
};

TrainState init_state(const GanConfig& config, const DataSource& data, std::uint64_t seed);

/// Real batch: uniform rows of the training pool, or fresh draws.
Tensor sample_real(TrainState& state, const DataSource& data, std::size_t m);

/// One iteration: d_steps_per_g_step D ascents then one G descent.
StepLosses baseline_step(TrainState& state, const GanConfig& config, const DataSource& data);

/// Called at step 0, every `eval_interval` steps and after the final step.
using Observer = std::function<void(const TrainState&)>;

void train_baseline(TrainState& state, const GanConfig& config, const DataSource& data,
                    std::uint64_t eval_interval, const Observer& observe);

/// Throws DivergenceError naming the step if either loss is not finite.
void check_finite(const StepLosses& losses, std::uint64_t step);

}  // namespace rgan::gan
