#include "rgan/gan.hpp"

#include <cmath>

#include "rgan/errors.hpp"

namespace rgan::gan {

std::string to_string(LossVariant v) { return v == LossVariant::minimax ? "minimax" : "non_saturating"; }

LossVariant loss_variant_from_string(const std::string& name) {
  if (name == "minimax") return LossVariant::minimax;
  if (name == "non_saturating") return LossVariant::non_saturating;
  throw InputError("unknown loss variant '" + name + "'");
}

void GanConfig::validate() const {
  if (batch_size < 2) throw ContractError("batch size must be at least 2");
  if (latent_dim == 0) throw ContractError("latent dimension must be positive");
  if (steps < 1) throw ContractError("steps must be at least 1");
  if (d_steps_per_g_step < 1) throw ContractError("d_steps_per_g_step must be at least 1");
  if (hidden.empty()) throw ContractError("at least one hidden layer is required");
  models::validate(g_adam);
  models::validate(d_adam);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Tensor sample_latent(std::size_t m, std::size_t latent_dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto z = Tensor::zeros({m, latent_dim});
  for (auto& v : z.mutable_data()) v = normal(rng);
  return z;
}

ad::Var mean_log(ad::Var d_out) { return ad::mean(ad::log(d_out)); }

ad::Var mean_log_one_minus(ad::Var d_out) { return ad::mean(ad::log(ad::add_scalar(ad::neg(d_out), 1.0))); }

ad::Var d_objective(const models::BoundMlp& d, ad::Var x, ad::Var fake) {
  return ad::add(mean_log(models::forward(d, x)), mean_log_one_minus(models::forward(d, fake)));
}

ad::Var g_objective(const models::BoundMlp& d, ad::Var fake, LossVariant variant) {
  auto out = models::forward(d, fake);
  return variant == LossVariant::minimax ? mean_log_one_minus(out) : ad::neg(mean_log(out));
}

double d_loss_baseline(const GanModel& model, const Tensor& x, const Tensor& z) {
  if (x.rows() != z.rows()) throw DimensionError("real and latent batches must have equal size");
  ad::Tape tape;
  auto d = models::bind(tape, model.d_spec, model.d, false);
  return d_objective(d, tape.constant(x), tape.constant(model.generate(z))).value().item();
}

double g_loss_baseline(const GanModel& model, const Tensor& z, LossVariant variant) {
  ad::Tape tape;
  auto d = models::bind(tape, model.d_spec, model.d, false);
  return g_objective(d, tape.constant(model.generate(z)), variant).value().item();
}

TrainState init_state(const GanConfig& config, const DataSource& data, std::uint64_t seed) {
  config.validate();
  data.validate();
  TrainState s;
  s.seed = seed;
  s.model.g_spec = models::generator_spec(config.latent_dim, config.hidden, data.dim(), config.activation);
  s.model.d_spec = models::discriminator_spec(data.dim(), config.hidden, config.activation);
  s.model.g = models::init_params(s.model.g_spec, derive_seed(seed, stream::g_init));
  s.model.d = models::init_params(s.model.d_spec, derive_seed(seed, stream::d_init));
  s.g_opt = models::AdamState::init(s.model.g, config.g_adam);
  s.d_opt = models::AdamState::init(s.model.d, config.d_adam);
  s.rng.seed(derive_seed(seed, stream::batches));
  s.noise_rng.seed(derive_seed(seed, stream::noise));
  if (config.train_size > 0) {
    std::mt19937_64 pool_rng(derive_seed(seed, stream::train_pool));
    s.train_pool = data.sample(config.train_size, pool_rng);
  }
  return s;
}

Tensor sample_real(TrainState& state, const DataSource& data, std::size_t m) {
  if (!state.train_pool) return data.sample(m, state.rng);
  std::uniform_int_distribution<std::size_t> pick(0, state.train_pool->rows() - 1);
  std::vector<std::size_t> idx(m);
  for (auto& i : idx) i = pick(state.rng);
  return gather_rows(*state.train_pool, idx);
}

void check_finite(const StepLosses& losses, std::uint64_t step) {
  if (!std::isfinite(losses.d_loss)) {
    throw DivergenceError("non-finite discriminator loss at step " + std::to_string(step));
  }
  if (!std::isfinite(losses.g_loss)) {
    throw DivergenceError("non-finite generator loss at step " + std::to_string(step));
  }
}

StepLosses baseline_step(TrainState& state, const GanConfig& config, const DataSource& data) {
  auto& model = state.model;
  const auto m = config.batch_size;
  StepLosses losses;

  for (std::size_t k = 0; k < config.d_steps_per_g_step; ++k) {
    auto x = sample_real(state, data, m);
    auto z = sample_latent(m, config.latent_dim, state.rng);
    ad::Tape tape;
    auto d = models::bind(tape, model.d_spec, model.d, true);
    auto objective = d_objective(d, tape.constant(x), tape.constant(model.generate(z)));
    auto loss = ad::neg(objective);
    auto grads = models::collect_gradients(tape.backward(loss), d);
    losses.d_loss = objective.value().item();
    if (!std::isfinite(losses.d_loss)) check_finite(losses, state.step + 1);
    models::adam_step(state.d_opt, model.d, grads);
  }

  auto z = sample_latent(m, config.latent_dim, state.rng);
  ad::Tape tape;
  auto g = models::bind(tape, model.g_spec, model.g, true);
  auto d = models::bind(tape, model.d_spec, model.d, false);
  auto loss = g_objective(d, models::forward(g, tape.constant(z)), config.loss);
  auto grads = models::collect_gradients(tape.backward(loss), g);
  losses.g_loss = loss.value().item();
  check_finite(losses, state.step + 1);
  models::adam_step(state.g_opt, model.g, grads);

  state.step += 1;
  state.last = losses;
  return losses;
}

void train_baseline(TrainState& state, const GanConfig& config, const DataSource& data,
                    std::uint64_t eval_interval, const Observer& observe) {
  if (observe && state.step == 0) observe(state);
  while (state.step < config.steps) {
    try {
      baseline_step(state, config, data);
    } catch (const DomainError& e) {
      // Overflow surfaces as a non-finite tensor before any loss is read.
      throw DivergenceError("non-finite values at step " + std::to_string(state.step + 1) + ": " + e.what());
    }
    const bool due = eval_interval > 0 && state.step % eval_interval == 0;
    if (observe && (due || state.step == config.steps)) observe(state);
  }
}

}  // namespace rgan::gan
