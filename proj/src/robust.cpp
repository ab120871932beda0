#include "rgan/robust.hpp"

#include <cmath>

#include "rgan/errors.hpp"

namespace rgan::robust {

void PerturbationConfig::validate() const {
  if (!(eps1 >= 0) || !(eps2 >= 0) || !(lambda_z >= 0) || !(lambda_d >= 0)) {
    throw ContractError("perturbation magnitudes and penalties must be non-negative");
  }
  if (inner_steps < 1) throw ContractError("inner_steps must be at least 1");
  if (!(inner_lr > 0)) throw ContractError("inner_lr must be positive");
}

std::string to_string(Weighting w) { return w == Weighting::eq11_convex ? "eq11_convex" : "algorithm1_additive"; }

Weighting weighting_from_string(const std::string& name) {
  if (name == "eq11_convex") return Weighting::eq11_convex;
  if (name == "algorithm1_additive") return Weighting::algorithm1_additive;
  throw InputError("unknown weighting '" + name + "'");
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::both: return "both";
    case Ablation::g_only: return "g_only";
    case Ablation::d_only: return "d_only";
    case Ablation::random_noise: return "random_noise";
    case Ablation::none: return "none";
  }
  return "?";
}

Ablation ablation_from_string(const std::string& name) {
  for (auto a : {Ablation::both, Ablation::g_only, Ablation::d_only, Ablation::random_noise, Ablation::none}) {
    if (to_string(a) == name) return a;
  }
  throw InputError("unknown ablation '" + name + "'");
}

void RganConfig::validate() const {
  base.validate();
  perturb.validate();
  if (!(lambda >= 0 && lambda <= 1)) throw ContractError("lambda must lie in [0, 1]");
}

PerturbationBatch normalize_rows(const Tensor& g) {
  PerturbationBatch out{g, std::vector<double>(g.rows(), 0.0)};
  auto d = out.r.mutable_data();
  const auto n = g.cols();
  for (std::size_t i = 0; i < g.rows(); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) sq += d[i * n + j] * d[i * n + j];
    const double norm = std::sqrt(sq);
    if (norm == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] /= norm;
    double check = 0.0;
    for (std::size_t j = 0; j < n; ++j) check += d[i * n + j] * d[i * n + j];
    out.norms[i] = std::sqrt(check);
  }
  return out;
}

void check_unit_rows(const PerturbationBatch& batch) {
  for (std::size_t i = 0; i < batch.norms.size(); ++i) {
    const double n = batch.norms[i];
    if (n != 0.0 && std::abs(n - 1.0) > 1e-9) {
      throw ContractError("perturbation row " + std::to_string(i) + " has norm " + std::to_string(n));
    }
  }
}

namespace {

enum class Target { latent, real, fake };

struct InnerEval {
  Tensor grad;  // d objective / d r, rows per sample
  double total = 0.0;
  std::vector<double> per_row;
};

// Inner objective at perturbation r (not a direction: r already carries eps).
InnerEval inner_eval(const gan::GanModel& model, const Tensor& base, const Tensor& r, Target target,
                     double penalty, bool need_grad) {
  ad::Tape tape;
  auto d = models::bind(tape, model.d_spec, model.d, false);
  auto rv = need_grad ? tape.leaf(r) : tape.constant(r);
  auto input = ad::add(tape.constant(base), rv);
  if (target == Target::latent) {
    auto g = models::bind(tape, model.g_spec, model.g, false);
    input = models::forward(g, input);
  }
  auto out = models::forward(d, input);
  auto term = target == Target::real ? ad::log(out) : ad::log(ad::add_scalar(ad::neg(out), 1.0));
  auto sq = ad::l2_norm_sq(rv, ad::Axis::per_row);
  auto total = ad::add(ad::sum(term), ad::scale(ad::sum(sq), penalty));

  InnerEval e;
  e.total = total.value().item();
  e.per_row.resize(base.rows());
  for (std::size_t i = 0; i < base.rows(); ++i) e.per_row[i] = term.value()[i] + penalty * sq.value()[i];
  if (need_grad) e.grad = tape.backward(total).of(rv);
  return e;
}

// Projected gradient on the unit sphere. direction = +1 ascends, -1 descends.
PerturbationBatch solve(const gan::GanModel& model, const Tensor& base, Target target, double eps, double penalty,
                        double direction, const PerturbationConfig& cfg, std::vector<double>* trace) {
  const auto rows = base.rows();
  const auto cols = base.cols();
  auto start = inner_eval(model, base, Tensor::zeros({rows, cols}), target, penalty, true);
  for (auto& v : start.grad.mutable_data()) v *= direction;
  auto u = normalize_rows(start.grad);
  if (trace) trace->clear();
  for (std::size_t k = 1; k < cfg.inner_steps; ++k) {
    Tensor r = u.r;
    for (auto& v : r.mutable_data()) v *= eps;
    auto e = inner_eval(model, base, r, target, penalty, true);
    if (trace) trace->push_back(e.total);
    u = normalize_rows(axpy(u.r, direction * cfg.inner_lr, e.grad));
  }
  if (trace) {
    Tensor r = u.r;
    for (auto& v : r.mutable_data()) v *= eps;
    trace->push_back(inner_eval(model, base, r, target, penalty, false).total);
  }
  return u;
}

std::vector<double> objective_rows(const gan::GanModel& model, const Tensor& base, const Tensor& u, double eps,
                                   Target target, double penalty) {
  if (u.shape() != base.shape()) throw DimensionError("perturbation shape does not match its batch");
  Tensor r = u;
  for (auto& v : r.mutable_data()) v *= eps;
  return inner_eval(model, base, r, target, penalty, false).per_row;
}

}  // namespace

std::vector<double> latent_objective(const gan::GanModel& model, const Tensor& z, const Tensor& u,
                                     const PerturbationConfig& cfg) {
  return objective_rows(model, z, u, cfg.eps1, Target::latent, -cfg.lambda_z);
}

std::vector<double> real_objective(const gan::GanModel& model, const Tensor& x, const Tensor& u,
                                   const PerturbationConfig& cfg) {
  return objective_rows(model, x, u, cfg.eps2, Target::real, cfg.lambda_d);
}

std::vector<double> fake_objective(const gan::GanModel& model, const Tensor& fake, const Tensor& u,
                                   const PerturbationConfig& cfg) {
  return objective_rows(model, fake, u, cfg.eps2, Target::fake, cfg.lambda_d);
}

PerturbationBatch worst_latent_perturbation(const gan::GanModel& model, const Tensor& z,
                                            const PerturbationConfig& cfg, std::vector<double>* trace) {
  cfg.validate();
  return solve(model, z, Target::latent, cfg.eps1, -cfg.lambda_z, +1.0, cfg, trace);
}

PerturbationBatch worst_real_perturbation(const gan::GanModel& model, const Tensor& x, const PerturbationConfig& cfg) {
  cfg.validate();
  return solve(model, x, Target::real, cfg.eps2, cfg.lambda_d, -1.0, cfg, nullptr);
}

PerturbationBatch worst_fake_perturbation(const gan::GanModel& model, const Tensor& fake,
                                          const PerturbationConfig& cfg) {
  cfg.validate();
  return solve(model, fake, Target::fake, cfg.eps2, cfg.lambda_d, -1.0, cfg, nullptr);
}

DataPerturbations worst_data_perturbations_at(const gan::GanModel& model, const Tensor& x, const Tensor& fake,
                                              const PerturbationConfig& cfg, std::vector<double>* real_trace,
                                              std::vector<double>* fake_trace) {
  cfg.validate();
  return DataPerturbations{solve(model, x, Target::real, cfg.eps2, cfg.lambda_d, -1.0, cfg, real_trace),
                           solve(model, fake, Target::fake, cfg.eps2, cfg.lambda_d, -1.0, cfg, fake_trace)};
}

DataPerturbations worst_data_perturbations(const gan::GanModel& model, const Tensor& x, const Tensor& z,
                                           const PerturbationConfig& cfg) {
  if (x.rows() != z.rows()) throw DimensionError("real and latent batches must have equal size");
  return worst_data_perturbations_at(model, x, model.generate(z), cfg);
}

TermWeights term_weights(double lambda, Weighting weighting) {
  return weighting == Weighting::eq11_convex ? TermWeights{1.0 - lambda, lambda} : TermWeights{1.0, lambda};
}

namespace {

// Total weight of the clean term once an identical perturbed term is folded
// into it.
double merged_weight(double lambda, Weighting weighting) {
  return weighting == Weighting::eq11_convex ? 1.0 : 1.0 + lambda;
}

Tensor shifted(const Tensor& base, double eps, const PerturbationBatch& r) {
  if (r.r.shape() != base.shape()) throw DimensionError("perturbation shape does not match its batch");
  return axpy(base, eps, r.r);
}

}  // namespace

ad::Var rgan_d_objective(ad::Tape& tape, const models::BoundMlp& d, const Tensor& x, const Tensor& fake,
                         const DataPerturbations* r, double lambda, double eps2, Weighting weighting) {
  const auto w = term_weights(lambda, weighting);
  auto clean = gan::d_objective(d, tape.constant(x), tape.constant(fake));
  if (w.perturbed == 0.0) return ad::scale(clean, w.clean);
  if (!r || eps2 == 0.0 || (r->real.is_zero() && r->fake.is_zero())) {
    return ad::scale(clean, merged_weight(lambda, weighting));
  }
  auto perturbed = gan::d_objective(d, tape.constant(shifted(x, eps2, r->real)),
                                    tape.constant(shifted(fake, eps2, r->fake)));
  return ad::add(ad::scale(clean, w.clean), ad::scale(perturbed, w.perturbed));
}

ad::Var rgan_g_objective(ad::Tape& tape, const models::BoundMlp& g, const models::BoundMlp& d, const Tensor& z,
                         const PerturbationBatch* r_z, double lambda, double eps1, Weighting weighting,
                         gan::LossVariant variant) {
  const auto w = term_weights(lambda, weighting);
  auto clean = gan::g_objective(d, models::forward(g, tape.constant(z)), variant);
  if (w.perturbed == 0.0) return ad::scale(clean, w.clean);
  if (!r_z || eps1 == 0.0 || r_z->is_zero()) return ad::scale(clean, merged_weight(lambda, weighting));
  auto perturbed = gan::g_objective(d, models::forward(g, tape.constant(shifted(z, eps1, *r_z))), variant);
  return ad::add(ad::scale(clean, w.clean), ad::scale(perturbed, w.perturbed));
}

double rgan_d_loss(const gan::GanModel& model, const Tensor& x, const Tensor& z, const DataPerturbations& r,
                   double lambda, double eps2, Weighting weighting) {
  ad::Tape tape;
  auto d = models::bind(tape, model.d_spec, model.d, false);
  return rgan_d_objective(tape, d, x, model.generate(z), &r, lambda, eps2, weighting).value().item();
}

double rgan_g_loss(const gan::GanModel& model, const Tensor& z, const PerturbationBatch& r_z, double lambda,
                   double eps1, Weighting weighting, gan::LossVariant variant) {
  ad::Tape tape;
  auto g = models::bind(tape, model.g_spec, model.g, false);
  auto d = models::bind(tape, model.d_spec, model.d, false);
  return rgan_g_objective(tape, g, d, z, &r_z, lambda, eps1, weighting, variant).value().item();
}

PerturbationBatch random_unit_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  return normalize_rows(gan::sample_latent(rows, cols, rng));
}

namespace {

bool perturbs_discriminator(Ablation a) {
  return a == Ablation::both || a == Ablation::d_only || a == Ablation::random_noise;
}

bool perturbs_generator(Ablation a) {
  return a == Ablation::both || a == Ablation::g_only || a == Ablation::random_noise;
}

}  // namespace

gan::StepLosses rgan_train_step(gan::TrainState& state, const RganConfig& config, const gan::DataSource& data) {
  auto& model = state.model;
  const auto& base = config.base;
  const auto& pc = config.perturb;
  const auto m = base.batch_size;
  const double lambda = config.ablation == Ablation::none ? 0.0 : config.lambda;
  gan::StepLosses losses;

  for (std::size_t k = 0; k < base.d_steps_per_g_step; ++k) {
    auto x = gan::sample_real(state, data, m);
    auto z = gan::sample_latent(m, base.latent_dim, state.rng);
    auto fake = model.generate(z);

    std::optional<DataPerturbations> r;
    if (lambda > 0.0 && pc.eps2 > 0.0 && perturbs_discriminator(config.ablation)) {
      if (config.ablation == Ablation::random_noise) {
        auto r1 = random_unit_rows(m, data.dim(), state.noise_rng);
        auto r2 = random_unit_rows(m, data.dim(), state.noise_rng);
        r = DataPerturbations{std::move(r1), std::move(r2)};
      } else {
        r = worst_data_perturbations_at(model, x, fake, pc);
      }
      check_unit_rows(r->real);
      check_unit_rows(r->fake);
    }

    ad::Tape tape;
    auto d = models::bind(tape, model.d_spec, model.d, true);
    auto objective = rgan_d_objective(tape, d, x, fake, r ? &*r : nullptr, lambda, pc.eps2, config.weighting);
    auto loss = ad::neg(objective);
    auto grads = models::collect_gradients(tape.backward(loss), d);
    losses.d_loss = objective.value().item();
    if (!std::isfinite(losses.d_loss)) gan::check_finite(losses, state.step + 1);
    models::adam_step(state.d_opt, model.d, grads);
  }

  auto z = gan::sample_latent(m, base.latent_dim, state.rng);
  std::optional<PerturbationBatch> r_z;
  if (lambda > 0.0 && pc.eps1 > 0.0 && perturbs_generator(config.ablation)) {
    r_z = config.ablation == Ablation::random_noise ? random_unit_rows(m, base.latent_dim, state.noise_rng)
                                                    : worst_latent_perturbation(model, z, pc);
    check_unit_rows(*r_z);
  }
  ad::Tape tape;
  auto g = models::bind(tape, model.g_spec, model.g, true);
  auto d = models::bind(tape, model.d_spec, model.d, false);
  auto loss = rgan_g_objective(tape, g, d, z, r_z ? &*r_z : nullptr, lambda, pc.eps1, config.weighting, base.loss);
  auto grads = models::collect_gradients(tape.backward(loss), g);
  losses.g_loss = loss.value().item();
  gan::check_finite(losses, state.step + 1);
  models::adam_step(state.g_opt, model.g, grads);

  state.step += 1;
  state.last = losses;
  return losses;
}

void train_rgan(gan::TrainState& state, const RganConfig& config, const gan::DataSource& data,
                std::uint64_t eval_interval, const gan::Observer& observe) {
  config.validate();
  if (observe && state.step == 0) observe(state);
  while (state.step < config.base.steps) {
    try {
      rgan_train_step(state, config, data);
    } catch (const DomainError& e) {
      // Overflow surfaces as a non-finite tensor before any loss is read.
      throw DivergenceError("non-finite values at step " + std::to_string(state.step + 1) + ": " + e.what());
    }
    const bool due = eval_interval > 0 && state.step % eval_interval == 0;
    if (observe && (due || state.step == config.base.steps)) observe(state);
  }
}

}  // namespace rgan::robust
