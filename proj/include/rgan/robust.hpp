#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rgan/gan.hpp"

// Robust GAN training: worst-case perturbations of the generator's latent
// inputs and of the discriminator's real/fake inputs, and the training step
// that mixes clean and perturbed objectives.
namespace rgan::robust {

struct PerturbationConfig {
  double eps1 = 0.01;      // latent perturbation magnitude
  double eps2 = 0.05;      // data perturbation magnitude
  double lambda_z = 1.0;   // penalty on ||r||^2 in the latent objective
  double lambda_d = 1.0;   // penalty on ||r||^2 in the data objectives
  std::size_t inner_steps = 1;
  double inner_lr = 0.05;  // only used when inner_steps > 1

  void validate() const;
  friend bool operator==(const PerturbationConfig&, const PerturbationConfig&) = default;
};

/// How the clean and perturbed terms are combined: (1 - lambda, lambda) or
/// (1, lambda).
enum class Weighting { eq11_convex, algorithm1_additive };

enum class Ablation { both, g_only, d_only, random_noise, none };

std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& name);
std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& name);

struct RganConfig {
  gan::GanConfig base;
  PerturbationConfig perturb;
  double lambda = 0.1;
  Weighting weighting = Weighting::eq11_convex;
  Ablation ablation = Ablation::both;

  void validate() const;
  friend bool operator==(const RganConfig&, const RganConfig&) = default;
};

/// Unit-norm (or zero) perturbation directions, one row per sample.
struct PerturbationBatch {
  Tensor r;
  std::vector<double> norms;

  bool is_zero() const { return r.is_zero(); }
};

/// Row-normalizes `g`; rows with zero norm stay zero.
PerturbationBatch normalize_rows(const Tensor& g);

/// Throws ContractError unless every row norm is 1 (to 1e-9) or exactly 0.
void check_unit_rows(const PerturbationBatch& batch);

// Per-sample inner objectives at perturbation eps * u.
//   latent:  log(1 - D(G(z + eps1 u))) - lambda_z ||eps1 u||^2   (maximized)
//   real:    log D(x + eps2 u)         + lambda_d ||eps2 u||^2   (minimized)
//   fake:    log(1 - D(y + eps2 u))    + lambda_d ||eps2 u||^2   (minimized)
std::vector<double> latent_objective(const gan::GanModel& model, const Tensor& z, const Tensor& u,
                                     const PerturbationConfig& cfg);
std::vector<double> real_objective(const gan::GanModel& model, const Tensor& x, const Tensor& u,
                                   const PerturbationConfig& cfg);
std::vector<double> fake_objective(const gan::GanModel& model, const Tensor& fake, const Tensor& u,
                                   const PerturbationConfig& cfg);

/// Worst latent directions for the generator (ascent on the latent
/// objective). Parameters are frozen. When `trace` is given it receives the
/// summed objective at every normalized iterate.
PerturbationBatch worst_latent_perturbation(const gan::GanModel& model, const Tensor& z,
                                            const PerturbationConfig& cfg, std::vector<double>* trace = nullptr);

struct DataPerturbations {
  PerturbationBatch real;
  PerturbationBatch fake;
};

/// Worst real/fake directions for the discriminator (descent on the data
/// objectives) at x and G(z).
DataPerturbations worst_data_perturbations(const gan::GanModel& model, const Tensor& x, const Tensor& z,
                                           const PerturbationConfig& cfg);
/// The real-side and fake-side solves on their own.
PerturbationBatch worst_real_perturbation(const gan::GanModel& model, const Tensor& x, const PerturbationConfig& cfg);
PerturbationBatch worst_fake_perturbation(const gan::GanModel& model, const Tensor& fake,
                                          const PerturbationConfig& cfg);
/// Same, with G(z) already evaluated.
DataPerturbations worst_data_perturbations_at(const gan::GanModel& model, const Tensor& x, const Tensor& fake,
                                              const PerturbationConfig& cfg,
                                              std::vector<double>* real_trace = nullptr,
                                              std::vector<double>* fake_trace = nullptr);

struct TermWeights {
  double clean;
  double perturbed;
};
TermWeights term_weights(double lambda, Weighting weighting);

/// Robust discriminator objective (D ascends). With no perturbations, a zero
/// perturbed weight, or eps2 = 0 the perturbed batch coincides with the clean
/// one and the objective collapses onto the clean S_m term.
ad::Var rgan_d_objective(ad::Tape& tape, const models::BoundMlp& d, const Tensor& x, const Tensor& fake,
                         const DataPerturbations* r, double lambda, double eps2, Weighting weighting);

/// Robust generator loss (G descends). `g` is the trainable generator binding,
/// `d` a frozen discriminator on the same tape.
ad::Var rgan_g_objective(ad::Tape& tape, const models::BoundMlp& g, const models::BoundMlp& d, const Tensor& z,
                         const PerturbationBatch* r_z, double lambda, double eps1, Weighting weighting,
                         gan::LossVariant variant = gan::LossVariant::minimax);

double rgan_d_loss(const gan::GanModel& model, const Tensor& x, const Tensor& z, const DataPerturbations& r,
                   double lambda, double eps2, Weighting weighting);
double rgan_g_loss(const gan::GanModel& model, const Tensor& z, const PerturbationBatch& r_z, double lambda,
                   double eps1, Weighting weighting, gan::LossVariant variant = gan::LossVariant::minimax);

/// Uniformly distributed unit directions.
PerturbationBatch random_unit_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

/// One robust iteration: D ascends the robust objective against freshly
/// solved data perturbations, then G descends the robust loss on a new
/// latent batch with its own worst latent perturbation.
gan::StepLosses rgan_train_step(gan::TrainState& state, const RganConfig& config, const gan::DataSource& data);

void train_rgan(gan::TrainState& state, const RganConfig& config, const gan::DataSource& data,
                std::uint64_t eval_interval, const gan::Observer& observe);

}  // namespace rgan::robust
