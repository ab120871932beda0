#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rgan/robust.hpp"

// Closed-form checks of the optimal discriminator and the value of the game
// on discrete densities, plus an empirical train/fresh gap for a trained D.
namespace rgan::theory {

/// Probability table over distinct support points of dimension `dim`.
struct DiscreteDensity {
  std::size_t dim = 1;
  std::vector<double> support;  // size() x dim, row-major
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  /// Throws DomainError on negative or unnormalized probabilities (1e-12)
  /// and DimensionError on malformed or repeated support points.
  void validate() const;

  /// Support 0, 1, ..., probs.size() - 1.
  static DiscreteDensity on_line(std::vector<double> probs);

  friend bool operator==(const DiscreteDensity&, const DiscreteDensity&) = default;
};

/// Pointwise (1 - lambda) p + lambda p_worst.
DiscreteDensity mixture(const DiscreteDensity& p, const DiscreteDensity& p_worst, double lambda);

/// D*(x) = p_r(x) / (p_r(x) + p_g(x)) at every support point.
std::vector<double> optimal_discriminator(const DiscreteDensity& p_r, const DiscreteDensity& p_g);

/// Jensen-Shannon divergence in nats; 0 log 0 = 0.
double jsd(const DiscreteDensity& p, const DiscreteDensity& q);
double kl(const DiscreteDensity& p, const DiscreteDensity& q);

/// sum p_r log d + sum p_g log(1 - d), skipping zero-mass terms.
double value_function(const DiscreteDensity& p_r, const DiscreteDensity& p_g, const std::vector<double>& d);

struct OptimumValue {
  double value;     // value_function at D*
  double identity;  // -2 log 2 + 2 JSD
};

inline constexpr double kIdentityTolerance = 1e-9;

/// Value of the game at D*; throws TheoryCheckError if it differs from
/// -2 log 2 + 2 JSD by more than `tolerance`.
OptimumValue value_at_optimum(const DiscreteDensity& p_r, const DiscreteDensity& p_g,
                              double tolerance = kIdentityTolerance);

/// Maximizer of a unimodal f on [lo, hi] by golden-section search, to an
/// interval width of `tol`.
double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12);

/// argmax over d in (0, 1) of a log d + b log(1 - d), found numerically.
double pointwise_maximizer(double a, double b);

// Random densities and worst-case companions used by the checks.
DiscreteDensity random_density(std::size_t points, std::mt19937_64& rng);
/// Cyclic shift of the probability table by `k` points (support unchanged).
DiscreteDensity shifted(const DiscreteDensity& p, std::size_t k);

using OptimalDiscriminatorFn =
    std::function<std::vector<double>(const DiscreteDensity&, const DiscreteDensity&)>;

struct CheckOptions {
  std::uint64_t seed = 20240601;
  std::size_t trials = 100;
  std::size_t support_size = 32;
  double lambda = 0.1;
  /// Formula under test; swapped out by negative-control fixtures.
  OptimalDiscriminatorFn d_star = optimal_discriminator;
};

struct CheckResult {
  std::string name;
  double lhs = 0.0;  // worst case over trials
  double rhs = 0.0;
  double tolerance = 0.0;
  std::string relation;  // how lhs and rhs are compared
  bool pass = false;
};

std::vector<CheckResult> run_checks(const CheckOptions& options = {});
bool all_pass(const std::vector<CheckResult>& results);
void print_table(std::ostream& out, const std::vector<CheckResult>& results);

/// Which D objective a gap estimate evaluates.
struct GapObjective {
  bool robust = false;
  double lambda = 0.0;
  robust::Weighting weighting = robust::Weighting::eq11_convex;
  robust::PerturbationConfig perturb{};
};

struct GapEstimate {
  double train_value = 0.0;
  double population_value = 0.0;
  double gap = 0.0;
  std::size_t n = 0;
  std::size_t N = 0;
  std::uint64_t seed = 0;
};

/// D objective of `model` on explicit real and fake sets. Large sets are
/// processed in chunks; a constant D yields the same value for any set.
double d_objective_value(const gan::GanModel& model, const GapObjective& objective, const Tensor& real,
                         const Tensor& fake);

/// |objective(train, fake) - objective(fresh, fake)| with no size constraint.
GapEstimate gap_between(const gan::GanModel& model, const GapObjective& objective, const Tensor& train_set,
                        const Tensor& fresh_set, const Tensor& fake);

/// Objective on the n training samples versus N fresh samples from `data`.
/// Both sides share one fake set of N generated samples, so the gap isolates
/// the real-data term. Requires N >= 50 n.
GapEstimate generalization_gap(const gan::GanModel& model, const GapObjective& objective, const Tensor& train_set,
                               const gan::DataSource& data, std::size_t fresh_n, std::uint64_t seed);

}  // namespace rgan::theory
