#include "rgan/theory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "rgan/errors.hpp"

namespace rgan::theory {

namespace {

constexpr double kLog2 = std::numbers::ln2;

void require_same_support(const DiscreteDensity& p, const DiscreteDensity& q) {
  if (p.dim != q.dim || p.support != q.support || p.probs.size() != q.probs.size()) {
    throw DimensionError("densities must share one support");
  }
}

}  // namespace

void DiscreteDensity::validate() const {
  if (dim == 0) throw DimensionError("support dimension must be positive");
  if (probs.empty()) throw DimensionError("density has no support points");
  if (support.size() != probs.size() * dim) throw DimensionError("support size does not match probability table");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("probabilities must be finite and non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("probabilities sum to " + std::to_string(total));
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    std::vector<double> point(support.begin() + static_cast<std::ptrdiff_t>(i * dim),
                              support.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    if (!seen.insert(std::move(point)).second) throw DimensionError("support points must be distinct");
  }
}

DiscreteDensity DiscreteDensity::on_line(std::vector<double> probs) {
  DiscreteDensity d;
  d.dim = 1;
  d.support.resize(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) d.support[i] = static_cast<double>(i);
  d.probs = std::move(probs);
  return d;
}

DiscreteDensity mixture(const DiscreteDensity& p, const DiscreteDensity& p_worst, double lambda) {
  require_same_support(p, p_worst);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("mixture weight must lie in [0, 1]");
  auto out = p;
  if (lambda == 0.0) return out;
  if (lambda == 1.0) return p_worst;
  for (std::size_t i = 0; i < out.probs.size(); ++i) {
    out.probs[i] = (1.0 - lambda) * p.probs[i] + lambda * p_worst.probs[i];
  }
  return out;
}

std::vector<double> optimal_discriminator(const DiscreteDensity& p_r, const DiscreteDensity& p_g) {
  require_same_support(p_r, p_g);
  std::vector<double> d(p_r.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double total = p_r.probs[i] + p_g.probs[i];
    if (!(total > 0.0)) throw DomainError("support point " + std::to_string(i) + " has zero mass under both");
    d[i] = p_r.probs[i] / total;
  }
  return d;
}

double kl(const DiscreteDensity& p, const DiscreteDensity& q) {
  require_same_support(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.probs[i] == 0.0) continue;
    if (q.probs[i] == 0.0) return std::numeric_limits<double>::infinity();
    total += p.probs[i] * std::log(p.probs[i] / q.probs[i]);
  }
  return total;
}

double jsd(const DiscreteDensity& p, const DiscreteDensity& q) {
  require_same_support(p, q);
  auto m = p;
  for (std::size_t i = 0; i < m.size(); ++i) m.probs[i] = 0.5 * (p.probs[i] + q.probs[i]);
  return 0.5 * kl(p, m) + 0.5 * kl(q, m);
}

double value_function(const DiscreteDensity& p_r, const DiscreteDensity& p_g, const std::vector<double>& d) {
  require_same_support(p_r, p_g);
  if (d.size() != p_r.size()) throw DimensionError("discriminator table does not match the support");
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (p_r.probs[i] > 0.0) total += p_r.probs[i] * std::log(d[i]);
    if (p_g.probs[i] > 0.0) total += p_g.probs[i] * std::log(1.0 - d[i]);
  }
  return total;
}

OptimumValue value_at_optimum(const DiscreteDensity& p_r, const DiscreteDensity& p_g, double tolerance) {
  OptimumValue v{value_function(p_r, p_g, optimal_discriminator(p_r, p_g)), -2.0 * kLog2 + 2.0 * jsd(p_r, p_g)};
  if (!(std::abs(v.value - v.identity) <= tolerance)) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "value at D* " << v.value << " differs from -2log2 + 2JSD = " << v.identity;
    throw TheoryCheckError(msg.str());
  }
  return v;
}

double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw DomainError("golden-section search needs lo < hi");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 500 && b - a > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double pointwise_maximizer(double a, double b) {
  auto f = [a, b](double d) {
    double v = 0.0;
    if (a > 0.0) v += a * std::log(d);
    if (b > 0.0) v += b * std::log1p(-d);
    return v;
  };
  return golden_section_maximize(f, 1e-15, 1.0 - 1e-15);
}

DiscreteDensity random_density(std::size_t points, std::mt19937_64& rng) {
  std::exponential_distribution<double> weight(1.0);
  std::vector<double> probs(points);
  double total = 0.0;
  for (auto& p : probs) total += (p = weight(rng));
  for (auto& p : probs) p /= total;
  return DiscreteDensity::on_line(std::move(probs));
}

DiscreteDensity shifted(const DiscreteDensity& p, std::size_t k) {
  auto out = p;
  const auto n = p.size();
  for (std::size_t i = 0; i < n; ++i) out.probs[(i + k) % n] = p.probs[i];
  return out;
}

namespace {

double total_variation(const DiscreteDensity& p, const DiscreteDensity& q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p.probs[i] - q.probs[i]);
  return 0.5 * tv;
}

// Moves `mass` of probability from the first half of the support to the second.
DiscreteDensity nudged(const DiscreteDensity& p, double mass) {
  auto out = p;
  const auto half = p.size() / 2;
  double head = 0.0;
  for (std::size_t i = 0; i < half; ++i) head += p.probs[i];
  for (std::size_t i = 0; i < half; ++i) out.probs[i] -= mass * p.probs[i] / head;
  for (std::size_t i = half; i < p.size(); ++i) out.probs[i] += mass / static_cast<double>(p.size() - half);
  return out;
}

CheckResult close(std::string name, double lhs, double rhs, double tol) {
  return {std::move(name), lhs, rhs, tol, "|lhs-rhs| <= tol", std::abs(lhs - rhs) <= tol};
}

CheckResult at_most(std::string name, double lhs, double rhs, double tol) {
  return {std::move(name), lhs, rhs, tol, "lhs <= rhs + tol", lhs <= rhs + tol};
}

CheckResult at_least(std::string name, double lhs, double rhs, double tol) {
  return {std::move(name), lhs, rhs, tol, "lhs >= rhs - tol", lhs >= rhs - tol};
}

CheckResult above(std::string name, double lhs, double rhs, double tol) {
  return {std::move(name), lhs, rhs, tol, "lhs > rhs + tol", lhs > rhs + tol};
}

struct Pair {
  DiscreteDensity r;
  DiscreteDensity g;
};

// Mixtures of random nominal densities with cyclically shifted worst cases.
Pair random_pair(const CheckOptions& o, std::mt19937_64& rng, bool sparse) {
  auto p_r = random_density(o.support_size, rng);
  auto p_g = random_density(o.support_size, rng);
  if (sparse) {
    // Zero out a quarter of p_r; p_g stays strictly positive so every point
    // keeps mass.
    std::uniform_int_distribution<std::size_t> pick(0, o.support_size - 1);
    for (std::size_t k = 0; k < o.support_size / 4; ++k) p_r.probs[pick(rng)] = 0.0;
    double total = 0.0;
    for (double p : p_r.probs) total += p;
    for (auto& p : p_r.probs) p /= total;
  }
  std::uniform_int_distribution<std::size_t> shift(1, o.support_size - 1);
  return {mixture(p_r, shifted(p_r, shift(rng)), o.lambda), mixture(p_g, shifted(p_g, shift(rng)), o.lambda)};
}

}  // namespace

std::vector<CheckResult> run_checks(const CheckOptions& o) {
  if (o.trials == 0 || o.support_size < 4) throw ContractError("theory checks need trials and >= 4 support points");
  std::mt19937_64 rng(o.seed);
  const double floor_value = -2.0 * kLog2;

  double worst_dstar = 0.0, worst_identity = 0.0, worst_symmetry = 0.0;
  double max_jsd = 0.0, min_jsd = std::numeric_limits<double>::infinity();
  double min_excess = std::numeric_limits<double>::infinity();
  double equal_value_err = 0.0, equal_dstar_err = 0.0;
  double max_value_identity = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < o.trials; ++t) {
    auto pair = random_pair(o, rng, t % 2 == 1);
    const auto d = o.d_star(pair.r, pair.g);
    if (d.size() != pair.r.size()) throw ContractError("D* table has the wrong size");
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double oracle = pointwise_maximizer(pair.r.probs[i], pair.g.probs[i]);
      worst_dstar = std::max(worst_dstar, std::abs(d[i] - oracle));
    }
    const double value = value_function(pair.r, pair.g, d);
    const double identity = floor_value + 2.0 * jsd(pair.r, pair.g);
    worst_identity = std::max(worst_identity, std::abs(value - identity));
    max_value_identity = std::max(max_value_identity, value);

    const double forward = jsd(pair.r, pair.g), backward = jsd(pair.g, pair.r);
    worst_symmetry = std::max(worst_symmetry, std::abs(forward - backward));
    max_jsd = std::max({max_jsd, forward, backward});
    min_jsd = std::min({min_jsd, forward, backward});

    // Strictness on a near-equal pair with total variation of 1e-3. p_g has
    // full support, so every point keeps mass.
    auto near = nudged(pair.g, 1e-3);
    if (total_variation(pair.g, near) >= 1e-3 * (1.0 - 1e-9)) {
      min_excess = std::min(min_excess, value_function(pair.g, near, o.d_star(pair.g, near)) - floor_value);
    }
    if (total_variation(pair.r, pair.g) >= 1e-3) min_excess = std::min(min_excess, value - floor_value);

    const auto d_equal = o.d_star(pair.g, pair.g);
    for (double v : d_equal) equal_dstar_err = std::max(equal_dstar_err, std::abs(v - 0.5));
    equal_value_err = std::max(equal_value_err, std::abs(value_function(pair.g, pair.g, d_equal) - floor_value));
  }

  auto a = DiscreteDensity::on_line({1.0, 0.0});
  auto b = DiscreteDensity::on_line({0.0, 1.0});
  const double disjoint_value = value_function(a, b, o.d_star(a, b));

  std::vector<CheckResult> out;
  out.push_back(close("d_star_matches_golden_section", worst_dstar, 0.0, 1e-6));
  out.push_back(close("value_equals_minus_2log2_plus_2jsd", worst_identity, 0.0, kIdentityTolerance));
  out.push_back(close("equal_mixtures_d_star_is_half", equal_dstar_err, 0.0, 0.0));
  out.push_back(close("equal_mixtures_value_is_minus_2log2", equal_value_err, 0.0, 1e-12));
  out.push_back(above("differing_mixtures_value_above_minus_2log2", min_excess, 0.0, 1e-12));
  out.push_back(close("jsd_symmetric", worst_symmetry, 0.0, 1e-12));
  out.push_back(at_least("jsd_nonnegative", min_jsd, 0.0, 0.0));
  out.push_back(at_most("jsd_at_most_log2", max_jsd, kLog2, 1e-15));
  out.push_back(close("jsd_disjoint_is_log2", jsd(a, b), kLog2, 1e-15));
  out.push_back(close("disjoint_value_is_zero", disjoint_value, 0.0, 1e-12));
  out.push_back(at_most("value_at_most_zero", max_value_identity, 0.0, 1e-12));
  return out;
}

bool all_pass(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
}

void print_table(std::ostream& out, const std::vector<CheckResult>& results) {
  std::size_t width = 5;
  for (const auto& r : results) width = std::max(width, r.name.size());
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::left << std::setw(static_cast<int>(width)) << "check" << "  " << std::setw(24) << "lhs"
      << std::setw(24) << "rhs" << std::setw(10) << "tol" << std::setw(18) << "relation" << "result\n";
  for (const auto& r : results) {
    out << std::setw(static_cast<int>(width)) << r.name << "  " << std::setprecision(17) << std::setw(24) << r.lhs
        << std::setw(24) << r.rhs << std::setprecision(3) << std::setw(10) << r.tolerance << std::setw(18)
        << r.relation << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

namespace {

constexpr std::size_t kChunk = 4096;

// Mean of a sequence, taken relative to its first element so a constant
// sequence reproduces that element exactly.
class ShiftedMean {
 public:
  void add(double v) {
    if (count_ == 0) origin_ = v;
    const double y = (v - origin_) - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
    ++count_;
  }
  double value() const { return count_ == 0 ? 0.0 : origin_ + sum_ / static_cast<double>(count_); }

 private:
  double origin_ = 0.0, sum_ = 0.0, compensation_ = 0.0;
  std::size_t count_ = 0;
};

Tensor rows_of(const Tensor& t, std::size_t start, std::size_t stop) {
  std::vector<std::size_t> idx(stop - start);
  for (std::size_t i = start; i < stop; ++i) idx[i - start] = i;
  return gather_rows(t, idx);
}

enum class Side { real, fake };

struct SideMeans {
  double clean;
  double perturbed;
};

// Clean and (optionally) perturbed means of log D or log(1 - D) over a set.
SideMeans side_means(const gan::GanModel& model, const Tensor& set, Side side, bool perturb,
                     const robust::PerturbationConfig& cfg) {
  ShiftedMean clean, perturbed;
  auto term = [side](double d) { return ad::kernel::log_floored(side == Side::real ? d : 1.0 - d); };
  for (std::size_t start = 0; start < set.rows(); start += kChunk) {
    auto chunk = rows_of(set, start, std::min(set.rows(), start + kChunk));
    const auto out = model.discriminate(chunk);
    for (double d : out.data()) clean.add(term(d));
    if (!perturb) continue;
    auto r = side == Side::real ? robust::worst_real_perturbation(model, chunk, cfg)
                                : robust::worst_fake_perturbation(model, chunk, cfg);
    const auto shifted_out = model.discriminate(axpy(chunk, cfg.eps2, r.r));
    for (double d : shifted_out.data()) perturbed.add(term(d));
  }
  return {clean.value(), perturbed.value()};
}

}  // namespace

namespace {

struct Weights {
  double clean;
  double perturbed;
};

Weights objective_weights(const GapObjective& objective) {
  if (!objective.robust) return {1.0, 0.0};
  const auto w = robust::term_weights(objective.lambda, objective.weighting);
  if (w.perturbed != 0.0 && objective.perturb.eps2 == 0.0) return {w.clean + w.perturbed, 0.0};
  return {w.clean, w.perturbed};
}

double combine(const Weights& w, const SideMeans& real, const SideMeans& fake) {
  double value = w.clean * (real.clean + fake.clean);
  if (w.perturbed != 0.0) value += w.perturbed * (real.perturbed + fake.perturbed);
  return value;
}

}  // namespace

double d_objective_value(const gan::GanModel& model, const GapObjective& objective, const Tensor& real,
                         const Tensor& fake) {
  const auto w = objective_weights(objective);
  const bool perturb = w.perturbed != 0.0;
  return combine(w, side_means(model, real, Side::real, perturb, objective.perturb),
                 side_means(model, fake, Side::fake, perturb, objective.perturb));
}

GapEstimate gap_between(const gan::GanModel& model, const GapObjective& objective, const Tensor& train_set,
                        const Tensor& fresh_set, const Tensor& fake) {
  const auto w = objective_weights(objective);
  const bool perturb = w.perturbed != 0.0;
  const auto fake_means = side_means(model, fake, Side::fake, perturb, objective.perturb);
  GapEstimate g;
  g.n = train_set.rows();
  g.N = fresh_set.rows();
  g.train_value = combine(w, side_means(model, train_set, Side::real, perturb, objective.perturb), fake_means);
  g.population_value = combine(w, side_means(model, fresh_set, Side::real, perturb, objective.perturb), fake_means);
  g.gap = std::abs(g.train_value - g.population_value);
  return g;
}

GapEstimate generalization_gap(const gan::GanModel& model, const GapObjective& objective, const Tensor& train_set,
                               const gan::DataSource& data, std::size_t fresh_n, std::uint64_t seed) {
  if (fresh_n < 50 * train_set.rows()) {
    throw ContractError("fresh set must hold at least 50 times the training samples");
  }
  std::mt19937_64 rng(seed);
  auto fresh = data.sample(fresh_n, rng);
  auto fake = model.generate(gan::sample_latent(fresh_n, model.g_spec.input_dim(), rng));
  auto g = gap_between(model, objective, train_set, fresh, fake);
  g.seed = seed;
  return g;
}

}  // namespace rgan::theory
