#include "rgan/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rgan/errors.hpp"

namespace rgan::eval {

namespace {

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw DimensionError(std::string(what) + " must be a matrix");
}

}  // namespace

ModeReport mode_coverage(const Tensor& samples, const Tensor& centers, double sigma) {
  require_matrix(samples, "samples");
  require_matrix(centers, "mode centres");
  if (samples.cols() != centers.cols()) throw DimensionError("samples and mode centres differ in dimension");
  if (samples.rows() < 100) throw ContractError("mode coverage needs at least 100 samples");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");

  const auto n = samples.rows(), k = centers.rows(), dim = samples.cols();
  ModeReport report;
  report.total = k;
  report.hits.assign(k, 0);
  report.capture_radius = 3.0 * sigma;
  report.min_hits = std::max<std::size_t>(5, n / (10 * k));
  const double r2 = report.capture_radius * report.capture_radius;

  std::size_t close = 0;
  const double* s = samples.data().data();
  const double* c = centers.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double d = squared_distance(s + i * dim, c + j * dim, dim);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best_d <= r2) {
      ++report.hits[best];
      ++close;
    }
  }
  for (auto h : report.hits) report.covered += h >= report.min_hits ? 1 : 0;
  report.high_quality_fraction = static_cast<double>(close) / static_cast<double>(n);
  return report;
}

double median_pairwise_distance(const Tensor& x, const Tensor& y) {
  require_matrix(x, "x");
  require_matrix(y, "y");
  if (x.cols() != y.cols()) throw DimensionError("sample sets differ in dimension");
  const auto n = x.rows() + y.rows(), dim = x.cols();
  if (n < 2) throw ContractError("median distance needs two points");
  auto point = [&](std::size_t i) {
    return i < x.rows() ? x.data().data() + i * dim : y.data().data() + (i - x.rows()) * dim;
  };
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d.push_back(squared_distance(point(i), point(j), dim));
  }
  const auto mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  const double upper = std::sqrt(d[mid]);
  if (d.size() % 2 == 1) return upper;
  const double lower = std::sqrt(*std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
  return 0.5 * (lower + upper);
}

namespace {

// True when each coefficient is exactly 4x the next, as for bandwidth scales
// that double: then exp(-4c d) = exp(-c d)^4 and one exp serves every kernel.
bool quartic_chain(const std::vector<double>& inv_two_h2) {
  for (std::size_t h = 0; h + 1 < inv_two_h2.size(); ++h) {
    if (inv_two_h2[h] != 4.0 * inv_two_h2[h + 1]) return false;
  }
  return true;
}

// Per-bandwidth sums of k(a_i, b_j) over all pairs. `off_diagonal` sums a
// set against itself over i != j, visiting each unordered pair once.
std::vector<double> kernel_sums(const Tensor& a, const Tensor& b, const std::vector<double>& inv_two_h2,
                                bool off_diagonal) {
  const auto dim = a.cols();
  const auto nh = inv_two_h2.size();
  const bool chain = quartic_chain(inv_two_h2);
  std::vector<double> sums(nh, 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  std::vector<double> row(nh);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t j = off_diagonal ? i + 1 : 0; j < b.rows(); ++j) {
      const double d2 = squared_distance(pa + i * dim, pb + j * dim, dim);
      if (chain) {
        double k = std::exp(-d2 * inv_two_h2[nh - 1]);
        row[nh - 1] += k;
        for (std::size_t h = nh - 1; h-- > 0;) {
          k *= k;
          k *= k;
          row[h] += k;
        }
      } else {
        for (std::size_t h = 0; h < nh; ++h) row[h] += std::exp(-d2 * inv_two_h2[h]);
      }
    }
    for (std::size_t h = 0; h < nh; ++h) sums[h] += row[h];
  }
  if (off_diagonal) {
    for (auto& v : sums) v *= 2.0;
  }
  return sums;
}

}  // namespace

double mmd_rbf(const Tensor& x, const Tensor& y, const std::vector<double>& scales, MmdEstimator estimator) {
  require_matrix(x, "x");
  require_matrix(y, "y");
  if (x.rows() < 2 || y.rows() < 2) throw ContractError("MMD needs at least two samples per set");
  if (scales.empty()) throw ContractError("MMD needs at least one bandwidth");
  double median = median_pairwise_distance(x, y);
  if (median == 0.0) median = 1.0;
  std::vector<double> inv_two_h2;
  for (double s : scales) {
    if (!(s > 0.0)) throw DomainError("bandwidth scales must be positive");
    const double h = s * median;
    inv_two_h2.push_back(1.0 / (2.0 * h * h));
  }

  const bool unbiased = estimator == MmdEstimator::unbiased;
  const auto sxx = kernel_sums(x, x, inv_two_h2, unbiased);
  const auto syy = kernel_sums(y, y, inv_two_h2, unbiased);
  const auto sxy = kernel_sums(x, y, inv_two_h2, false);
  const double n = static_cast<double>(x.rows()), m = static_cast<double>(y.rows());
  const double nxx = unbiased ? n * (n - 1.0) : n * n;
  const double nyy = unbiased ? m * (m - 1.0) : m * m;
  double total = 0.0;
  for (std::size_t h = 0; h < inv_two_h2.size(); ++h) {
    total += sxx[h] / nxx + syy[h] / nyy - 2.0 * sxy[h] / (n * m);
  }
  return total;
}

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  sd = 0.0;
  if (v.size() < 2) return;
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
}

}  // namespace

StressReport worst_noise_stress(const gan::GanModel& model, const gan::DataSource& data,
                                const robust::PerturbationConfig& cfg, std::size_t n, std::size_t repeats,
                                std::uint64_t seed) {
  if (repeats == 0) throw ContractError("stress test needs at least one repeat");
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::vector<double> clean(repeats), worst(repeats), gap(repeats);
  for (std::size_t t = 0; t < repeats; ++t) {
    auto real = data.sample(n, rng);
    auto z = gan::sample_latent(n, model.g_spec.input_dim(), rng);
    auto generated = model.generate(z);
    clean[t] = clamp_for_report(mmd_rbf(real, generated));
    if (cfg.eps1 == 0.0) {
      worst[t] = clean[t];
    } else {
      auto r = robust::worst_latent_perturbation(model, z, cfg);
      worst[t] = clamp_for_report(mmd_rbf(real, model.generate(axpy(z, cfg.eps1, r.r))));
    }
    gap[t] = worst[t] - clean[t];
  }
  StressReport report;
  report.repeats = repeats;
  mean_std(clean, report.metric_clean, report.clean_std);
  mean_std(worst, report.metric_worst, report.worst_std);
  mean_std(gap, report.robustness_gap, report.gap_std);
  return report;
}

}  // namespace rgan::eval
