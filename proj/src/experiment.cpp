#include "rgan/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ctime>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include "rgan/errors.hpp"

namespace rgan::experiment {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto at = s.find(sep, start);
    out.push_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) return out;
    start = at + 1;
  }
}

// Splits on runs of spaces.
std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    const auto start = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

double thread_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

}  // namespace

bool MetricsRecord::same_as(const MetricsRecord& o) const {
  auto eq = [](double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); };
  return step == o.step && seed == o.seed && arm == o.arm && eq(d_loss, o.d_loss) && eq(g_loss, o.g_loss) &&
         eq(mode_coverage, o.mode_coverage) && eq(high_quality_fraction, o.high_quality_fraction) &&
         eq(mmd, o.mmd) && eq(mmd_worst_noise, o.mmd_worst_noise) && eq(robustness_gap, o.robustness_gap) &&
         eq(gen_gap_d, o.gen_gap_d);
}

std::string csv_row(const MetricsRecord& r) {
  std::string out = std::to_string(r.step) + ',' + std::to_string(r.seed) + ',' + to_string(r.arm);
  for (double v : {r.d_loss, r.g_loss, r.mode_coverage, r.high_quality_fraction, r.mmd, r.mmd_worst_noise,
                   r.robustness_gap, r.gen_gap_d}) {
    out += ',';
    out += format_double(v);
  }
  return out;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& r : records) out += csv_row(r) + '\n';
  return out;
}

std::vector<MetricsRecord> parse_metrics_csv(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines.front() != kMetricsHeader) throw InputError("missing or unexpected CSV header", 1);
  std::vector<MetricsRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i + 1);
    const auto cells = split(lines[i], ',');
    if (cells.size() != 11) throw InputError("expected 11 columns, got " + std::to_string(cells.size()), line_no);
    try {
      MetricsRecord r;
      r.step = parse_uint(cells[0]);
      r.seed = parse_uint(cells[1]);
      r.arm = arm_from_string(std::string(cells[2]));
      double* fields[] = {&r.d_loss, &r.g_loss, &r.mode_coverage, &r.high_quality_fraction, &r.mmd,
                          &r.mmd_worst_noise, &r.robustness_gap, &r.gen_gap_d};
      for (std::size_t k = 0; k < 8; ++k) *fields[k] = parse_double(cells[3 + k]);
      out.push_back(r);
    } catch (const InputError& e) {
      throw InputError(e.what(), line_no);
    }
  }
  return out;
}

theory::GapObjective gap_objective(const ExperimentConfig& config, Arm arm) {
  theory::GapObjective g;
  const auto ablation = ablation_of(arm);
  g.robust = ablation == robust::Ablation::both || ablation == robust::Ablation::d_only ||
             ablation == robust::Ablation::random_noise;
  g.lambda = config.robust.lambda;
  g.weighting = config.robust.weighting;
  g.perturb = config.robust.perturb;
  return g;
}

std::optional<Tensor> training_pool(const ExperimentConfig& config, std::uint64_t seed) {
  const auto n = config.robust.base.train_size;
  if (n == 0) return std::nullopt;
  std::mt19937_64 rng(gan::derive_seed(seed, gan::stream::train_pool));
  return config.data.sample(n, rng);
}

MetricsRecord evaluate_snapshot(const ExperimentConfig& config, Arm arm, std::uint64_t seed, std::uint64_t step,
                                const gan::GanModel& model, const std::optional<Tensor>& train_pool) {
  const auto base = gan::derive_seed(gan::derive_seed(seed, gan::stream::eval), step);
  const auto& data = config.data;
  const auto& gcfg = config.robust.base;
  const auto n = config.eval.samples;

  MetricsRecord r;
  r.step = step;
  r.seed = seed;
  r.arm = arm;

  std::mt19937_64 loss_rng(gan::derive_seed(base, 1));
  auto x = data.sample(n, loss_rng);
  auto z = gan::sample_latent(n, gcfg.latent_dim, loss_rng);
  r.d_loss = gan::d_loss_baseline(model, x, z);
  r.g_loss = gan::g_loss_baseline(model, z, gcfg.loss);

  std::mt19937_64 coverage_rng(gan::derive_seed(base, 2));
  auto generated = model.generate(gan::sample_latent(n, gcfg.latent_dim, coverage_rng));
  if (auto centers = data.mode_centers()) {
    const auto report = eval::mode_coverage(generated, *centers, data.sigma);
    r.mode_coverage = static_cast<double>(report.covered);
    r.high_quality_fraction = report.high_quality_fraction;
  } else {
    r.mode_coverage = r.high_quality_fraction = kNaN;
  }

  const auto stress = eval::worst_noise_stress(model, data, config.robust.perturb, config.eval.stress_samples,
                                               config.eval.stress_repeats, gan::derive_seed(base, 3));
  r.mmd = stress.metric_clean;
  r.mmd_worst_noise = stress.metric_worst;
  r.robustness_gap = stress.robustness_gap;

  r.gen_gap_d = kNaN;
  if (train_pool && config.eval.gap_fresh > 0) {
    r.gen_gap_d = theory::generalization_gap(model, gap_objective(config, arm), *train_pool, data,
                                             config.eval.gap_fresh, gan::derive_seed(base, 4))
                      .gap;
  }
  return r;
}

// Checkpoint text format, one item per line:
//
//   rgan-checkpoint 1
//   arm <name>
//   seed <n>
//   step <n>
//   config <line count>
//   <config lines>
//   spec g|d <comma sizes> <hidden act> <output act>
//   params g|d <tensor count>
//   tensor <rank> <dims...> <values...>       (W0, b0, W1, b1, ...)
//   adam g|d <t> <lr> <beta1> <beta2> <eps>   followed by m then v as params blocks
//   metrics <csv row> | metrics none
//   end
namespace {

constexpr std::string_view kMagic = "rgan-checkpoint 1";

void put_tensor(std::string& out, const Tensor& t) {
  out += "tensor " + std::to_string(t.rank());
  for (auto d : t.shape()) out += ' ' + std::to_string(d);
  for (double v : t.data()) {
    out += ' ';
    out += format_double(v);
  }
  out += '\n';
}

void put_params(std::string& out, const std::string& who, const models::ParamSet& p) {
  out += "params " + who + ' ' + std::to_string(p.num_tensors()) + '\n';
  for (std::size_t i = 0; i < p.num_tensors(); ++i) put_tensor(out, p.tensor(i));
}

void put_spec(std::string& out, const std::string& who, const models::MlpSpec& s) {
  out += "spec " + who + ' ';
  for (std::size_t i = 0; i < s.layer_sizes.size(); ++i) out += (i ? "," : "") + std::to_string(s.layer_sizes[i]);
  out += ' ' + models::to_string(s.hidden) + ' ' + models::to_string(s.output) + '\n';
}

void put_adam(std::string& out, const std::string& who, const models::AdamState& a) {
  out += "adam " + who + ' ' + std::to_string(a.t) + ' ' + format_double(a.config.lr) + ' ' +
         format_double(a.config.beta1) + ' ' + format_double(a.config.beta2) + ' ' + format_double(a.config.eps) +
         '\n';
  put_params(out, who, a.m);
  put_params(out, who, a.v);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : lines_(split(text, '\n')) {}

  std::string_view next() {
    if (at_ >= lines_.size()) throw InputError("checkpoint is truncated", static_cast<int>(at_));
    return lines_[at_++];
  }
  int line() const { return static_cast<int>(at_); }
  [[noreturn]] void fail(const std::string& what) const { throw InputError("checkpoint: " + what, line()); }

  // Next line split into tokens; the first must equal `key`.
  std::vector<std::string_view> expect(std::string_view key, std::size_t min_tokens = 2) {
    auto t = tokens(next());
    if (t.empty() || t[0] != key) fail("expected '" + std::string(key) + "'");
    if (t.size() < min_tokens) fail("too few fields after '" + std::string(key) + "'");
    return t;
  }

  Tensor tensor() {
    auto t = expect("tensor", 2);
    const auto rank = parse_uint(t[1]);
    if (rank == 0 || rank > 2 || t.size() < 2 + rank) fail("bad tensor rank");
    Shape shape;
    for (std::size_t i = 0; i < rank; ++i) shape.push_back(parse_uint(t[2 + i]));
    const auto n = shape_size(shape);
    if (t.size() != 2 + rank + n) fail("tensor has the wrong number of values");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = parse_double(t[2 + rank + i]);
    try {
      return Tensor(shape, std::move(v));
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

  models::ParamSet params(std::string_view who) {
    auto t = expect("params", 3);
    if (t[1] != who) fail("parameters for the wrong network");
    const auto count = parse_uint(t[2]);
    if (count % 2 != 0) fail("parameter count must be even");
    models::ParamSet p;
    for (std::size_t i = 0; i < count; ++i) {
      auto tensor_value = tensor();
      (i % 2 == 0 ? p.weights : p.biases).push_back(std::move(tensor_value));
    }
    return p;
  }

  models::MlpSpec spec(std::string_view who) {
    auto t = expect("spec", 5);
    if (t[1] != who) fail("spec for the wrong network");
    models::MlpSpec s;
    for (auto item : split(t[2], ',')) s.layer_sizes.push_back(parse_uint(item));
    s.hidden = models::activation_from_string(std::string(t[3]));
    s.output = models::activation_from_string(std::string(t[4]));
    return s;
  }

  models::AdamState adam(std::string_view who) {
    auto t = expect("adam", 7);
    if (t[1] != who) fail("optimizer state for the wrong network");
    models::AdamState a;
    a.t = parse_uint(t[2]);
    a.config = {parse_double(t[3]), parse_double(t[4]), parse_double(t[5]), parse_double(t[6])};
    a.m = params(who);
    a.v = params(who);
    return a;
  }

 private:
  std::vector<std::string_view> lines_;
  std::size_t at_ = 0;
};

}  // namespace

std::string serialize(const Checkpoint& c) {
  std::string out(kMagic);
  out += '\n';
  out += "arm " + to_string(c.arm) + '\n';
  out += "seed " + std::to_string(c.seed) + '\n';
  out += "step " + std::to_string(c.step) + '\n';
  auto config_lines = split(c.config_text, '\n');
  if (!config_lines.empty() && config_lines.back().empty()) config_lines.pop_back();
  out += "config " + std::to_string(config_lines.size()) + '\n';
  for (auto l : config_lines) {
    out += l;
    out += '\n';
  }
  put_spec(out, "g", c.model.g_spec);
  put_params(out, "g", c.model.g);
  put_spec(out, "d", c.model.d_spec);
  put_params(out, "d", c.model.d);
  put_adam(out, "g", c.g_opt);
  put_adam(out, "d", c.d_opt);
  out += "metrics " + (c.recorded ? csv_row(*c.recorded) : std::string("none")) + '\n';
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  Reader in(text);
  Checkpoint c;
  try {
    if (in.next() != kMagic) in.fail("not a checkpoint (bad first line)");
    c.arm = arm_from_string(std::string(in.expect("arm")[1]));
    c.seed = parse_uint(in.expect("seed")[1]);
    c.step = parse_uint(in.expect("step")[1]);
    const auto n = parse_uint(in.expect("config")[1]);
    for (std::uint64_t i = 0; i < n; ++i) {
      c.config_text += in.next();
      c.config_text += '\n';
    }
    c.model.g_spec = in.spec("g");
    c.model.g = in.params("g");
    c.model.d_spec = in.spec("d");
    c.model.d = in.params("d");
    c.g_opt = in.adam("g");
    c.d_opt = in.adam("d");
    auto line = in.next();
    if (line.substr(0, 8) != "metrics ") in.fail("expected 'metrics'");
    if (line.substr(8) != "none") c.recorded = parse_metrics_csv(std::string(kMetricsHeader) + '\n' + std::string(line.substr(8))).front();
    if (in.next() != "end") in.fail("expected 'end'");
  } catch (const InputError& e) {
    if (e.line() > 0) throw;
    throw InputError(std::string("checkpoint: ") + e.what(), in.line());
  }
  try {
    c.model.g_spec.validate();
    c.model.d_spec.validate_discriminator();
  } catch (const ContractError& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  if (!c.model.g.matches(c.model.g_spec) || !c.model.d.matches(c.model.d_spec) ||
      !c.g_opt.m.matches(c.model.g_spec) || !c.g_opt.v.matches(c.model.g_spec) ||
      !c.d_opt.m.matches(c.model.d_spec) || !c.d_opt.v.matches(c.model.d_spec)) {
    throw InputError("checkpoint: parameter shapes do not match the network specs");
  }
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InputError("failed writing " + path.string());
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) { write_file(path, serialize(ckpt)); }

Checkpoint read_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

RunResult run_one(const ExperimentConfig& config, Arm arm, std::uint64_t seed) {
  const double start = thread_cpu_seconds();
  const auto rc = config.arm_config(arm);
  auto state = gan::init_state(rc.base, config.data, seed);
  RunResult res;
  res.arm = arm;
  res.seed = seed;
  auto observe = [&](const gan::TrainState& s) {
    res.records.push_back(evaluate_snapshot(config, arm, seed, s.step, s.model, s.train_pool));
  };
  if (arm == Arm::baseline) {
    gan::train_baseline(state, rc.base, config.data, config.eval.interval, observe);
  } else {
    robust::train_rgan(state, rc, config.data, config.eval.interval, observe);
  }
  auto& c = res.checkpoint;
  c.config_text = serialize(config);
  c.arm = arm;
  c.seed = seed;
  c.step = state.step;
  c.model = std::move(state.model);
  c.g_opt = std::move(state.g_opt);
  c.d_opt = std::move(state.d_opt);
  c.recorded = res.records.back();
  res.cpu_seconds = thread_cpu_seconds() - start;
  return res;
}

std::vector<RunResult> run_all(const ExperimentConfig& config, bool parallel_seeds) {
  std::vector<RunResult> out;
  for (auto arm : config.arms) {
    if (!parallel_seeds) {
      for (auto seed : config.seeds) out.push_back(run_one(config, arm, seed));
      continue;
    }
    std::vector<std::future<RunResult>> jobs;
    for (auto seed : config.seeds) {
      jobs.push_back(std::async(std::launch::async, [&config, arm, seed] { return run_one(config, arm, seed); }));
    }
    for (auto& j : jobs) out.push_back(j.get());
  }
  return out;
}

std::string run_stem(Arm arm, std::uint64_t seed) { return to_string(arm) + "_seed" + std::to_string(seed); }

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  for (double v : values) {
    if (std::isnan(v)) return kNaN;
  }
  std::sort(values.begin(), values.end());
  const auto mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<ArmSummary> summarize(const std::vector<RunResult>& runs) {
  std::vector<ArmSummary> out;
  std::vector<Arm> order;
  for (const auto& r : runs) {
    if (std::find(order.begin(), order.end(), r.arm) == order.end()) order.push_back(r.arm);
  }
  for (auto arm : order) {
    std::vector<double> cov, hq, mmd, worst, gap, gen;
    for (const auto& r : runs) {
      if (r.arm != arm || r.records.empty()) continue;
      const auto& last = r.records.back();
      cov.push_back(last.mode_coverage);
      hq.push_back(last.high_quality_fraction);
      mmd.push_back(last.mmd);
      worst.push_back(last.mmd_worst_noise);
      gap.push_back(last.robustness_gap);
      gen.push_back(last.gen_gap_d);
    }
    out.push_back({arm, cov.size(), median(cov), median(hq), median(mmd), median(worst), median(gap), median(gen)});
  }
  return out;
}

std::string summary_csv(const std::vector<ArmSummary>& summary) {
  const ArmSummary* baseline = nullptr;
  for (const auto& s : summary) {
    if (s.arm == Arm::baseline) baseline = &s;
  }
  // "yes"/"no" when both medians exist, "na" otherwise.
  auto le = [](double a, double b) -> std::string {
    if (std::isnan(a) || std::isnan(b)) return "na";
    return a <= b ? "yes" : "no";
  };
  std::string out =
      "arm,seeds,median_mode_coverage,median_high_quality_fraction,median_mmd,median_mmd_worst_noise,"
      "median_robustness_gap,median_gen_gap_d,robustness_gap_le_baseline,gen_gap_d_le_baseline\n";
  for (const auto& s : summary) {
    out += to_string(s.arm) + ',' + std::to_string(s.seeds);
    for (double v : {s.median_mode_coverage, s.median_high_quality_fraction, s.median_mmd, s.median_mmd_worst_noise,
                     s.median_robustness_gap, s.median_gen_gap_d}) {
      out += ',' + format_double(v);
    }
    out += ',' + (baseline ? le(s.median_robustness_gap, baseline->median_robustness_gap) : std::string("na"));
    out += ',' + (baseline ? le(s.median_gen_gap_d, baseline->median_gen_gap_d) : std::string("na"));
    out += '\n';
  }
  return out;
}

void write_outputs(const std::filesystem::path& dir, const std::vector<RunResult>& runs) {
  std::filesystem::create_directories(dir);
  for (const auto& r : runs) {
    write_file(dir / (run_stem(r.arm, r.seed) + ".csv"), metrics_csv(r.records));
    write_checkpoint(dir / (run_stem(r.arm, r.seed) + ".ckpt"), r.checkpoint);
  }
  write_file(dir / "summary.csv", summary_csv(summarize(runs)));
}

}  // namespace rgan::experiment
