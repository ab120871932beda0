#include "rgan/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "rgan/errors.hpp"
#include "rgan/experiment.hpp"
#include "rgan/plot.hpp"

namespace rgan::cli {

namespace fs = std::filesystem;
using namespace rgan::experiment;

namespace {

// Maps library exceptions onto exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const TheoryCheckError& e) {
    err << "theory check failed: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kCheckFailed;
  }
}

}  // namespace

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto config = load_config(o.config);
    if (o.seed) config.seeds = {*o.seed};
    if (o.arm) config.arms = {arm_from_string(*o.arm)};
    if (o.out) config.output_dir = o.out->string();
    config.validate();

    const auto runs = run_all(config, o.parallel_seeds);
    write_outputs(config.output_dir, runs);
    double cpu = 0.0;
    for (const auto& r : runs) {
      const auto& last = r.records.back();
      out << run_stem(r.arm, r.seed) << ": step " << last.step << " coverage " << format_double(last.mode_coverage)
          << " mmd " << format_double(last.mmd) << " robustness_gap " << format_double(last.robustness_gap)
          << " gen_gap_d " << format_double(last.gen_gap_d) << " cpu_s " << format_double(r.cpu_seconds) << '\n';
      cpu += r.cpu_seconds;
    }
    out << "wrote " << runs.size() << " runs to " << config.output_dir << " (cpu_s " << format_double(cpu) << ")\n";
    return kOk;
  });
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ckpt = read_checkpoint(o.checkpoint);
    auto config = parse_config(ckpt.config_text);
    if (o.samples) config.eval.samples = *o.samples;
    config.validate();
    const auto record =
        evaluate_snapshot(config, ckpt.arm, ckpt.seed, ckpt.step, ckpt.model, training_pool(config, ckpt.seed));

    out << kMetricsHeader << '\n' << csv_row(record) << '\n';
    if (ckpt.recorded) {
      out << "matches recorded metrics: " << (record.same_as(*ckpt.recorded) ? "yes" : "no") << '\n';
    }

    const auto csv = o.csv ? *o.csv : fs::path(o.checkpoint.string() + ".eval.csv");
    const bool fresh = !fs::exists(csv) || fs::file_size(csv) == 0;
    if (!fresh) parse_metrics_csv(read_file(csv));  // refuse to append to a foreign file
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    std::ofstream file(csv, std::ios::binary | std::ios::app);
    if (!file) throw InputError("cannot write " + csv.string());
    if (fresh) file << kMetricsHeader << '\n';
    file << csv_row(record) << '\n';
    return kOk;
  });
}

int cmd_theory_check(const theory::CheckOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto results = theory::run_checks(options);
    theory::print_table(out, results);
    if (theory::all_pass(results)) return kOk;
    for (const auto& r : results) {
      if (!r.pass) err << "FAILED: " << r.name << '\n';
    }
    return kCheckFailed;
  });
}

namespace {

double metric_value(const MetricsRecord& r, const std::string& metric) {
  if (metric == "d_loss") return r.d_loss;
  if (metric == "g_loss") return r.g_loss;
  if (metric == "mode_coverage") return r.mode_coverage;
  if (metric == "high_quality_fraction") return r.high_quality_fraction;
  if (metric == "mmd") return r.mmd;
  if (metric == "mmd_worst_noise") return r.mmd_worst_noise;
  if (metric == "robustness_gap") return r.robustness_gap;
  if (metric == "gen_gap_d") return r.gen_gap_d;
  throw InputError("unknown metric '" + metric + "'");
}

plot::Series points(const std::string& label, const Tensor& t) {
  if (t.cols() != 2) throw InputError("scatter plots need two-dimensional samples");
  plot::Series s{label, {}, {}};
  for (std::size_t i = 0; i < t.rows(); ++i) {
    s.x.push_back(t.at(i, 0));
    s.y.push_back(t.at(i, 1));
  }
  return s;
}

}  // namespace

int cmd_plot(const PlotOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto records = parse_metrics_csv(read_file(o.metrics));
    metric_value(MetricsRecord{}, o.metric);
    const auto dir = o.out ? *o.out : (o.metrics.has_parent_path() ? o.metrics.parent_path() : fs::path("."));
    fs::create_directories(dir);

    // arm -> seed -> series, in order of first appearance.
    std::vector<Arm> arms;
    std::map<Arm, std::map<std::uint64_t, plot::Series>> by_arm;
    for (const auto& r : records) {
      if (std::find(arms.begin(), arms.end(), r.arm) == arms.end()) arms.push_back(r.arm);
      auto& s = by_arm[r.arm][r.seed];
      s.label = "seed " + std::to_string(r.seed);
      s.x.push_back(static_cast<double>(r.step));
      s.y.push_back(metric_value(r, o.metric));
    }
    std::vector<fs::path> written;
    if (arms.empty()) {
      written.push_back(dir / (o.metric + ".svg"));
      write_file(written.back(), plot::line_chart({}, o.metric, "step", o.metric));
    }
    for (auto arm : arms) {
      std::vector<plot::Series> series;
      for (auto& [seed, s] : by_arm[arm]) series.push_back(s);
      written.push_back(dir / (to_string(arm) + '_' + o.metric + ".svg"));
      write_file(written.back(), plot::line_chart(series, to_string(arm) + ": " + o.metric, "step", o.metric));
    }

    if (o.checkpoint) {
      const auto ckpt = read_checkpoint(*o.checkpoint);
      const auto config = parse_config(ckpt.config_text);
      std::mt19937_64 rng(gan::derive_seed(gan::derive_seed(ckpt.seed, gan::stream::eval), ckpt.step ^ 0x706c6f74));
      const auto real = config.data.sample(o.samples, rng);
      const auto z = gan::sample_latent(o.samples, ckpt.model.g_spec.input_dim(), rng);
      const auto clean = ckpt.model.generate(z);
      written.push_back(dir / "samples.svg");
      write_file(written.back(), plot::scatter({points("real", real), points("generated", clean)},
                                               "real vs generated, step " + std::to_string(ckpt.step)));
      const auto& pc = config.robust.perturb;
      const auto r = robust::worst_latent_perturbation(ckpt.model, z, pc);
      const auto worst = ckpt.model.generate(axpy(z, pc.eps1, r.r));
      written.push_back(dir / "worst_latent.svg");
      write_file(written.back(), plot::scatter({points("clean latent", clean), points("worst latent", worst)},
                                               "clean vs worst latent, eps1 = " + format_double(pc.eps1)));
    }
    for (const auto& p : written) out << "wrote " << p.string() << '\n';
    return kOk;
  });
}

}  // namespace rgan::cli
