#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include "rgan/errors.hpp"
#include "rgan/experiment.hpp"

using namespace rgan;
using namespace rgan::experiment;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.arms = {Arm::baseline, Arm::rgan, Arm::ablation_random_noise};
  c.seeds = {1, 2};
  c.robust.base.batch_size = 16;
  c.robust.base.latent_dim = 2;
  c.robust.base.hidden = {8};
  c.robust.base.steps = 40;
  c.robust.base.train_size = 16;
  c.robust.perturb.eps2 = 0.05;
  c.eval.interval = 20;
  c.eval.samples = 100;
  c.eval.stress_samples = 50;
  c.eval.stress_repeats = 2;
  c.eval.gap_fresh = 800;
  return c;
}

MetricsRecord sample_record() {
  MetricsRecord r;
  r.step = 1000;
  r.seed = 3;
  r.arm = Arm::ablation_d_only;
  r.d_loss = -1.3862943611198906;
  r.g_loss = -0.1;
  r.mode_coverage = 7;
  r.high_quality_fraction = 0.9345;
  r.mmd = 1e-17;
  r.mmd_worst_noise = 0.25;
  r.robustness_gap = 0.25 - 1e-17;
  r.gen_gap_d = kNaN;
  return r;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rgan_test_experiment_" + name);
  fs::remove_all(p);
  return p;
}

int error_line(const std::string& text) {
  try {
    parse_metrics_csv(text);
  } catch (const InputError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("metrics CSV round-trip") {
  auto a = sample_record();
  auto b = a;
  b.step = 2000;
  b.gen_gap_d = 0.125;
  const auto text = metrics_csv({a, b});
  CHECK(text.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  auto parsed = parse_metrics_csv(text);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].same_as(a));
  CHECK(parsed[1].same_as(b));
  CHECK(metrics_csv(parsed) == text);
  CHECK(csv_row(a).find("nan") != std::string::npos);
  CHECK(parse_metrics_csv(std::string(kMetricsHeader) + "\n").empty());
}

TEST_CASE("metrics CSV errors name the line") {
  const std::string header(kMetricsHeader);
  const auto row = csv_row(sample_record());
  CHECK(error_line("step,seed\n") == 1);
  CHECK(error_line("") == 1);
  CHECK(error_line(header + "\n" + row + "\n1,2,3\n") == 3);
  CHECK(error_line(header + "\n" + row + "\n" + "x" + row + "\n") == 3);
  auto bad_arm = row;
  bad_arm.replace(bad_arm.find("ablation_d_only"), 15, "gan");
  CHECK(error_line(header + "\n" + bad_arm + "\n") == 2);
}

TEST_CASE("same_as compares bits") {
  auto a = sample_record();
  auto b = a;
  CHECK(a.same_as(b));
  b.mmd = 2e-17;
  CHECK_FALSE(a.same_as(b));
  b = a;
  b.gen_gap_d = 0.0;
  CHECK_FALSE(a.same_as(b));
}

TEST_CASE("runs are deterministic and checkpoints reproduce their metrics") {
  const auto c = small_config();
  auto a = run_one(c, Arm::rgan, 1);
  auto b = run_one(c, Arm::rgan, 1);
  REQUIRE(a.records.size() == 3);
  CHECK(a.records[0].step == 0);
  CHECK(a.records[2].step == 40);
  CHECK(metrics_csv(a.records) == metrics_csv(b.records));
  CHECK(serialize(a.checkpoint) == serialize(b.checkpoint));
  CHECK(a.cpu_seconds > 0.0);
  CHECK(std::isfinite(a.records.back().gen_gap_d));
  CHECK(a.records.back().mode_coverage >= 0.0);

  const auto& ck = a.checkpoint;
  CHECK(ck.step == 40);
  REQUIRE(ck.recorded.has_value());
  CHECK(ck.recorded->same_as(a.records.back()));

  auto restored = parse_checkpoint(serialize(ck));
  CHECK(serialize(restored) == serialize(ck));
  CHECK(restored.model.g == ck.model.g);
  CHECK(restored.d_opt == ck.d_opt);
  auto config = parse_config(restored.config_text);
  CHECK(config == c);
  auto again = evaluate_snapshot(config, restored.arm, restored.seed, restored.step, restored.model,
                                 training_pool(config, restored.seed));
  CHECK(again.same_as(*restored.recorded));

  auto other = run_one(c, Arm::rgan, 2);
  CHECK(metrics_csv(other.records) != metrics_csv(a.records));
}

TEST_CASE("parallel and sequential runs agree") {
  const auto c = small_config();
  auto seq = run_all(c, false);
  auto par = run_all(c, true);
  REQUIRE(seq.size() == 6);
  REQUIRE(par.size() == 6);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].arm == par[i].arm);
    CHECK(seq[i].seed == par[i].seed);
    CHECK(metrics_csv(seq[i].records) == metrics_csv(par[i].records));
    CHECK(serialize(seq[i].checkpoint) == serialize(par[i].checkpoint));
  }
  CHECK(seq[0].arm == Arm::baseline);
  CHECK(seq[1].seed == 2);
  CHECK(summary_csv(summarize(seq)) == summary_csv(summarize(par)));
}

TEST_CASE("corrupted checkpoints are rejected") {
  auto c = small_config();
  c.robust.base.steps = 2;
  c.eval.interval = 0;
  const auto text = serialize(run_one(c, Arm::baseline, 1).checkpoint);
  CHECK_NOTHROW(parse_checkpoint(text));
  CHECK_THROWS_AS(parse_checkpoint(text.substr(0, text.size() / 2)), InputError);
  CHECK_THROWS_AS(parse_checkpoint(""), InputError);
  CHECK_THROWS_AS(parse_checkpoint("rgan-checkpoint 2\n" + text.substr(text.find('\n') + 1)), InputError);
  auto bad = text;
  bad.replace(bad.find("tensor "), 7, "tensr ");
  CHECK_THROWS_AS(parse_checkpoint(bad), InputError);
  bad = text;
  const auto pos = bad.find("tensor 2 ");
  bad.replace(pos, 9, "tensor 2 9");
  CHECK_THROWS_AS(parse_checkpoint(bad), InputError);
  CHECK_THROWS_AS(read_checkpoint("/nonexistent/x.ckpt"), InputError);
}

TEST_CASE("metrics that do not apply are NaN") {
  auto c = small_config();
  c.data.kind = gan::DataSource::Kind::two_moons;
  c.robust.base.train_size = 0;
  c.eval.gap_fresh = 0;
  c.robust.base.steps = 4;
  c.eval.interval = 0;
  auto r = run_one(c, Arm::baseline, 1);
  REQUIRE(r.records.size() == 2);
  CHECK(std::isnan(r.records.back().mode_coverage));
  CHECK(std::isnan(r.records.back().high_quality_fraction));
  CHECK(std::isnan(r.records.back().gen_gap_d));
  CHECK(std::isfinite(r.records.back().mmd));
}

TEST_CASE("gap objective by arm") {
  ExperimentConfig c;
  CHECK_FALSE(gap_objective(c, Arm::baseline).robust);
  CHECK_FALSE(gap_objective(c, Arm::ablation_g_only).robust);
  CHECK(gap_objective(c, Arm::rgan).robust);
  CHECK(gap_objective(c, Arm::ablation_d_only).robust);
  CHECK(gap_objective(c, Arm::ablation_random_noise).robust);
  CHECK(gap_objective(c, Arm::rgan).lambda == c.robust.lambda);
}

TEST_CASE("medians and the summary table") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(std::isnan(median({})));
  CHECK(std::isnan(median({1, kNaN})));

  auto run = [](Arm arm, std::uint64_t seed, double coverage, double gap, double gen) {
    RunResult r;
    r.arm = arm;
    r.seed = seed;
    MetricsRecord m;
    m.arm = arm;
    m.seed = seed;
    m.mode_coverage = coverage;
    m.robustness_gap = gap;
    m.gen_gap_d = gen;
    MetricsRecord early = m;
    early.mode_coverage = 0;
    r.records = {early, m};
    return r;
  };
  std::vector<RunResult> runs{run(Arm::baseline, 1, 6, 0.02, 0.1), run(Arm::baseline, 2, 8, 0.04, 0.3),
                              run(Arm::baseline, 3, 7, 0.03, 0.2), run(Arm::rgan, 1, 8, 0.01, 0.3),
                              run(Arm::rgan, 2, 8, 0.05, 0.4),     run(Arm::rgan, 3, 5, 0.02, 0.5),
                              run(Arm::ablation_g_only, 1, 8, 0.01, kNaN)};
  auto s = summarize(runs);
  REQUIRE(s.size() == 3);
  CHECK(s[0].arm == Arm::baseline);
  CHECK(s[0].seeds == 3);
  CHECK(s[0].median_mode_coverage == 7);
  CHECK(s[1].median_robustness_gap == 0.02);
  CHECK(s[1].median_gen_gap_d == 0.4);
  auto csv = summary_csv(s);
  CHECK(csv.find("baseline,3,7,") != std::string::npos);
  CHECK(csv.find("rgan,3,8,0,0,0,0.02,0.4,yes,no\n") != std::string::npos);
  CHECK(csv.find("ablation_g_only,1,8,0,0,0,0.01,nan,yes,na\n") != std::string::npos);
}

TEST_CASE("outputs on disk") {
  auto c = small_config();
  c.arms = {Arm::baseline, Arm::rgan};
  c.seeds = {4};
  c.robust.base.steps = 6;
  c.eval.interval = 3;
  const auto dir = scratch("outputs");
  auto runs = run_all(c, false);
  write_outputs(dir, runs);
  CHECK(fs::exists(dir / "baseline_seed4.csv"));
  CHECK(fs::exists(dir / "rgan_seed4.ckpt"));
  CHECK(read_file(dir / "summary.csv") == summary_csv(summarize(runs)));
  auto ck = read_checkpoint(dir / "rgan_seed4.ckpt");
  CHECK(serialize(ck) == serialize(runs[1].checkpoint));
  auto rows = parse_metrics_csv(read_file(dir / "baseline_seed4.csv"));
  CHECK(rows.size() == 3);
  fs::remove_all(dir);
}
