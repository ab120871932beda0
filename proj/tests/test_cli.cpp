#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "rgan/cli.hpp"
#include "rgan/experiment.hpp"

using namespace rgan;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

// Runs the rgan executable with stdout and stderr captured.
Result rgan_cli(const std::string& args) {
  const auto log = fs::temp_directory_path() / "rgan_test_cli.log";
  const std::string cmd = std::string(RGAN_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, experiment::read_file(log)};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rgan_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* const kSmall =
    "arms = baseline, rgan, ablation_g_only, ablation_d_only, ablation_random_noise\n"
    "seeds = 7\n"
    "data.train_size = 32\n"
    "gan.batch_size = 16\n"
    "gan.latent_dim = 2\n"
    "gan.hidden = 8\n"
    "gan.steps = 30\n"
    "robust.eps2 = 0.05\n"
    "eval.interval = 15\n"
    "eval.samples = 100\n"
    "eval.stress_samples = 50\n"
    "eval.stress_repeats = 2\n"
    "eval.gap_fresh = 1600\n";

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(rgan_cli("--help").code == 0);
  CHECK(rgan_cli("").code == 2);
  CHECK(rgan_cli("train").code == 2);
  CHECK(rgan_cli("frobnicate").code == 2);
}

TEST_CASE("theory-check") {
  auto r = rgan_cli("theory-check --trials 20");
  CHECK(r.code == 0);
  CHECK(r.out.find("d_star_matches_golden_section") != std::string::npos);
  CHECK(rgan_cli("theory-check --trials 0").code == 2);

  theory::CheckOptions o;
  o.trials = 10;
  o.d_star = [](const theory::DiscreteDensity& a, const theory::DiscreteDensity& b) {
    auto d = theory::optimal_discriminator(a, b);
    for (auto& v : d) v = 0.999 * v + 0.0005;
    return d;
  };
  std::ostringstream out, err;
  CHECK(cli::cmd_theory_check(o, out, err) == cli::kCheckFailed);
  CHECK(err.str().find("FAILED: d_star_matches_golden_section") != std::string::npos);
}

TEST_CASE("train, eval and plot") {
  const auto dir = scratch("run");
  experiment::write_file(dir / "small.conf", kSmall);
  auto r = rgan_cli("train --config " + (dir / "small.conf").string() + " --out " + (dir / "out").string());
  REQUIRE(r.code == 0);
  for (auto arm : {"baseline", "rgan", "ablation_g_only", "ablation_d_only", "ablation_random_noise"}) {
    CHECK(fs::exists(dir / "out" / (std::string(arm) + "_seed7.csv")));
    CHECK(fs::exists(dir / "out" / (std::string(arm) + "_seed7.ckpt")));
  }
  const auto summary = experiment::read_file(dir / "out" / "summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 6);

  const auto ckpt = (dir / "out" / "rgan_seed7.ckpt").string();
  r = rgan_cli("eval " + ckpt);
  CHECK(r.code == 0);
  CHECK(r.out.find("matches recorded metrics: yes") != std::string::npos);
  CHECK(rgan_cli("eval " + ckpt).code == 0);
  auto rows = experiment::parse_metrics_csv(experiment::read_file(ckpt + ".eval.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].same_as(rows[1]));

  r = rgan_cli("eval " + ckpt + " --samples 150 --csv " + (dir / "other.csv").string());
  CHECK(r.code == 0);
  CHECK(r.out.find("matches recorded metrics: no") != std::string::npos);
  experiment::write_file(dir / "foreign.csv", "a,b\n1,2\n");
  CHECK(rgan_cli("eval " + ckpt + " --csv " + (dir / "foreign.csv").string()).code == 2);

  r = rgan_cli("plot " + (dir / "out" / "rgan_seed7.csv").string() + " --checkpoint " + ckpt + " --out " +
               (dir / "plots").string());
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "plots" / "rgan_mmd.svg"));
  CHECK(fs::exists(dir / "plots" / "samples.svg"));
  CHECK(fs::exists(dir / "plots" / "worst_latent.svg"));
  CHECK(rgan_cli("plot " + (dir / "out" / "rgan_seed7.csv").string() + " --metric bogus").code == 2);

  // Repeating a run reproduces its CSV byte for byte.
  r = rgan_cli("train --config " + (dir / "small.conf").string() + " --arm rgan --out " + (dir / "again").string());
  CHECK(r.code == 0);
  CHECK(experiment::read_file(dir / "again" / "rgan_seed7.csv") ==
        experiment::read_file(dir / "out" / "rgan_seed7.csv"));
  fs::remove_all(dir);
}

TEST_CASE("input errors exit with 2") {
  const auto dir = scratch("input");
  CHECK(rgan_cli("train --config " + (dir / "missing.conf").string()).code == 2);
  experiment::write_file(dir / "bad.conf", "seeds = 1\ngan.stepz = 4\n");
  auto r = rgan_cli("train --config " + (dir / "bad.conf").string());
  CHECK(r.code == 2);
  CHECK(r.out.find("line 2") != std::string::npos);
  experiment::write_file(dir / "ok.conf", kSmall);
  CHECK(rgan_cli("train --config " + (dir / "ok.conf").string() + " --arm nope").code == 2);
  CHECK(rgan_cli("eval " + (dir / "missing.ckpt").string()).code == 2);
  experiment::write_file(dir / "junk.ckpt", "rgan-checkpoint 1\narm rgan\n");
  CHECK(rgan_cli("eval " + (dir / "junk.ckpt").string()).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("divergence exits with 3") {
  const auto dir = scratch("diverge");
  experiment::write_file(dir / "d.conf", std::string(kSmall) + "gan.g.lr = 1e300\ngan.d.lr = 1e300\n");
  auto r = rgan_cli("train --config " + (dir / "d.conf").string() + " --out " + (dir / "out").string());
  CHECK(r.code == 3);
  CHECK(r.out.find("diverged") != std::string::npos);
  fs::remove_all(dir);
}
