#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "aoi/experiment.hpp"
#include "aoi/mdp.hpp"

using namespace aoi;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("aoi_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(R"({
    "users": [{"p": 0.5}, {"p": 0.25}],
    "schedulers": ["whittle", "optimal", "max_age"],
    "horizon": 5000,
    "replications": 3,
    "seed_base": 10,
    "mdp": {"x_max": 30, "tolerance": 1e-8},
    "output": "out"
  })");
  CHECK(c.p == std::vector<double>{0.5, 0.25});
  CHECK(c.schedulers ==
        std::vector<SchedulerKind>{SchedulerKind::whittle, SchedulerKind::optimal_lookup, SchedulerKind::max_age});
  CHECK(c.horizon == 5000);
  CHECK(c.replications == 3);
  CHECK(c.seed_base == 10);
  CHECK(c.mdp.x_max == 30);
  CHECK(c.mdp.tolerance == 1e-8);
  CHECK(c.output == fs::path("out"));
  CHECK(c.uses_optimal());
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"users": [{"p": 0.5}], "schedulers": ["whittle"], "horizn": 5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"users": [{"p": 0.5}], "schedulers": ["fifo"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schedulers": ["whittle"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"users": [{"q": 0.5}], "schedulers": ["whittle"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"users": [{"p": "x"}], "schedulers": ["whittle"]})"), ConfigError);

  ExperimentConfig c = parse_config(R"({"users": [{"p": 0.5}], "schedulers": ["whittle"]})");
  c.replications = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.replications = 1;
  c.p = {0.0};
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.p = {0.5, 0.5};
  c.initial_ages = {2, 2};
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("joint MDP too large is a config error before any run") {
  ExperimentConfig c = parse_config(
      R"({"users": [0.5, 0.5, 0.5, 0.5], "schedulers": ["whittle", "optimal"], "horizon": 10})");
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
  c.p = {0.5, 0.5};
  c.mdp.x_max = 100;
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("a single certain user has mean age 1") {
  const ExperimentConfig c = parse_config(R"({"users": [{"p": 1.0}], "schedulers": ["whittle"], "horizon": 1000})");
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.summary.size() == 1);
  CHECK(r.summary[0].mean == 1.0);
  CHECK(r.summary[0].std_error == 0.0);
}

TEST_CASE("rows are ordered and the summary is recomputable from them") {
  const ExperimentConfig c = parse_config(R"({
    "users": [0.3, 0.6], "schedulers": ["random", "whittle"], "horizon": 3000, "replications": 4, "seed_base": 7
  })");
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.rows.size() == 8);
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    CHECK(r.rows[k].scheduler == c.schedulers[k / 4]);
    CHECK(r.rows[k].replication == k % 4);
    CHECK(r.rows[k].seed == 7 + k % 4);
  }
  for (const SummaryRow& s : r.summary) {
    double sum = 0.0;
    double sq = 0.0;
    for (const ResultRow& row : r.rows) {
      if (row.scheduler == s.scheduler) sum += row.report.time_avg_total_age;
    }
    const double mean = sum / 4.0;
    for (const ResultRow& row : r.rows) {
      if (row.scheduler == s.scheduler) sq += (row.report.time_avg_total_age - mean) * (row.report.time_avg_total_age - mean);
    }
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-14));
    CHECK(s.std_error == doctest::Approx(std::sqrt(sq / 3.0 / 4.0)).epsilon(1e-12));
    CHECK_FALSE(s.ratio_to_optimal.has_value());
  }
  // Common random numbers: the same seed yields the same arrivals for every
  // scheduler, so replication r of each scheduler shares seed_base + r.
  CHECK(r.rows[0].seed == r.rows[4].seed);
}

TEST_CASE("scheduler ordering in summary means") {
  const ExperimentConfig c = parse_config(R"({
    "users": [0.2, 0.5, 0.8],
    "schedulers": ["whittle", "max_age", "round_robin", "random"],
    "horizon": 50000, "replications": 10
  })");
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.summary.size() == 4);
  const double whittle = r.summary[0].mean;
  const double max_age = r.summary[1].mean;
  const double round_robin = r.summary[2].mean;
  const double random = r.summary[3].mean;
  CHECK(whittle <= max_age);
  CHECK(max_age <= round_robin);
  CHECK(max_age <= random);
}

TEST_CASE("whittle is close to optimal and ratios are reported") {
  const ExperimentConfig c = parse_config(R"({
    "users": [0.5, 0.5], "schedulers": ["whittle", "optimal"], "horizon": 100000, "replications": 20,
    "mdp": {"x_max": 40}
  })");
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.summary.size() == 2);
  REQUIRE(r.optimal_gains.size() == 1);
  REQUIRE(r.summary[0].ratio_to_optimal.has_value());
  CHECK(*r.summary[0].ratio_to_optimal <= 1.02);
  CHECK(*r.summary[1].ratio_to_optimal == 1.0);
}

TEST_CASE("outputs are byte-identical across re-runs") {
  const fs::path dir = scratch_dir("determinism");
  ExperimentConfig c = parse_config(R"({
    "users": [0.4, 0.4], "schedulers": ["whittle", "random", "optimal"], "horizon": 4000, "replications": 3,
    "sweep": {"p": [0.3, 0.7]}, "mdp": {"x_max": 25}
  })");
  c.output = dir;
  write_outputs(c, run_experiment(c));
  const std::string results = slurp(dir / "results.csv");
  const std::string summary = slurp(dir / "summary.csv");
  const std::string plot = slurp(dir / "plot.csv");
  write_outputs(c, run_experiment(c));
  CHECK(slurp(dir / "results.csv") == results);
  CHECK(slurp(dir / "summary.csv") == summary);
  CHECK(slurp(dir / "plot.csv") == plot);
  fs::remove_all(dir);
}

TEST_CASE("csv layout") {
  const fs::path dir = scratch_dir("layout");
  ExperimentConfig c = parse_config(R"({
    "users": [0.5, 0.5], "schedulers": ["whittle", "max_age"], "horizon": 1000, "replications": 2,
    "sweep": {"p": [0.2, 0.8]}
  })");
  c.output = dir;
  const auto written = write_outputs(c, run_experiment(c));
  CHECK(written.size() == 3);

  std::istringstream results(slurp(dir / "results.csv"));
  std::string line;
  std::getline(results, line);
  CHECK(line ==
        "point,p_1,p_2,scheduler,replication,seed,time_avg_total_age,avg_age_1,avg_age_2,updates_1,updates_2,"
        "wasted_slots");
  int rows = 0;
  while (std::getline(results, line)) ++rows;
  CHECK(rows == 8);

  std::istringstream plot(slurp(dir / "plot.csv"));
  std::getline(plot, line);
  CHECK(line == "p,whittle,max_age");
  std::getline(plot, line);
  CHECK(line.rfind("0.2,", 0) == 0);
  std::getline(plot, line);
  CHECK(line.rfind("0.8,", 0) == 0);

  std::istringstream summary(slurp(dir / "summary.csv"));
  std::getline(summary, line);
  CHECK(line == "point,p_1,p_2,scheduler,replications,mean_avg_total_age,std_error,ratio_to_optimal");
  fs::remove_all(dir);
}

TEST_CASE("solved joint policy can be dumped and reloaded") {
  const fs::path dir = scratch_dir("policy");
  ExperimentConfig c = parse_config(R"({
    "users": [0.6, 0.6], "schedulers": ["optimal"], "horizon": 500, "mdp": {"x_max": 20}
  })");
  c.output = dir;
  c.mdp.policy_dump = dir / "policy.txt";
  const ExperimentResult r = run_experiment(c);
  std::ifstream in(dir / "policy.txt");
  const JointPolicy loaded = read_joint_policy(in);
  CHECK(loaded.gain == r.optimal_gains.at(0));
  CHECK(loaded.actions == solve_joint({0.6, 0.6}, 20).actions);
  fs::remove_all(dir);
}

TEST_CASE("sweep summaries only use rows from their own point") {
  const ExperimentConfig c = parse_config(R"({
    "users": [0.5, 0.5], "schedulers": ["whittle", "max_age"], "horizon": 2000, "replications": 3,
    "sweep": {"p": [0.2, 0.8]}
  })");
  const ExperimentResult r = run_experiment(c);
  REQUIRE(r.summary.size() == 4);
  for (const SummaryRow& s : r.summary) {
    double sum = 0.0;
    int n = 0;
    for (const ResultRow& row : r.rows) {
      if (row.point == s.point && row.scheduler == s.scheduler) {
        sum += row.report.time_avg_total_age;
        ++n;
      }
    }
    CHECK(n == 3);
    CHECK(s.replications == 3);
    CHECK(s.mean == doctest::Approx(sum / n).epsilon(1e-14));
  }
}
