#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aoi/core.hpp"
#include "aoi/sim.hpp"

namespace aoi {

class ConfigError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MdpSettings {
  Age x_max = 40;
  double tolerance = 1e-9;
  // When set, each solved joint policy is written here (suffixed by sweep point).
  std::optional<std::filesystem::path> policy_dump;
};

// A scheduler comparison. Without a sweep the users keep their own p_i and
// the experiment has a single point; with a sweep every point sets all users
// to the same p.
struct ExperimentConfig {
  std::vector<double> p;
  std::vector<SchedulerKind> schedulers;
  std::uint64_t horizon = 100'000;
  std::uint64_t replications = 1;
  std::uint64_t seed_base = 1;
  MdpSettings mdp;
  std::vector<double> sweep_p;
  std::vector<Age> initial_ages;  // empty: X_i(0) = i
  std::filesystem::path output = "results";
  bool write_plot = true;

  std::size_t num_users() const { return p.size(); }
  bool uses_optimal() const;
};

// Parses the JSON document described in the README. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Throws ConfigError on anything that would fail later, including a joint
// MDP too large to solve, before any simulation starts.
void validate(const ExperimentConfig& config);

struct ResultRow {
  std::size_t point = 0;
  std::vector<double> p;
  SchedulerKind scheduler = SchedulerKind::whittle;
  std::uint64_t replication = 0;
  std::uint64_t seed = 0;
  SimReport report;
};

struct SummaryRow {
  std::size_t point = 0;
  std::vector<double> p;
  SchedulerKind scheduler = SchedulerKind::whittle;
  std::uint64_t replications = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::optional<double> ratio_to_optimal;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;        // ordered by (point, scheduler, replication)
  std::vector<SummaryRow> summary;    // ordered by (point, scheduler)
  std::vector<double> optimal_gains;  // joint-MDP gain per point, when solved
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// Mean and standard error of the rows for one (point, scheduler).
SummaryRow summarize(std::span<const ResultRow> rows, std::size_t point, SchedulerKind scheduler);

void write_results_csv(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result);
void write_summary_csv(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result);
// Columns: p, then the mean average age of each scheduler. Sweep runs only.
void write_plot_csv(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result);

// Writes results.csv, summary.csv and (for sweeps) plot.csv under
// config.output, replacing earlier files. Returns the paths written.
std::vector<std::filesystem::path> write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

}  // namespace aoi
