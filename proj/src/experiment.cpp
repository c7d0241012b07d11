#include "aoi/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "aoi/kernels.hpp"
#include "aoi/mdp.hpp"

namespace aoi {

using nlohmann::json;

bool ExperimentConfig::uses_optimal() const {
  return std::find(schedulers.begin(), schedulers.end(), SchedulerKind::optimal_lookup) != schedulers.end();
}

namespace {

void reject_unknown_keys(const json& object, std::initializer_list<std::string_view> known, std::string_view where) {
  for (const auto& [key, _] : object.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

template <class T>
T get_or(const json& object, const char* key, T fallback) {
  const auto it = object.find(key);
  return it == object.end() ? fallback : it->get<T>();
}

std::vector<double> point_probabilities(const ExperimentConfig& config, std::size_t point) {
  if (config.sweep_p.empty()) return config.p;
  return std::vector<double>(config.num_users(), config.sweep_p.at(point));
}

std::size_t num_points(const ExperimentConfig& config) {
  return config.sweep_p.empty() ? 1 : config.sweep_p.size();
}

std::string num(double v) { return fmt::format("{:.12g}", v); }

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown_keys(doc,
                      {"users", "schedulers", "horizon", "replications", "seed_base", "mdp", "sweep", "initial_ages",
                       "output", "plot"},
                      "config");

  ExperimentConfig config;
  try {
    if (!doc.contains("users") || !doc["users"].is_array()) throw ConfigError("config needs a 'users' array");
    for (const auto& user : doc["users"]) {
      if (user.is_number()) {
        config.p.push_back(user.get<double>());
      } else if (user.is_object()) {
        reject_unknown_keys(user, {"p"}, "users[]");
        if (!user.contains("p")) throw ConfigError("each user needs a 'p'");
        config.p.push_back(user["p"].get<double>());
      } else {
        throw ConfigError("users[] entries must be objects like {\"p\": 0.5}");
      }
    }
    if (!doc.contains("schedulers")) throw ConfigError("config needs a 'schedulers' list");
    for (const auto& name : doc["schedulers"]) {
      try {
        config.schedulers.push_back(parse_scheduler_kind(name.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    config.horizon = get_or<std::uint64_t>(doc, "horizon", config.horizon);
    config.replications = get_or<std::uint64_t>(doc, "replications", config.replications);
    config.seed_base = get_or<std::uint64_t>(doc, "seed_base", config.seed_base);
    config.output = get_or<std::string>(doc, "output", config.output.string());
    config.write_plot = get_or<bool>(doc, "plot", config.write_plot);
    if (doc.contains("mdp")) {
      const json& mdp = doc["mdp"];
      reject_unknown_keys(mdp, {"x_max", "tolerance", "policy_dump"}, "mdp");
      config.mdp.x_max = get_or<Age>(mdp, "x_max", config.mdp.x_max);
      config.mdp.tolerance = get_or<double>(mdp, "tolerance", config.mdp.tolerance);
      if (mdp.contains("policy_dump")) config.mdp.policy_dump = mdp["policy_dump"].get<std::string>();
    }
    if (doc.contains("sweep")) {
      const json& sweep = doc["sweep"];
      reject_unknown_keys(sweep, {"p"}, "sweep");
      config.sweep_p = sweep.at("p").get<std::vector<double>>();
    }
    if (doc.contains("initial_ages")) config.initial_ages = doc["initial_ages"].get<std::vector<Age>>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad config value: {}", e.what()));
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void validate(const ExperimentConfig& config) {
  if (config.p.empty()) throw ConfigError("at least one user is required");
  try {
    for (const double p : config.p) validate_probability(p);
    for (const double p : config.sweep_p) validate_probability(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (config.schedulers.empty()) throw ConfigError("at least one scheduler is required");
  if (config.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (config.replications < 1) throw ConfigError("replications must be >= 1");
  if (!config.initial_ages.empty()) {
    if (config.initial_ages.size() != config.num_users()) throw ConfigError("one initial age per user required");
    try {
      validate_initial_ages(config.initial_ages);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (config.uses_optimal()) {
    if (config.num_users() > JointModel::kMaxUsers) {
      throw ConfigError(fmt::format("optimal_lookup solves the joint MDP, which supports at most {} users (got {})",
                                    JointModel::kMaxUsers, config.num_users()));
    }
    if (config.mdp.x_max < 2 || config.mdp.x_max > JointModel::kMaxAgeCap) {
      throw ConfigError(fmt::format("mdp.x_max must lie in [2, {}] for the joint MDP (got {})",
                                    JointModel::kMaxAgeCap, config.mdp.x_max));
    }
    const double estimate = JointModel::estimate_states(config.num_users(), config.mdp.x_max);
    if (estimate > static_cast<double>(JointModel::kDefaultStateCap)) {
      throw ConfigError(fmt::format("joint MDP would have about {:.0f} states (cap {})", estimate,
                                    JointModel::kDefaultStateCap));
    }
    if (!(config.mdp.tolerance > 0.0)) throw ConfigError("mdp.tolerance must be positive");
  }
}

SummaryRow summarize(std::span<const ResultRow> rows, std::size_t point, SchedulerKind scheduler) {
  SummaryRow s;
  s.point = point;
  s.scheduler = scheduler;
  std::vector<double> values;
  for (const ResultRow& r : rows) {
    if (r.point == point && r.scheduler == scheduler) {
      values.push_back(r.report.time_avg_total_age);
      s.p = r.p;
    }
  }
  s.replications = values.size();
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const std::size_t points = num_points(config);
  const std::size_t n_sched = config.schedulers.size();
  const std::size_t reps = static_cast<std::size_t>(config.replications);
  const std::vector<Age> initial =
      config.initial_ages.empty() ? default_initial_ages(config.num_users()) : config.initial_ages;

  ExperimentResult result;
  result.rows.resize(points * n_sched * reps);
  for (std::size_t point = 0; point < points; ++point) {
    const std::vector<double> p = point_probabilities(config, point);

    std::shared_ptr<const JointPolicy> policy;
    if (config.uses_optimal()) {
      RviConfig rvi;
      rvi.tolerance = config.mdp.tolerance;
      auto solved = std::make_shared<JointPolicy>(solve_joint(p, config.mdp.x_max, rvi));
      result.optimal_gains.push_back(solved->gain);
      if (config.mdp.policy_dump) {
        std::filesystem::path dump = *config.mdp.policy_dump;
        if (points > 1) dump += fmt::format(".{}", point);
        if (dump.has_parent_path()) std::filesystem::create_directories(dump.parent_path());
        std::ofstream out(dump);
        write_joint_policy(out, *solved);
      }
      policy = std::move(solved);
    }

    // Replications run in parallel; every task writes its own pre-assigned row.
    const std::size_t offset = point * n_sched * reps;
    kernels::for_each_index(kernels::default_backend(), n_sched * reps, [&](std::size_t task) {
      const std::size_t sched = task / reps;
      const std::uint64_t rep = task % reps;
      const std::uint64_t seed = config.seed_base + rep;
      const ArrivalProcess users(p, seed);
      auto scheduler = make_scheduler(config.schedulers[sched], p, policy);
      ResultRow& row = result.rows[offset + task];
      row.point = point;
      row.p = p;
      row.scheduler = config.schedulers[sched];
      row.replication = rep;
      row.seed = seed;
      row.report = run(users, *scheduler, config.horizon, initial);
    });

    for (const SchedulerKind kind : config.schedulers) {
      const std::span<const ResultRow> point_rows(result.rows.data() + offset, n_sched * reps);
      result.summary.push_back(summarize(point_rows, point, kind));
    }
  }

  // Ratios against the optimal benchmark at the same point.
  for (SummaryRow& s : result.summary) {
    for (const SummaryRow& o : result.summary) {
      if (o.point == s.point && o.scheduler == SchedulerKind::optimal_lookup && o.mean > 0.0) {
        s.ratio_to_optimal = s.mean / o.mean;
      }
    }
  }
  return result;
}

void write_results_csv(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result) {
  const std::size_t n = config.num_users();
  out << "point";
  for (std::size_t i = 1; i <= n; ++i) out << ",p_" << i;
  out << ",scheduler,replication,seed,time_avg_total_age";
  for (std::size_t i = 1; i <= n; ++i) out << ",avg_age_" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",updates_" << i;
  out << ",wasted_slots\n";
  for (const ResultRow& r : result.rows) {
    out << r.point;
    for (const double p : r.p) out << ',' << num(p);
    fmt::print(out, ",{},{},{},{}", to_string(r.scheduler), r.replication, r.seed, num(r.report.time_avg_total_age));
    for (const double a : r.report.per_user_avg_age) out << ',' << num(a);
    for (const auto c : r.report.per_user_update_count) out << ',' << c;
    out << ',' << r.report.wasted_slots << '\n';
  }
}

void write_summary_csv(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result) {
  const std::size_t n = config.num_users();
  out << "point";
  for (std::size_t i = 1; i <= n; ++i) out << ",p_" << i;
  out << ",scheduler,replications,mean_avg_total_age,std_error,ratio_to_optimal\n";
  for (const SummaryRow& s : result.summary) {
    out << s.point;
    for (const double p : s.p) out << ',' << num(p);
    fmt::print(out, ",{},{},{},{},{}\n", to_string(s.scheduler), s.replications, num(s.mean), num(s.std_error),
               s.ratio_to_optimal ? num(*s.ratio_to_optimal) : std::string());
  }
}

void write_plot_csv(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result) {
  out << 'p';
  for (const SchedulerKind kind : config.schedulers) out << ',' << to_string(kind);
  out << '\n';
  for (std::size_t point = 0; point < config.sweep_p.size(); ++point) {
    out << num(config.sweep_p[point]);
    for (const SchedulerKind kind : config.schedulers) {
      const auto it = std::find_if(result.summary.begin(), result.summary.end(),
                                   [&](const SummaryRow& s) { return s.point == point && s.scheduler == kind; });
      out << ',' << (it == result.summary.end() ? std::string() : num(it->mean));
    }
    out << '\n';
  }
}

std::vector<std::filesystem::path> write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  std::filesystem::create_directories(config.output);
  std::vector<std::filesystem::path> written;
  const auto emit = [&](const char* name, auto&& writer) {
    const std::filesystem::path path = config.output / name;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    writer(out, config, result);
    written.push_back(path);
  };
  emit("results.csv", write_results_csv);
  emit("summary.csv", write_summary_csv);
  if (config.write_plot && !config.sweep_p.empty()) emit("plot.csv", write_plot_csv);
  return written;
}

}  // namespace aoi
