#include "aoi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

namespace aoi {

namespace {

struct SweepResult {
  std::vector<double> values;
  std::vector<std::uint8_t> actions;
  double gain = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
};

// h <- tau*(T h) + (1-tau)*h, renormalized so h(reference) = 0. Stops when
// span(T h - h) <= tolerance; the gain is the midpoint of T h - h.
template <kernels::SweepModel M>
SweepResult relative_value_iteration_core(const M& model, std::size_t reference, const RviConfig& config) {
  if (!(config.aperiodicity > 0.0 && config.aperiodicity <= 1.0)) {
    throw std::invalid_argument("aperiodicity weight must lie in (0, 1]");
  }
  const std::size_t n = model.num_states();
  const double tau = config.aperiodicity;
  std::vector<double> h(n, 0.0);
  std::vector<double> best(n, 0.0);
  std::vector<double> scratch(model.scratch_size(), 0.0);
  std::vector<std::uint8_t> actions(n, 0);

  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    kernels::bellman_sweep(config.backend, model, h, scratch, 1.0, config.tie_tolerance, best, actions);
    const kernels::Range diff =
        kernels::minmax_over(config.backend, n, [&](std::size_t s) { return best[s] - h[s]; });
    residual = diff.span();
    if (residual <= config.tolerance) {
      return {std::move(h), std::move(actions), diff.mid(), residual, it};
    }
    const double anchor = tau * best[reference] + (1.0 - tau) * h[reference];
    kernels::for_each_index(config.backend, n,
                            [&](std::size_t s) { h[s] = tau * best[s] + (1.0 - tau) * h[s] - anchor; });
  }
  throw ConvergenceError(
      fmt::format("relative value iteration did not converge in {} iterations (span {})", config.max_iterations,
                  residual),
      residual, config.max_iterations);
}

}  // namespace

SubproblemModel::SubproblemModel(double p, double cost, Age x_max) : p_(p), cost_(cost), x_max_(x_max) {
  validate_probability(p);
  if (x_max < kMinAgeCap) {
    throw std::invalid_argument(fmt::format("x_max must be >= {}, got {}", kMinAgeCap, x_max));
  }
  if (!std::isfinite(cost)) throw std::invalid_argument("update cost must be finite");

  const std::size_t n = num_states();
  costs_.resize(2 * n);
  transitions_.resize(2 * n);
  for (Age x = 1; x <= x_max_; ++x) {
    const Age grown = std::min(x + 1, x_max_);
    for (const bool arrival : {false, true}) {
      const std::size_t s = sub_index(x, arrival);
      for (const Action a : {kIdle, kUpdate}) {
        const bool refresh = a == kUpdate && arrival;
        // (x + 1 - x*a*lambda) + C*a
        const double xa = static_cast<double>(x);
        costs_[2 * s + a] = (xa + 1.0 - (refresh ? xa : 0.0)) + (a == kUpdate ? cost_ : 0.0);
        const Age next_age = refresh ? 1 : grown;
        transitions_[2 * s + a] = {Transition{sub_index(next_age, true), p_},
                                   Transition{sub_index(next_age, false), 1.0 - p_}};
      }
    }
  }
}

kernels::Greedy SubproblemModel::greedy(std::size_t state, std::span<const double> values, std::span<const double>,
                                        double discount, double tie_tolerance) const {
  kernels::Greedy g{std::numeric_limits<double>::infinity(), kIdle};
  for (const Action a : {kIdle, kUpdate}) {
    double expected = 0.0;
    for (const Transition& t : transitions(state, a)) expected += t.prob * values[t.next];
    const double q = immediate_cost(state, a) + discount * expected;
    if (q < g.value - tie_tolerance) g = {q, a};
  }
  return g;
}

SubproblemModel build_subproblem(double p, double cost, Age x_max) {
  return SubproblemModel(p, cost, x_max);
}

SolvedPolicy relative_value_iteration(const SubproblemModel& model, const RviConfig& config) {
  SweepResult r = relative_value_iteration_core(model, sub_index(1, true), config);
  return SolvedPolicy{model.x_max(), std::move(r.actions), std::move(r.values), r.gain, r.residual, r.iterations};
}

SolvedPolicy discounted_value_iteration(const SubproblemModel& model, const DiscountedSolverConfig& config) {
  const double alpha = config.discount;
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument(fmt::format("discount factor must lie in (0, 1), got {}", alpha));
  }
  const std::size_t n = model.num_states();
  std::vector<double> j(n, 0.0);
  std::vector<double> next(n, 0.0);
  std::vector<std::uint8_t> actions(n, 0);
  std::vector<double> scratch;

  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    kernels::bellman_sweep(config.backend, model, j, scratch, alpha, config.tie_tolerance, next, actions);
    const kernels::Range diff =
        kernels::minmax_over(config.backend, n, [&](std::size_t s) { return std::abs(next[s] - j[s]); });
    residual = diff.hi;
    j.swap(next);
    if (residual <= config.tolerance) {
      // Greedy actions with respect to the converged J.
      kernels::bellman_sweep(config.backend, model, j, scratch, alpha, config.tie_tolerance, next, actions);
      const double gain = (1.0 - alpha) * j[sub_index(1, true)];
      return SolvedPolicy{model.x_max(), std::move(actions), std::move(j), gain, residual, it};
    }
  }
  throw ConvergenceError(
      fmt::format("discounted value iteration did not converge in {} iterations (residual {})",
                  config.max_iterations, residual),
      residual, config.max_iterations);
}

Age extract_threshold(const SolvedPolicy& policy) {
  const Age x_max = policy.x_max;
  if (policy.actions.size() != 2 * static_cast<std::size_t>(x_max)) {
    throw std::invalid_argument("policy table does not match its x_max");
  }
  for (Age x = 1; x <= x_max; ++x) {
    if (policy.action(x, false) != kIdle) {
      throw StructureError(fmt::format("policy updates without an arrival at age {}", x));
    }
  }
  Age threshold = 0;
  for (Age x = 1; x <= x_max; ++x) {
    const bool update = policy.action(x, true) == kUpdate;
    if (update && threshold == 0) threshold = x;
    if (!update && threshold != 0) {
      throw StructureError(fmt::format("policy updates at age {} but idles at age {} with an arrival", threshold, x));
    }
  }
  if (threshold == 0) {
    throw TruncationError(fmt::format("no update anywhere up to x_max = {}; raise x_max", x_max));
  }
  if (2 * threshold >= x_max) {
    throw TruncationError(
        fmt::format("threshold {} is not below x_max/2 = {}; raise x_max", threshold, static_cast<double>(x_max) / 2));
  }
  return threshold;
}

void write_policy_table(std::ostream& out, const SolvedPolicy& policy) {
  out << "# x lambda action\n";
  for (Age x = 1; x <= policy.x_max; ++x) {
    for (const bool arrival : {false, true}) {
      out << x << ' ' << (arrival ? 1 : 0) << ' ' << static_cast<int>(policy.action(x, arrival)) << '\n';
    }
  }
}

double JointModel::estimate_states(std::size_t users, Age x_max) {
  return std::pow(static_cast<double>(x_max), static_cast<double>(users)) * std::pow(2.0, static_cast<double>(users));
}

JointModel::JointModel(std::vector<double> probabilities, Age x_max, std::size_t state_cap)
    : p_(std::move(probabilities)), x_max_(x_max) {
  if (p_.empty()) throw std::invalid_argument("joint model needs at least one user");
  for (const double p : p_) validate_probability(p);
  if (x_max < 2) throw std::invalid_argument("joint model needs x_max >= 2");
  const double estimate = estimate_states(p_.size(), x_max);
  if (p_.size() > kMaxUsers || x_max > kMaxAgeCap || estimate > static_cast<double>(state_cap)) {
    throw StateSpaceTooLarge(
        fmt::format("joint model with {} users and x_max = {} has about {:.0f} states; limits are {} users, "
                    "x_max <= {}, {} states",
                    p_.size(), x_max, estimate, kMaxUsers, kMaxAgeCap, state_cap),
        estimate);
  }
  num_tuples_ = 1;
  for (std::size_t i = 0; i < p_.size(); ++i) num_tuples_ *= static_cast<std::size_t>(x_max);

  pattern_prob_.resize(num_flag_patterns());
  for (std::size_t pattern = 0; pattern < pattern_prob_.size(); ++pattern) {
    double prob = 1.0;
    for (std::size_t i = 0; i < p_.size(); ++i) prob *= ((pattern >> i) & 1U) ? p_[i] : 1.0 - p_[i];
    pattern_prob_[pattern] = prob;
  }
}

std::size_t JointModel::tuple_index(std::span<const Age> ages) const {
  std::size_t index = 0;
  for (std::size_t i = ages.size(); i-- > 0;) {
    const Age clipped = std::clamp<Age>(ages[i], 1, x_max_);
    index = index * static_cast<std::size_t>(x_max_) + static_cast<std::size_t>(clipped - 1);
  }
  return index;
}

std::size_t JointModel::state_index(std::span<const Age> ages, std::span<const ArrivalFlag> flags) const {
  if (ages.size() != num_users() || flags.size() != num_users()) {
    throw std::invalid_argument("joint state has the wrong number of users");
  }
  std::size_t pattern = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) pattern |= static_cast<std::size_t>(flags[i] != 0) << i;
  return tuple_index(ages) * num_flag_patterns() + pattern;
}

void JointModel::decode(std::size_t state, std::span<Age> ages, std::span<ArrivalFlag> flags) const {
  const std::size_t pattern = state % num_flag_patterns();
  std::size_t tuple = state / num_flag_patterns();
  for (std::size_t i = 0; i < num_users(); ++i) {
    ages[i] = static_cast<Age>(tuple % static_cast<std::size_t>(x_max_)) + 1;
    tuple /= static_cast<std::size_t>(x_max_);
    flags[i] = static_cast<ArrivalFlag>((pattern >> i) & 1U);
  }
}

void JointModel::prepare(std::size_t tuple, std::span<const double> values, std::span<double> scratch) const {
  const std::size_t patterns = num_flag_patterns();
  double expected = 0.0;
  for (std::size_t pattern = 0; pattern < patterns; ++pattern) {
    expected += pattern_prob_[pattern] * values[tuple * patterns + pattern];
  }
  scratch[tuple] = expected;
}

kernels::Greedy JointModel::greedy(std::size_t state, std::span<const double>, std::span<const double> scratch,
                                   double discount, double tie_tolerance) const {
  std::array<Age, kMaxUsers> ages{};
  std::array<ArrivalFlag, kMaxUsers> flags{};
  const std::size_t n = num_users();
  decode(state, std::span(ages.data(), n), std::span(flags.data(), n));

  std::array<Age, kMaxUsers> next{};
  kernels::Greedy g{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t d = 0; d <= n; ++d) {
    Age total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool refresh = d == i + 1 && flags[i] != 0;
      const Age age = refresh ? 1 : ages[i] + 1;
      total += age;
      next[i] = age;
    }
    const double q = static_cast<double>(total) + discount * scratch[tuple_index(std::span(next.data(), n))];
    if (q < g.value - tie_tolerance) g = {q, static_cast<std::uint8_t>(d)};
  }
  return g;
}

Decision JointPolicy::decide(std::span<const Age> ages, std::span<const ArrivalFlag> flags) const {
  const std::size_t n = probabilities.size();
  if (ages.size() != n || flags.size() != n) throw std::invalid_argument("joint state has the wrong number of users");
  // Same layout as JointModel::state_index.
  std::size_t tuple = 0;
  for (std::size_t i = n; i-- > 0;) {
    tuple = tuple * static_cast<std::size_t>(x_max) + static_cast<std::size_t>(std::clamp<Age>(ages[i], 1, x_max) - 1);
  }
  std::size_t pattern = 0;
  for (std::size_t i = 0; i < n; ++i) pattern |= static_cast<std::size_t>(flags[i] != 0) << i;
  return Decision{actions.at((tuple << n) + pattern)};
}

JointPolicy solve_joint(std::vector<double> probabilities, Age x_max, const RviConfig& config,
                        std::size_t state_cap) {
  const JointModel model(probabilities, x_max, state_cap);
  // Reference state: ages (1, 2, ..., N) clipped, no arrivals.
  std::vector<Age> ref_ages(model.num_users());
  std::vector<ArrivalFlag> ref_flags(model.num_users(), 0);
  for (std::size_t i = 0; i < ref_ages.size(); ++i) ref_ages[i] = static_cast<Age>(i + 1);
  SweepResult r = relative_value_iteration_core(model, model.state_index(ref_ages, ref_flags), config);
  return JointPolicy{std::move(probabilities), x_max, std::move(r.actions), r.gain, r.residual, r.iterations};
}

void write_joint_policy(std::ostream& out, const JointPolicy& policy) {
  const JointModel layout(policy.probabilities, policy.x_max);
  const std::size_t n = layout.num_users();
  fmt::print(out, "# joint-policy users={} x_max={} gain={:.17g} p=", n, policy.x_max, policy.gain);
  for (std::size_t i = 0; i < n; ++i) fmt::print(out, "{}{:.17g}", i ? "," : "", policy.probabilities[i]);
  out << '\n';
  std::vector<Age> ages(n);
  std::vector<ArrivalFlag> flags(n);
  for (std::size_t s = 0; s < layout.num_states(); ++s) {
    layout.decode(s, ages, flags);
    for (const Age a : ages) out << a << ' ';
    for (const ArrivalFlag f : flags) out << static_cast<int>(f) << ' ';
    out << static_cast<int>(policy.actions[s]) << '\n';
  }
}

JointPolicy read_joint_policy(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# joint-policy", 0) != 0) {
    throw std::invalid_argument("missing '# joint-policy' header");
  }
  JointPolicy policy;
  std::size_t users = 0;
  std::istringstream fields(header.substr(14));
  std::string field;
  while (fields >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed policy header field: " + field);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "users") {
      users = std::stoul(value);
    } else if (key == "x_max") {
      policy.x_max = std::stoll(value);
    } else if (key == "gain") {
      policy.gain = std::stod(value);
    } else if (key == "p") {
      std::istringstream list(value);
      std::string item;
      while (std::getline(list, item, ',')) policy.probabilities.push_back(std::stod(item));
    }
  }
  if (users == 0 || policy.probabilities.size() != users) {
    throw std::invalid_argument("policy header user count does not match its probabilities");
  }
  const JointModel layout(policy.probabilities, policy.x_max);
  policy.actions.assign(layout.num_states(), 0);
  std::vector<bool> seen(layout.num_states(), false);
  std::vector<Age> ages(users);
  std::vector<ArrivalFlag> flags(users);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream row(line);
    for (auto& a : ages) row >> a;
    for (auto& f : flags) {
      int v = 0;
      row >> v;
      f = static_cast<ArrivalFlag>(v);
    }
    int action = -1;
    row >> action;
    if (!row || action < 0 || static_cast<std::size_t>(action) > users) {
      throw std::invalid_argument("malformed policy row: " + line);
    }
    const std::size_t s = layout.state_index(ages, flags);
    policy.actions[s] = static_cast<std::uint8_t>(action);
    seen[s] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw std::invalid_argument("policy table does not cover every joint state");
  }
  return policy;
}

}  // namespace aoi
