#include "aoi/sim.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "aoi/whittle.hpp"

namespace aoi {

SchedulerKind parse_scheduler_kind(std::string_view name) {
  if (name == "whittle") return SchedulerKind::whittle;
  if (name == "max_age") return SchedulerKind::max_age;
  if (name == "round_robin") return SchedulerKind::round_robin;
  if (name == "random") return SchedulerKind::random;
  if (name == "optimal_lookup" || name == "optimal") return SchedulerKind::optimal_lookup;
  throw std::invalid_argument(fmt::format("unknown scheduler '{}'", name));
}

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::whittle: return "whittle";
    case SchedulerKind::max_age: return "max_age";
    case SchedulerKind::round_robin: return "round_robin";
    case SchedulerKind::random: return "random";
    case SchedulerKind::optimal_lookup: return "optimal_lookup";
  }
  return "unknown";
}

Decision whittle_decide(const NetworkState& state, std::span<const double> p) {
  if (p.size() != state.num_users()) throw std::invalid_argument("one arrival probability per user required");
  Decision best = Decision::idle();
  double best_index = 0.0;
  for (std::size_t i = 0; i < state.num_users(); ++i) {
    const double index = whittle_index(state.ages[i], state.arrivals[i] != 0, p[i]);
    // Strict comparison: a zero index never beats idle, ties keep the lower id.
    if (index > best_index) {
      best_index = index;
      best = Decision::update(i + 1);
    }
  }
  return best;
}

WhittleScheduler::WhittleScheduler(std::vector<double> p) : p_(std::move(p)) {
  for (const double v : p_) validate_probability(v);
}

Decision MaxAgeScheduler::decide(const NetworkState& state) {
  Decision best = Decision::idle();
  Age oldest = 0;
  for (std::size_t i = 0; i < state.num_users(); ++i) {
    if (state.arrivals[i] != 0 && state.ages[i] > oldest) {
      oldest = state.ages[i];
      best = Decision::update(i + 1);
    }
  }
  return best;
}

Decision RoundRobinScheduler::decide(const NetworkState& state) {
  const std::size_t n = state.num_users();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (next_ + k) % n;
    if (state.arrivals[i] != 0) {
      next_ = (i + 1) % n;
      return Decision::update(i + 1);
    }
  }
  return Decision::idle();
}

void RandomScheduler::reset(std::uint64_t seed) {
  rng_.seed(splitmix64(seed ^ 0x72616e646f6dULL));
}

Decision RandomScheduler::decide(const NetworkState& state) {
  std::size_t candidates = 0;
  for (const ArrivalFlag f : state.arrivals) candidates += f != 0;
  if (candidates == 0) return Decision::idle();
  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, candidates - 1)(rng_);
  for (std::size_t i = 0; i < state.num_users(); ++i) {
    if (state.arrivals[i] != 0 && pick-- == 0) return Decision::update(i + 1);
  }
  return Decision::idle();
}

OptimalLookupScheduler::OptimalLookupScheduler(std::shared_ptr<const JointPolicy> policy)
    : policy_(std::move(policy)) {
  if (!policy_) throw std::invalid_argument("optimal_lookup needs a solved joint policy");
}

Decision OptimalLookupScheduler::decide(const NetworkState& state) {
  return policy_->decide(state.ages, state.arrivals);
}

std::unique_ptr<Scheduler> make_scheduler(SchedulerKind kind, std::span<const double> p,
                                          std::shared_ptr<const JointPolicy> policy) {
  switch (kind) {
    case SchedulerKind::whittle:
      return std::make_unique<WhittleScheduler>(std::vector<double>(p.begin(), p.end()));
    case SchedulerKind::max_age: return std::make_unique<MaxAgeScheduler>();
    case SchedulerKind::round_robin: return std::make_unique<RoundRobinScheduler>();
    case SchedulerKind::random: return std::make_unique<RandomScheduler>();
    case SchedulerKind::optimal_lookup:
      if (policy && policy->probabilities.size() != p.size()) {
        throw std::invalid_argument("joint policy was solved for a different number of users");
      }
      return std::make_unique<OptimalLookupScheduler>(std::move(policy));
  }
  throw std::invalid_argument("unknown scheduler kind");
}

namespace {

void advance_ages(std::span<Age> ages, std::span<const ArrivalFlag> arrivals, Decision decision) {
  for (std::size_t i = 0; i < ages.size(); ++i) {
    const bool delivered = decision.target == i + 1 && arrivals[i] != 0;
    ages[i] = delivered ? 1 : ages[i] + 1;
  }
}

}  // namespace

bool is_wasted(Decision decision, std::span<const ArrivalFlag> arrivals) {
  return !decision.is_idle() && arrivals[decision.user()] == 0;
}

NetworkState step(const NetworkState& state, Decision decision, std::span<const ArrivalFlag> arrivals) {
  const std::size_t n = state.num_users();
  if (decision.target > n) {
    throw std::invalid_argument(fmt::format("decision {} outside 0..{}", decision.target, n));
  }
  if (arrivals.size() != n) throw std::invalid_argument("one arrival flag per user required");
  NetworkState next{state.ages, std::vector<ArrivalFlag>(n, 0), state.slot + 1};
  advance_ages(next.ages, arrivals, decision);
  return next;
}

std::vector<Age> default_initial_ages(std::size_t users) {
  std::vector<Age> ages(users);
  for (std::size_t i = 0; i < users; ++i) ages[i] = static_cast<Age>(i + 1);
  return ages;
}

SimReport run(const ArrivalProcess& users, Scheduler& scheduler, std::uint64_t horizon,
              std::span<const Age> initial_ages, const TraceSink& trace) {
  const std::size_t n = users.num_users();
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (initial_ages.size() != n) throw std::invalid_argument("one initial age per user required");
  validate_initial_ages(initial_ages);

  scheduler.reset(users.seed());
  SimReport report;
  report.horizon = horizon;
  report.seed = users.seed();
  report.per_user_update_count.assign(n, 0);
  std::vector<Age> age_sums(n, 0);
  Age total_sum = 0;
  const Age floor = min_total_age(n);

  NetworkState state;
  state.ages.assign(initial_ages.begin(), initial_ages.end());
  state.arrivals.assign(n, 0);

  for (Slot t = 0;; ++t) {
    users.sample(t, state.arrivals);
    const Age total = state.total_age();
    if (total < floor) {
      throw std::logic_error(fmt::format("total age {} below the lower bound {} at slot {}", total, floor, t));
    }
    total_sum += total;
    for (std::size_t i = 0; i < n; ++i) age_sums[i] += state.ages[i];
    if (t == horizon) {
      if (trace) trace(state, Decision::idle());
      break;
    }

    const Decision d = scheduler.decide(state);
    if (d.target > n) throw std::logic_error(fmt::format("scheduler {} chose invalid user {}", scheduler.name(), d.target));
    if (trace) trace(state, d);
    if (is_wasted(d, state.arrivals)) {
      ++report.wasted_slots;
    } else if (!d.is_idle()) {
      ++report.per_user_update_count[d.user()];
    }
    advance_ages(state.ages, state.arrivals, d);
    state.slot = t + 1;
  }

  const double observations = static_cast<double>(horizon) + 1.0;
  report.time_avg_total_age = static_cast<double>(total_sum) / observations;
  report.per_user_avg_age.resize(n);
  for (std::size_t i = 0; i < n; ++i) report.per_user_avg_age[i] = static_cast<double>(age_sums[i]) / observations;
  return report;
}

TraceSink csv_trace(std::ostream& out) {
  return [&out, header = false](const NetworkState& state, Decision d) mutable {
    const std::size_t n = state.num_users();
    if (!header) {
      out << "slot,D";
      for (std::size_t i = 1; i <= n; ++i) out << ",X_" << i;
      for (std::size_t i = 1; i <= n; ++i) out << ",L_" << i;
      out << '\n';
      header = true;
    }
    out << state.slot << ',' << d.target;
    for (const Age a : state.ages) out << ',' << a;
    for (const ArrivalFlag f : state.arrivals) out << ',' << static_cast<int>(f);
    out << '\n';
  };
}

}  // namespace aoi
