#include "aoi/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace aoi {

double average_cost_relaxed(double threshold, SubproblemParams params) {
  const double x = threshold;
  const double p = params.p;
  const double numerator = x * x / 2.0 + (1.0 / p - 1.0 / 2.0) * x + 1.0 / (p * p) - 1.0 / p + params.cost;
  const double denominator = x + (1.0 - p) / p;
  return numerator / denominator;
}

double average_cost(Age threshold, SubproblemParams params) {
  if (threshold < 1) {
    throw std::invalid_argument(fmt::format("threshold must be >= 1, got {}", threshold));
  }
  validate_probability(params.p);
  return average_cost_relaxed(static_cast<double>(threshold), params);
}

double whittle_index(Age x, bool arrival, double p) {
  if (x < 1) {
    throw std::invalid_argument(fmt::format("age must be >= 1, got {}", x));
  }
  validate_probability(p);
  if (!arrival) return 0.0;
  const double a = static_cast<double>(x);
  return a * a / 2.0 - a / 2.0 + a / p;
}

namespace {

double active_index_or_zero(Age x, double p) {
  return x == 0 ? 0.0 : whittle_index(x, true, p);
}

}  // namespace

Age optimal_threshold(SubproblemParams params) {
  validate_probability(params.p);
  if (!(params.cost >= 0.0)) {
    throw std::invalid_argument(
        fmt::format("threshold structure needs a non-negative update cost, got {}", params.cost));
  }
  if (!std::isfinite(params.cost)) {
    throw std::invalid_argument("update cost must be finite");
  }
  // Positive root of x^2/2 + (1/p - 1/2) x = C is where I(x,1) crosses C.
  const double b = 1.0 / params.p - 0.5;
  const double root = -b + std::sqrt(b * b + 2.0 * params.cost);
  Age x = std::max<Age>(1, static_cast<Age>(std::floor(root)));
  // Settle the rounding of the root: want I(x-1,1) <= C < I(x,1).
  while (x > 1 && active_index_or_zero(x - 1, params.p) > params.cost) --x;
  while (active_index_or_zero(x, params.p) <= params.cost) ++x;
  return x;
}

IndexTable::IndexTable(double p, Age age_cap) : p_(p), age_cap_(age_cap) {
  validate_probability(p);
  if (age_cap < 1) throw std::invalid_argument("index table needs age_cap >= 1");
  active_.reserve(static_cast<std::size_t>(age_cap));
  for (Age x = 1; x <= age_cap; ++x) active_.push_back(whittle_index(x, true, p));
}

double IndexTable::operator()(Age x, bool arrival) const {
  if (x < 1 || x > age_cap_) {
    throw std::out_of_range(fmt::format("age {} outside index table [1, {}]", x, age_cap_));
  }
  return arrival ? active_[static_cast<std::size_t>(x - 1)] : 0.0;
}

Age IndexTable::threshold(double cost) const {
  if (!(cost >= 0.0)) throw std::invalid_argument("threshold map is defined for C >= 0");
  // Count of x with I(x,1) <= C; the threshold is the next age.
  const auto it = std::upper_bound(active_.begin(), active_.end(), cost);
  if (it == active_.end()) {
    throw std::out_of_range(fmt::format("cost {} exceeds I({},1)", cost, age_cap_));
  }
  return static_cast<Age>(it - active_.begin()) + 1;
}

bool IdleSet::contains(SubState s) const {
  return std::binary_search(states.begin(), states.end(), s);
}

std::vector<IdleSet> indexability_sweep(double p, std::span<const double> cost_grid, Age age_cap) {
  validate_probability(p);
  if (age_cap < 1) throw std::invalid_argument("age_cap must be >= 1");
  if (!std::is_sorted(cost_grid.begin(), cost_grid.end())) {
    throw std::invalid_argument("cost grid must be ascending");
  }
  std::vector<IdleSet> sets;
  sets.reserve(cost_grid.size());
  for (const double cost : cost_grid) {
    IdleSet set;
    set.cost = cost;
    set.threshold = optimal_threshold({p, cost});
    for (Age x = 1; x <= age_cap; ++x) {
      set.states.push_back({x, false});
      if (x < set.threshold) set.states.push_back({x, true});
    }
    std::sort(set.states.begin(), set.states.end());
    sets.push_back(std::move(set));
  }
  return sets;
}

bool is_nested(std::span<const IdleSet> sets) {
  for (std::size_t k = 1; k < sets.size(); ++k) {
    const auto& smaller = sets[k - 1].states;
    const auto& larger = sets[k].states;
    if (!std::includes(larger.begin(), larger.end(), smaller.begin(), smaller.end())) return false;
  }
  return true;
}

}  // namespace aoi
