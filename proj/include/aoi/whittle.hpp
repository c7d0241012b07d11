#pragma once

#include <compare>
#include <span>
#include <vector>

#include "aoi/core.hpp"

namespace aoi {

// Decoupled single-user problem: arrival probability p and the per-update
// charge C (the Lagrange multiplier of the relaxed bandit problem).
struct SubproblemParams {
  double p = 1.0;
  double cost = 0.0;
};

// A state (x, lambda) of the single-user problem.
struct SubState {
  Age age = 1;
  bool arrival = false;

  friend constexpr auto operator<=>(const SubState&, const SubState&) = default;
};

// Long-run average cost of the threshold policy "update iff an arrival is
// present and age >= threshold":
//
//   ( X^2/2 + (1/p - 1/2) X + 1/p^2 - 1/p + C ) / ( X + (1-p)/p )
//
// Evaluated exactly as written, without rearrangement.
double average_cost(Age threshold, SubproblemParams params);

// Same expression over a real-valued threshold x >= 1 (the continuous
// relaxation, strictly convex in x).
double average_cost_relaxed(double threshold, SubproblemParams params);

// Whittle index I(x, lambda): 0 without an arrival, x^2/2 - x/2 + x/p with one.
double whittle_index(Age x, bool arrival, double p);

// Optimal threshold for C >= 0: the unique x with I(x-1,1) <= C < I(x,1),
// where I(0,1) := 0. At C == I(x-1,1) both x-1 and x are optimal and the
// idle-favoring x is returned. Throws std::invalid_argument for C < 0.
Age optimal_threshold(SubproblemParams params);

// Tabulated index values for one arrival probability, plus the inverse map
// C -> optimal threshold by binary search over the tabulated I(x,1).
class IndexTable {
 public:
  IndexTable(double p, Age age_cap);

  double p() const { return p_; }
  Age age_cap() const { return age_cap_; }

  // I(x, lambda) for 1 <= x <= age_cap.
  double operator()(Age x, bool arrival) const;

  // Threshold for cost C >= 0. Throws std::out_of_range when C >= I(age_cap,1),
  // i.e. the answer lies beyond the table.
  Age threshold(double cost) const;

 private:
  double p_;
  Age age_cap_;
  std::vector<double> active_;  // active_[x-1] = I(x, 1)
};

// S(C): the set of states where idling is optimal, restricted to ages
// <= age_cap. Materialized and sorted so nesting is a plain set comparison.
struct IdleSet {
  double cost = 0.0;
  Age threshold = 1;
  std::vector<SubState> states;

  bool contains(SubState s) const;
};

// Idle sets along an ascending grid of non-negative costs.
std::vector<IdleSet> indexability_sweep(double p, std::span<const double> cost_grid, Age age_cap);

// True iff S(C_k) is a subset of S(C_{k+1}) for every consecutive pair.
bool is_nested(std::span<const IdleSet> sets);

}  // namespace aoi
