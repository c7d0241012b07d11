#pragma once

#include <cstdint>
#include <vector>

#include "aoi/core.hpp"

namespace aoi {

// Pre-action age under "update on every arrival": pi_i = p (1-p)^(i-1).
class GeometricAgeDistribution {
 public:
  explicit GeometricAgeDistribution(double p);

  double p() const { return p_; }
  double pmf(Age i) const;
  // P[X > i], closed form (1-p)^i.
  double tail_above(Age i) const;
  double mean() const { return 1.0 / p_; }

 private:
  double p_;
};

// Post-action age Y = x + 1 - x*a*lambda under a threshold policy: flat head
// of height 1/(X + (1-p)/p) on 1..X, geometric tail beyond X.
class PostActionDistribution {
 public:
  PostActionDistribution(double p, Age threshold);

  double p() const { return p_; }
  Age threshold() const { return threshold_; }
  double pmf(Age i) const;
  // P[Y > i] from geometric series, no truncation.
  double tail_above(Age i) const;
  // (1+C) pi_1 + sum_{i>=2} i pi_i, with both sums in closed form.
  double average_cost(double update_cost) const;

 private:
  double p_;
  Age threshold_;
  double head_;  // 1 / (X + (1-p)/p)
};

// Mean of the always-update pre-action chain, 1/p.
double preaction_mean_age(double p);

// Threshold-policy average cost via the post-action chain.
double dtmc_average_cost(double p, Age threshold, double update_cost);

// Histogram of simulated post-action ages. Bins cover y = 1..threshold+100;
// everything larger goes into one overflow bin.
struct PostActionHistogram {
  static constexpr Age kOverflowMargin = 100;

  double p = 1.0;
  Age threshold = 1;
  std::uint64_t horizon = 0;
  std::vector<std::uint64_t> counts;  // counts[y-1]
  std::uint64_t overflow = 0;
  double mean_cost = 0.0;

  Age last_bin() const { return threshold + kOverflowMargin; }
  double frequency(Age y) const;
  // Total-variation distance to the analytic chain, with the overflow bin
  // compared against the analytic tail mass above last_bin().
  double tv_distance(const PostActionDistribution& analytic) const;
};

// Simulates one user under the threshold policy for `horizon` slots from
// X(0) = 1 and records Y(t) together with the time-average of the
// post-action cost ((1+C) when Y = 1, else Y).
PostActionHistogram empirical_distribution(double p, Age threshold, double update_cost,
                                           std::uint64_t horizon, std::uint64_t seed);

}  // namespace aoi
