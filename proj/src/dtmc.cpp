#include "aoi/dtmc.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace aoi {

GeometricAgeDistribution::GeometricAgeDistribution(double p) : p_(p) {
  validate_probability(p);
}

double GeometricAgeDistribution::pmf(Age i) const {
  if (i < 1) return 0.0;
  return p_ * std::pow(1.0 - p_, static_cast<double>(i - 1));
}

double GeometricAgeDistribution::tail_above(Age i) const {
  if (i < 1) return 1.0;
  return std::pow(1.0 - p_, static_cast<double>(i));
}

PostActionDistribution::PostActionDistribution(double p, Age threshold) : p_(p), threshold_(threshold) {
  validate_probability(p);
  if (threshold < 1) {
    throw std::invalid_argument(fmt::format("threshold must be >= 1, got {}", threshold));
  }
  head_ = 1.0 / (static_cast<double>(threshold) + (1.0 - p) / p);
}

double PostActionDistribution::pmf(Age i) const {
  if (i < 1) return 0.0;
  if (i <= threshold_) return head_;
  return head_ * std::pow(1.0 - p_, static_cast<double>(i - threshold_));
}

double PostActionDistribution::tail_above(Age i) const {
  const double q = 1.0 - p_;
  if (i < 1) return 1.0;
  if (i < threshold_) {
    // Remaining head plus the whole tail.
    return head_ * (static_cast<double>(threshold_ - i) + q / p_);
  }
  // sum_{k > i - X} q^k = q^(i-X+1) / p
  return head_ * std::pow(q, static_cast<double>(i - threshold_ + 1)) / p_;
}

double PostActionDistribution::average_cost(double update_cost) const {
  const double q = 1.0 - p_;
  const double x = static_cast<double>(threshold_);
  // sum_{i=2}^{X} i = X(X+1)/2 - 1
  const double head_ages = x * (x + 1.0) / 2.0 - 1.0;
  // sum_{k>=1} (X+k) q^k = X q/(1-q) + q/(1-q)^2
  const double tail_ages = x * q / p_ + q / (p_ * p_);
  return head_ * ((1.0 + update_cost) + head_ages + tail_ages);
}

double preaction_mean_age(double p) {
  return GeometricAgeDistribution(p).mean();
}

double dtmc_average_cost(double p, Age threshold, double update_cost) {
  return PostActionDistribution(p, threshold).average_cost(update_cost);
}

double PostActionHistogram::frequency(Age y) const {
  if (horizon == 0 || y < 1 || y > last_bin()) return 0.0;
  return static_cast<double>(counts[static_cast<std::size_t>(y - 1)]) / static_cast<double>(horizon);
}

double PostActionHistogram::tv_distance(const PostActionDistribution& analytic) const {
  double total = 0.0;
  for (Age y = 1; y <= last_bin(); ++y) {
    total += std::abs(frequency(y) - analytic.pmf(y));
  }
  const double empirical_overflow = static_cast<double>(overflow) / static_cast<double>(horizon);
  total += std::abs(empirical_overflow - analytic.tail_above(last_bin()));
  return total / 2.0;
}

PostActionHistogram empirical_distribution(double p, Age threshold, double update_cost,
                                           std::uint64_t horizon, std::uint64_t seed) {
  if (threshold < 1) throw std::invalid_argument("threshold must be >= 1");
  if (horizon == 0) throw std::invalid_argument("horizon must be positive");
  const ArrivalProcess arrivals({p}, seed);

  PostActionHistogram hist;
  hist.p = p;
  hist.threshold = threshold;
  hist.horizon = horizon;
  hist.counts.assign(static_cast<std::size_t>(hist.last_bin()), 0);

  Age x = 1;
  double cost_sum = 0.0;
  for (Slot t = 0; t < horizon; ++t) {
    const bool update = arrivals.arrives(0, t) && x >= threshold;
    const Age y = update ? 1 : x + 1;
    cost_sum += y == 1 ? 1.0 + update_cost : static_cast<double>(y);
    if (y <= hist.last_bin()) {
      ++hist.counts[static_cast<std::size_t>(y - 1)];
    } else {
      ++hist.overflow;
    }
    x = y;
  }
  hist.mean_cost = cost_sum / static_cast<double>(horizon);
  return hist;
}

}  // namespace aoi
