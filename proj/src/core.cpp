#include "aoi/core.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/core.h>

namespace aoi {

Age NetworkState::total_age() const {
  return std::accumulate(ages.begin(), ages.end(), Age{0});
}

void validate_probability(double p) {
  // Written so that NaN fails too.
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument(fmt::format("arrival probability must lie in (0, 1], got {}", p));
  }
}

void validate_initial_ages(std::span<const Age> ages) {
  std::vector<Age> sorted(ages.begin(), ages.end());
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty() && sorted.front() < 1) {
    throw std::invalid_argument("initial ages must be >= 1");
  }
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("initial ages must be pairwise distinct");
  }
}

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t stream_key(std::uint64_t seed, std::size_t user) {
  return splitmix64(seed ^ splitmix64(0x5eedULL + static_cast<std::uint64_t>(user)));
}

}  // namespace

ArrivalProcess::ArrivalProcess(std::vector<double> probabilities, std::uint64_t seed)
    : probabilities_(std::move(probabilities)), seed_(seed) {
  if (probabilities_.empty()) {
    throw std::invalid_argument("arrival process needs at least one user");
  }
  stream_keys_.reserve(probabilities_.size());
  for (std::size_t i = 0; i < probabilities_.size(); ++i) {
    validate_probability(probabilities_[i]);
    stream_keys_.push_back(stream_key(seed_, i));
  }
}

bool ArrivalProcess::arrives(std::size_t user, Slot slot) const {
  const std::uint64_t bits = splitmix64(stream_keys_.at(user) + slot * kGolden);
  // p == 1 always arrives since the uniform draw is < 1.
  return to_unit_interval(bits) < probabilities_[user];
}

void ArrivalProcess::sample(Slot slot, std::span<ArrivalFlag> out) const {
  if (out.size() != num_users()) {
    throw std::invalid_argument("arrival buffer size does not match the number of users");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = arrives(i, slot) ? 1 : 0;
  }
}

std::vector<ArrivalFlag> sample_arrivals(const ArrivalProcess& process, Slot slot) {
  std::vector<ArrivalFlag> flags(process.num_users());
  process.sample(slot, flags);
  return flags;
}

}  // namespace aoi
