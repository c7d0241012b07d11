#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aoi {

// Age of information in slots. Schedulers only ever observe ages >= 1.
using Age = std::int64_t;

// Arrival indicator Lambda_i(t), 0 or 1. Stored as a byte so flag vectors are
// addressable (std::vector<bool> is not).
using ArrivalFlag = std::uint8_t;

using Slot = std::uint64_t;

// D(t): 0 idles the channel, i >= 1 updates user i (1-based).
struct Decision {
  std::size_t target = 0;

  static constexpr Decision idle() { return Decision{0}; }
  static constexpr Decision update(std::size_t user) { return Decision{user}; }

  constexpr bool is_idle() const { return target == 0; }
  // 0-based index of the updated user; only meaningful when !is_idle().
  constexpr std::size_t user() const { return target - 1; }

  friend constexpr auto operator<=>(const Decision&, const Decision&) = default;
};

struct NetworkState {
  std::vector<Age> ages;
  std::vector<ArrivalFlag> arrivals;
  Slot slot = 0;

  std::size_t num_users() const { return ages.size(); }
  Age total_age() const;

  bool operator==(const NetworkState&) const = default;
};

// Smallest possible total age for n users with pairwise distinct ages.
constexpr Age min_total_age(std::size_t n) {
  return static_cast<Age>(n) * static_cast<Age>(n + 1) / 2;
}

// Throws std::invalid_argument unless 0 < p <= 1.
void validate_probability(double p);

// Throws std::invalid_argument unless every age is >= 1 and no two are equal.
void validate_initial_ages(std::span<const Age> ages);

// SplitMix64 finalizer; used as a counter-based generator below.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Maps 64 random bits to a double uniform on [0, 1).
constexpr double to_unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Independent Bernoulli(p_i) arrivals per user and slot.
//
// The generator is counter based: the flag of user i in slot t is a pure
// function of (seed, i, t). Each user owns its own stream, so adding a user
// leaves every other user's sequence untouched, and any slot can be replayed
// without re-running the ones before it. Schedulers compared under the same
// seed therefore see identical arrivals (common random numbers).
class ArrivalProcess {
 public:
  ArrivalProcess(std::vector<double> probabilities, std::uint64_t seed);

  std::size_t num_users() const { return probabilities_.size(); }
  std::span<const double> probabilities() const { return probabilities_; }
  double probability(std::size_t user) const { return probabilities_.at(user); }
  std::uint64_t seed() const { return seed_; }

  bool arrives(std::size_t user, Slot slot) const;
  void sample(Slot slot, std::span<ArrivalFlag> out) const;

 private:
  std::vector<double> probabilities_;
  std::vector<std::uint64_t> stream_keys_;
  std::uint64_t seed_;
};

std::vector<ArrivalFlag> sample_arrivals(const ArrivalProcess& process, Slot slot);

}  // namespace aoi
