#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/core.hpp"
#include "aoi/mdp.hpp"

namespace aoi {

// Maps the observed state (ages before the decision plus this slot's arrival
// flags) to a decision. Schedulers may keep state across slots; reset() is
// called once at the start of every run.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string_view name() const = 0;
  virtual Decision decide(const NetworkState& state) = 0;
  virtual void reset(std::uint64_t /*seed*/) {}
};

enum class SchedulerKind { whittle, max_age, round_robin, random, optimal_lookup };

// Accepts the canonical names plus "optimal" for optimal_lookup.
SchedulerKind parse_scheduler_kind(std::string_view name);
std::string_view to_string(SchedulerKind kind);

// Highest Whittle index I(X_i, Lambda_i; p_i); idles when every index is 0;
// equal positive indices go to the smallest user id.
Decision whittle_decide(const NetworkState& state, std::span<const double> p);

class WhittleScheduler final : public Scheduler {
 public:
  explicit WhittleScheduler(std::vector<double> p);
  std::string_view name() const override { return "whittle"; }
  Decision decide(const NetworkState& state) override { return whittle_decide(state, p_); }

 private:
  std::vector<double> p_;
};

// argmax_i X_i * Lambda_i, idle if nobody has an arrival.
class MaxAgeScheduler final : public Scheduler {
 public:
  std::string_view name() const override { return "max_age"; }
  Decision decide(const NetworkState& state) override;
};

// Serves the first user with an arrival in cyclic order after the user served
// last; idle if nobody has an arrival.
class RoundRobinScheduler final : public Scheduler {
 public:
  std::string_view name() const override { return "round_robin"; }
  Decision decide(const NetworkState& state) override;
  void reset(std::uint64_t) override { next_ = 0; }

 private:
  std::size_t next_ = 0;
};

// Uniform choice among users with an arrival; idle if none.
class RandomScheduler final : public Scheduler {
 public:
  std::string_view name() const override { return "random"; }
  Decision decide(const NetworkState& state) override;
  void reset(std::uint64_t seed) override;

 private:
  std::mt19937_64 rng_{0};
};

// Table lookup into a solved joint MDP policy. Ages above the table's x_max
// are clipped before lookup.
class OptimalLookupScheduler final : public Scheduler {
 public:
  explicit OptimalLookupScheduler(std::shared_ptr<const JointPolicy> policy);
  std::string_view name() const override { return "optimal_lookup"; }
  Decision decide(const NetworkState& state) override;

 private:
  std::shared_ptr<const JointPolicy> policy_;
};

// optimal_lookup needs `policy`; the other kinds ignore it.
std::unique_ptr<Scheduler> make_scheduler(SchedulerKind kind, std::span<const double> p,
                                          std::shared_ptr<const JointPolicy> policy = nullptr);

// True when the decision targets a user without an arrival (legal, no effect).
bool is_wasted(Decision decision, std::span<const ArrivalFlag> arrivals);

// Advances ages one slot: X_i <- 1 if D = i and Lambda_i = 1, else X_i + 1.
// The returned state has slot + 1 and no arrivals; the caller installs the
// next slot's flags.
NetworkState step(const NetworkState& state, Decision decision, std::span<const ArrivalFlag> arrivals);

struct SimReport {
  std::uint64_t horizon = 0;
  std::uint64_t seed = 0;
  double time_avg_total_age = 0.0;
  std::vector<double> per_user_avg_age;
  std::vector<std::uint64_t> per_user_update_count;  // updates that delivered a packet
  std::uint64_t wasted_slots = 0;

  bool operator==(const SimReport&) const = default;
};

// Called once per observed slot with the pre-decision state and its decision.
using TraceSink = std::function<void(const NetworkState&, Decision)>;

// Runs `horizon` decisions and reports (1/(T+1)) sum_{t=0}^{T} sum_i X_i(t)
// over the pre-decision ages of slots 0..T. Throws std::logic_error if the
// total age ever drops below N(N+1)/2.
SimReport run(const ArrivalProcess& users, Scheduler& scheduler, std::uint64_t horizon,
              std::span<const Age> initial_ages, const TraceSink& trace = {});

// Initial ages X_i(0) = i.
std::vector<Age> default_initial_ages(std::size_t users);

// Sink writing "slot,D,X_1..X_N,L_1..L_N" rows; emits the header on first use.
TraceSink csv_trace(std::ostream& out);

}  // namespace aoi
