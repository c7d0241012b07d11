#pragma once

// Brute-force oracles: the single-user problem solved by value iteration over
// its explicit transition table, and the joint N-user problem whose optimal
// policy is the age-optimal benchmark scheduler.
//
// The single-user solvers know nothing about threshold structure; they
// minimize over both actions in every state so the threshold shape of the
// result is something the tests check rather than assume.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoi/core.hpp"
#include "aoi/kernels.hpp"

namespace aoi {

enum Action : std::uint8_t { kIdle = 0, kUpdate = 1 };

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

// The solved policy is not of threshold type.
class StructureError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The threshold sits too close to the truncation age to be trusted.
class TruncationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Joint state space larger than the configured cap.
class StateSpaceTooLarge : public std::invalid_argument {
 public:
  StateSpaceTooLarge(const std::string& what, double estimated_states)
      : std::invalid_argument(what), estimated_states_(estimated_states) {}
  double estimated_states() const { return estimated_states_; }

 private:
  double estimated_states_;
};

struct Transition {
  std::size_t next = 0;
  double prob = 0.0;
};

// Index of (x, lambda) in the single-user state layout.
constexpr std::size_t sub_index(Age x, bool arrival) {
  return 2 * static_cast<std::size_t>(x - 1) + (arrival ? 1 : 0);
}

// Single-user MDP truncated at x_max. Ages that would exceed x_max stay at
// x_max; the immediate cost still charges the untruncated x + 1.
class SubproblemModel {
 public:
  static constexpr Age kMinAgeCap = 10;

  SubproblemModel(double p, double cost, Age x_max);

  double p() const { return p_; }
  double cost() const { return cost_; }
  Age x_max() const { return x_max_; }
  std::size_t num_states() const { return 2 * static_cast<std::size_t>(x_max_); }
  static constexpr std::size_t num_actions() { return 2; }

  double immediate_cost(std::size_t state, Action a) const { return costs_[2 * state + a]; }
  std::span<const Transition> transitions(std::size_t state, Action a) const {
    return {transitions_[2 * state + a].data(), transitions_[2 * state + a].size()};
  }

  // kernels::SweepModel
  std::size_t scratch_size() const { return 0; }
  void prepare(std::size_t, std::span<const double>, std::span<double>) const {}
  kernels::Greedy greedy(std::size_t state, std::span<const double> values, std::span<const double>,
                         double discount, double tie_tolerance) const;

 private:
  double p_;
  double cost_;
  Age x_max_;
  std::vector<double> costs_;                       // [2*state + action]
  std::vector<std::array<Transition, 2>> transitions_;  // [2*state + action]
};

SubproblemModel build_subproblem(double p, double cost, Age x_max);

struct RviConfig {
  double tolerance = 1e-9;
  std::size_t max_iterations = 2'000'000;
  // Weight of the Bellman operator in h <- tau*T h + (1-tau)*h. Values < 1
  // make every chain aperiodic without changing gain or greedy policy.
  double aperiodicity = 0.5;
  // Q-values within this distance count as tied; ties go to idle.
  double tie_tolerance = 1e-6;
  kernels::Backend backend = kernels::default_backend();
};

struct DiscountedSolverConfig {
  double discount = 0.99;
  double tolerance = 1e-9;
  std::size_t max_iterations = 2'000'000;
  double tie_tolerance = 1e-10;
  kernels::Backend backend = kernels::default_backend();
};

struct SolvedPolicy {
  Age x_max = 0;
  std::vector<std::uint8_t> actions;  // indexed by sub_index
  std::vector<double> values;         // bias (average cost) or J_alpha (discounted)
  // Average cost per slot. For the discounted solver this is (1-alpha) J(1,1).
  double gain = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;

  Action action(Age x, bool arrival) const { return static_cast<Action>(actions.at(sub_index(x, arrival))); }
  double value(Age x, bool arrival) const { return values.at(sub_index(x, arrival)); }
};

// Average-cost relative value iteration anchored at (1,1) with span stopping.
SolvedPolicy relative_value_iteration(const SubproblemModel& model, const RviConfig& config = {});

// Value iteration on the alpha-discounted cost, sup-norm stopping.
SolvedPolicy discounted_value_iteration(const SubproblemModel& model, const DiscountedSolverConfig& config);

// Smallest x with action(x,1) = update, after checking the threshold shape.
// Throws StructureError if some (x,0) updates or the (x,1) row is not
// monotone, TruncationError if no threshold lies below x_max/2.
Age extract_threshold(const SolvedPolicy& policy);

// Writes "x lambda action" lines, one per state, after a '#' header.
void write_policy_table(std::ostream& out, const SolvedPolicy& policy);

// Joint MDP over N <= 3 users: state (x_1..x_N, lambda_1..lambda_N),
// action D in {0..N}, per-slot cost the sum of the resulting ages.
class JointModel {
 public:
  static constexpr std::size_t kMaxUsers = 3;
  static constexpr Age kMaxAgeCap = 60;
  static constexpr std::size_t kDefaultStateCap = std::size_t{1} << 21;

  JointModel(std::vector<double> probabilities, Age x_max, std::size_t state_cap = kDefaultStateCap);

  std::size_t num_users() const { return p_.size(); }
  std::span<const double> probabilities() const { return p_; }
  Age x_max() const { return x_max_; }
  std::size_t num_age_tuples() const { return num_tuples_; }
  std::size_t num_flag_patterns() const { return std::size_t{1} << num_users(); }
  std::size_t num_states() const { return num_tuples_ * num_flag_patterns(); }

  // Ages are clipped to x_max before indexing.
  std::size_t tuple_index(std::span<const Age> ages) const;
  std::size_t state_index(std::span<const Age> ages, std::span<const ArrivalFlag> flags) const;
  void decode(std::size_t state, std::span<Age> ages, std::span<ArrivalFlag> flags) const;

  // kernels::SweepModel; scratch holds the arrival-averaged value per age tuple.
  std::size_t scratch_size() const { return num_tuples_; }
  void prepare(std::size_t tuple, std::span<const double> values, std::span<double> scratch) const;
  kernels::Greedy greedy(std::size_t state, std::span<const double> values, std::span<const double> scratch,
                         double discount, double tie_tolerance) const;

  static double estimate_states(std::size_t users, Age x_max);

 private:
  std::vector<double> p_;
  Age x_max_;
  std::size_t num_tuples_;
  std::vector<double> pattern_prob_;  // P[flags = pattern]
};

struct JointPolicy {
  std::vector<double> probabilities;
  Age x_max = 0;
  std::vector<std::uint8_t> actions;  // D per joint state
  double gain = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;

  // Looks up D for the observed state, clipping ages to x_max.
  Decision decide(std::span<const Age> ages, std::span<const ArrivalFlag> flags) const;
};

JointPolicy solve_joint(std::vector<double> probabilities, Age x_max, const RviConfig& config = {},
                        std::size_t state_cap = JointModel::kDefaultStateCap);

// "x_1..x_N lambda_1..lambda_N action" per joint state, with a header line
// "# joint-policy users=N x_max=M gain=G".
void write_joint_policy(std::ostream& out, const JointPolicy& policy);
JointPolicy read_joint_policy(std::istream& in);

}  // namespace aoi
