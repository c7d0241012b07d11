#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "aoi/mdp.hpp"
#include "aoi/sim.hpp"
#include "aoi/whittle.hpp"

using namespace aoi;

namespace {

double min_threshold_cost(double p, double c, Age search) {
  double best = average_cost(1, {p, c});
  for (Age x = 2; x <= search; ++x) best = std::min(best, average_cost(x, {p, c}));
  return best;
}

}  // namespace

TEST_CASE("sub-problem transitions follow the six listed rows") {
  const double p = 0.3;
  const SubproblemModel m = build_subproblem(p, 2.5, 20);
  for (Age x = 1; x <= 20; ++x) {
    const Age grown = std::min<Age>(x + 1, 20);
    for (const bool arrival : {false, true}) {
      const std::size_t s = sub_index(x, arrival);
      for (const Action a : {kIdle, kUpdate}) {
        const auto row = m.transitions(s, a);
        double total = 0.0;
        for (const Transition& t : row) total += t.prob;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
        const Age next = (a == kUpdate && arrival) ? 1 : grown;
        CHECK(row[0].next == sub_index(next, true));
        CHECK(row[0].prob == p);
        CHECK(row[1].next == sub_index(next, false));
        CHECK(row[1].prob == doctest::Approx(1.0 - p));
      }
    }
  }
}

TEST_CASE("sub-problem immediate cost") {
  const double c = 2.5;
  const SubproblemModel m = build_subproblem(0.3, c, 20);
  for (Age x = 1; x <= 20; ++x) {
    CHECK(m.immediate_cost(sub_index(x, true), kUpdate) == 1.0 + c);
    CHECK(m.immediate_cost(sub_index(x, true), kIdle) == static_cast<double>(x + 1));
    CHECK(m.immediate_cost(sub_index(x, false), kIdle) == static_cast<double>(x + 1));
    // Updating without an arrival pays C and changes nothing.
    CHECK(m.immediate_cost(sub_index(x, false), kUpdate) == static_cast<double>(x + 1) + c);
  }
}

TEST_CASE("sub-problem validation") {
  CHECK_THROWS_AS(build_subproblem(0.5, 1.0, 9), std::invalid_argument);
  CHECK_THROWS_AS(build_subproblem(0.0, 1.0, 50), std::invalid_argument);
}

TEST_CASE("RVI with certain arrivals and free updates") {
  const SolvedPolicy policy = relative_value_iteration(build_subproblem(1.0, 0.0, 50));
  CHECK(std::abs(policy.gain - 1.0) <= 1e-6);
  for (Age x = 1; x <= 50; ++x) CHECK(policy.action(x, true) == kUpdate);
  CHECK(extract_threshold(policy) == 1);
}

TEST_CASE("RVI at p = 0.5, C = 5 reaches the threshold cost") {
  const SolvedPolicy policy = relative_value_iteration(build_subproblem(0.5, 5.0, 200));
  CHECK(extract_threshold(policy) == 3);
  CHECK(std::abs(policy.gain - average_cost(3, {0.5, 5.0})) <= 1e-6);
  CHECK(std::abs(policy.gain - 4.0) <= 1e-6);
  CHECK(policy.residual <= 1e-9);
}

TEST_CASE("RVI gain equals the minimum threshold cost over a grid") {
  for (const double p : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    double previous_gain = -1.0;
    for (int c = 0; c <= 30; ++c) {
      const SolvedPolicy policy = relative_value_iteration(build_subproblem(p, c, 200));
      const Age threshold = extract_threshold(policy);
      CHECK(threshold == optimal_threshold({p, static_cast<double>(c)}));
      CHECK(std::abs(policy.gain - min_threshold_cost(p, c, 150)) <= 1e-5);
      CHECK(policy.gain >= 0.0);
      CHECK(policy.gain >= previous_gain - 1e-9);
      previous_gain = policy.gain;
    }
  }
}

TEST_CASE("RVI gain is nonincreasing in p") {
  for (const double c : {0.0, 3.0, 12.5}) {
    double previous = 1e300;
    for (int k = 1; k <= 10; ++k) {
      const double gain = relative_value_iteration(build_subproblem(k / 10.0, c, 200)).gain;
      CHECK(gain <= previous + 1e-9);
      previous = gain;
    }
  }
}

TEST_CASE("RVI reports non-convergence with its residual") {
  RviConfig config;
  config.max_iterations = 3;
  try {
    relative_value_iteration(build_subproblem(0.3, 5.0, 100), config);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations() == 3);
    CHECK(e.residual() > config.tolerance);
  }
}

TEST_CASE("discounted solver in the myopic limit updates iff x >= C") {
  DiscountedSolverConfig config;
  config.discount = 1e-6;
  for (const double c : {5.0, 5.5, 0.0, 12.0}) {
    const SolvedPolicy policy = discounted_value_iteration(build_subproblem(0.5, c, 60), config);
    for (Age x = 1; x <= 60; ++x) {
      CHECK_MESSAGE((policy.action(x, true) == kUpdate) == (static_cast<double>(x) >= c), "C=" << c << " x=" << x);
      CHECK(policy.action(x, false) == kIdle);
    }
  }
}

TEST_CASE("discounted value is nondecreasing in age") {
  DiscountedSolverConfig config;
  config.discount = 0.95;
  for (const double p : {0.2, 0.7}) {
    const SolvedPolicy policy = discounted_value_iteration(build_subproblem(p, 4.0, 150), config);
    for (const bool arrival : {false, true}) {
      for (Age x = 1; x < 150; ++x) CHECK(policy.value(x + 1, arrival) >= policy.value(x, arrival));
    }
    // And nonincreasing in the arrival flag.
    for (Age x = 1; x <= 150; ++x) CHECK(policy.value(x, true) <= policy.value(x, false));
  }
}

TEST_CASE("discounted solver near alpha = 1 recovers the average-cost threshold") {
  DiscountedSolverConfig config;
  config.discount = 0.999;
  config.tolerance = 1e-8;
  const SolvedPolicy policy = discounted_value_iteration(build_subproblem(0.5, 5.0, 200), config);
  CHECK(extract_threshold(policy) == 3);
}

TEST_CASE("discounted threshold is nondecreasing in C") {
  DiscountedSolverConfig config;
  config.discount = 0.9;
  for (const double p : {0.3, 0.8}) {
    Age previous = 1;
    for (int k = 0; k <= 40; ++k) {
      const Age threshold = extract_threshold(discounted_value_iteration(build_subproblem(p, 0.5 * k, 100), config));
      CHECK(threshold >= previous);
      previous = threshold;
    }
  }
}

TEST_CASE("discounted solver validates alpha") {
  DiscountedSolverConfig config;
  config.discount = 1.0;
  CHECK_THROWS_AS(discounted_value_iteration(build_subproblem(0.5, 1.0, 20), config), std::invalid_argument);
  config.discount = 0.0;
  CHECK_THROWS_AS(discounted_value_iteration(build_subproblem(0.5, 1.0, 20), config), std::invalid_argument);
}

TEST_CASE("threshold extraction rejects non-threshold shapes") {
  SolvedPolicy policy;
  policy.x_max = 20;
  policy.actions.assign(40, kIdle);
  for (Age x = 4; x <= 20; ++x) policy.actions[sub_index(x, true)] = kUpdate;
  CHECK(extract_threshold(policy) == 4);

  SolvedPolicy gap = policy;
  gap.actions[sub_index(7, true)] = kIdle;
  CHECK_THROWS_AS(extract_threshold(gap), StructureError);

  SolvedPolicy no_arrival = policy;
  no_arrival.actions[sub_index(2, false)] = kUpdate;
  CHECK_THROWS_AS(extract_threshold(no_arrival), StructureError);
}

TEST_CASE("threshold extraction flags truncation") {
  SolvedPolicy never;
  never.x_max = 20;
  never.actions.assign(40, kIdle);
  CHECK_THROWS_AS(extract_threshold(never), TruncationError);

  SolvedPolicy late = never;
  for (Age x = 10; x <= 20; ++x) late.actions[sub_index(x, true)] = kUpdate;
  CHECK_THROWS_AS(extract_threshold(late), TruncationError);

  // A real solve whose threshold exceeds x_max/2.
  const SolvedPolicy solved = relative_value_iteration(build_subproblem(0.1, 200.0, 20));
  CHECK_THROWS_AS(extract_threshold(solved), TruncationError);
}

TEST_CASE("policy table format") {
  const SolvedPolicy policy = relative_value_iteration(build_subproblem(0.5, 5.0, 10));
  std::ostringstream out;
  write_policy_table(out, policy);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "# x lambda action");
  int rows = 0;
  Age x = 0;
  int lambda = 0;
  int action = 0;
  while (in >> x >> lambda >> action) {
    CHECK(action == policy.action(x, lambda == 1));
    ++rows;
  }
  CHECK(rows == 20);
}

TEST_CASE("joint MDP with one user updates on every arrival") {
  const JointPolicy policy = solve_joint({0.4}, 30);
  for (Age x = 1; x <= 30; ++x) {
    const std::vector<Age> ages{x};
    CHECK(policy.decide(ages, std::vector<ArrivalFlag>{1}) == Decision::update(1));
    CHECK(policy.decide(ages, std::vector<ArrivalFlag>{0}) == Decision::idle());
  }
  CHECK(std::abs(policy.gain - 1.0 / 0.4) <= 1e-6);
}

TEST_CASE("joint MDP with two certain users alternates") {
  const JointPolicy policy = solve_joint({1.0, 1.0}, 20);
  CHECK(std::abs(policy.gain - 3.0) <= 1e-6);
}

TEST_CASE("joint MDP gain is reproduced by simulating its own policy") {
  auto policy = std::make_shared<const JointPolicy>(solve_joint({0.5, 0.5}, 40));
  CHECK(policy->gain >= 3.0);
  const ArrivalProcess users({0.5, 0.5}, 77);
  OptimalLookupScheduler scheduler(policy);
  const SimReport report = run(users, scheduler, 1'000'000, default_initial_ages(2));
  CHECK(std::abs(report.time_avg_total_age - policy->gain) <= 0.01 * policy->gain);
}

TEST_CASE("joint gain respects the per-slot lower bound") {
  for (const auto& p : std::vector<std::vector<double>>{{0.9, 0.9}, {0.3, 1.0}, {1.0, 1.0, 1.0}, {0.6, 0.6, 0.6}}) {
    const JointPolicy policy = solve_joint(p, p.size() == 3 ? 20 : 40);
    const auto n = p.size();
    CHECK(policy.gain >= static_cast<double>(n * (n + 1) / 2) - 1e-9);
  }
}

TEST_CASE("joint MDP refuses oversized state spaces") {
  CHECK_THROWS_AS(solve_joint({0.5, 0.5, 0.5, 0.5}, 10), StateSpaceTooLarge);
  CHECK_THROWS_AS(solve_joint({0.5, 0.5}, 61), StateSpaceTooLarge);
  try {
    solve_joint({0.5, 0.5, 0.5}, 60, {}, 1000);
    FAIL("expected StateSpaceTooLarge");
  } catch (const StateSpaceTooLarge& e) {
    CHECK(e.estimated_states() == doctest::Approx(60.0 * 60 * 60 * 8));
  }
}

TEST_CASE("joint state indexing round-trips") {
  const JointModel model({0.2, 0.5, 0.9}, 7);
  std::vector<Age> ages(3);
  std::vector<ArrivalFlag> flags(3);
  for (std::size_t s = 0; s < model.num_states(); ++s) {
    model.decode(s, ages, flags);
    CHECK(model.state_index(ages, flags) == s);
  }
}

TEST_CASE("joint policy table survives a write/read cycle") {
  const JointPolicy policy = solve_joint({0.3, 0.7}, 15);
  std::stringstream buffer;
  write_joint_policy(buffer, policy);
  const JointPolicy loaded = read_joint_policy(buffer);
  CHECK(loaded.actions == policy.actions);
  CHECK(loaded.probabilities == policy.probabilities);
  CHECK(loaded.x_max == policy.x_max);
  CHECK(loaded.gain == policy.gain);

  std::istringstream bad("# not a policy\n");
  CHECK_THROWS_AS(read_joint_policy(bad), std::invalid_argument);
  std::istringstream truncated("# joint-policy users=1 x_max=3 gain=1 p=0.5\n1 0 0\n");
  CHECK_THROWS_AS(read_joint_policy(truncated), std::invalid_argument);
}
