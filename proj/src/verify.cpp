#include "aoi/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "aoi/dtmc.hpp"
#include "aoi/mdp.hpp"
#include "aoi/whittle.hpp"

namespace aoi {

namespace {

std::vector<double> steps(double from, double to, double step) {
  std::vector<double> v;
  const auto count = static_cast<int>(std::lround((to - from) / step));
  for (int k = 0; k <= count; ++k) v.push_back(from + step * k);
  return v;
}

std::vector<double> tenths() {
  std::vector<double> v;
  for (int k = 1; k <= 10; ++k) v.push_back(k / 10.0);
  return v;
}

}  // namespace

VerifyGrid VerifyGrid::small() {
  VerifyGrid g;
  g.ps = {0.2, 0.5, 0.9, 1.0};
  g.max_threshold = 20;
  g.costs = steps(0.0, 10.0, 0.5);
  g.max_index_age = 20;
  g.sweep_costs = steps(0.0, 20.0, 1.0);
  return g;
}

VerifyGrid VerifyGrid::full() {
  VerifyGrid g;
  g.ps = tenths();
  g.max_threshold = 50;
  g.costs = steps(0.0, 25.0, 0.5);
  g.max_index_age = 50;
  g.sweep_costs = steps(0.0, 50.0, 1.0);
  return g;
}

VerifyGrid VerifyGrid::named(std::string_view name) {
  if (name == "small") return small();
  if (name == "full") return full();
  throw std::invalid_argument(fmt::format("unknown grid '{}' (expected small or full)", name));
}

CheckResult check_closed_form_consistency(const VerifyGrid& grid, double tolerance) {
  CheckResult r{"closed_form_consistency", true, 0.0, {}};
  for (const double p : grid.ps) {
    for (Age x = 1; x <= grid.max_threshold; ++x) {
      for (const double c : grid.costs) {
        const double err = std::abs(average_cost(x, {p, c}) - dtmc_average_cost(p, x, c));
        if (err > r.worst_residual) {
          r.worst_residual = err;
          r.detail = fmt::format("p={} X={} C={}", p, x, c);
        }
      }
    }
  }
  r.passed = r.worst_residual <= tolerance;
  return r;
}

CheckResult check_equal_desirability(const VerifyGrid& grid, const ActiveIndexFn& index, double tolerance) {
  CheckResult r{"equal_desirability", true, 0.0, {}};
  for (const double p : grid.ps) {
    for (Age x = 1; x <= grid.max_index_age; ++x) {
      const SubproblemParams at_index{p, index(x, p)};
      const double err = std::abs(average_cost(x, at_index) - average_cost(x + 1, at_index));
      if (err > r.worst_residual) {
        r.worst_residual = err;
        r.detail = fmt::format("p={} x={}", p, x);
      }
    }
  }
  r.passed = r.worst_residual <= tolerance;
  return r;
}

CheckResult check_equal_desirability(const VerifyGrid& grid, double tolerance) {
  return check_equal_desirability(
      grid, [](Age x, double p) { return whittle_index(x, true, p); }, tolerance);
}

CheckResult check_threshold_argmin(const VerifyGrid& grid) {
  // Exhaustive minimization of the threshold cost; among numerically tied
  // minimizers the larger threshold (more idling) wins.
  constexpr Age kSearch = 200;
  constexpr double kTie = 1e-11;
  CheckResult r{"threshold_argmin", true, 0.0, {}};
  std::size_t mismatches = 0;
  for (const double p : grid.ps) {
    for (const double c : grid.costs) {
      Age best = 1;
      double best_cost = average_cost(1, {p, c});
      for (Age x = 2; x <= kSearch; ++x) {
        const double v = average_cost(x, {p, c});
        if (v <= best_cost + kTie) {
          if (v < best_cost) best_cost = v;
          best = x;
        }
      }
      const Age closed = optimal_threshold({p, c});
      if (closed != best) {
        ++mismatches;
        r.worst_residual = std::max(r.worst_residual, static_cast<double>(std::abs(closed - best)));
        r.detail = fmt::format("p={} C={}: closed form {} vs argmin {}", p, c, closed, best);
      }
    }
  }
  r.passed = mismatches == 0;
  return r;
}

CheckResult check_oracle_agreement(const VerifyGrid& grid, double gain_tolerance) {
  CheckResult r{"oracle_agreement", true, 0.0, {}};
  RviConfig config;
  config.tolerance = grid.rvi_tolerance;
  for (const double p : grid.ps) {
    for (const double c : grid.costs) {
      const SolvedPolicy policy = relative_value_iteration(build_subproblem(p, c, grid.x_max), config);
      Age threshold = 0;
      try {
        threshold = extract_threshold(policy);
      } catch (const std::exception& e) {
        r.passed = false;
        r.detail = fmt::format("p={} C={}: {}", p, c, e.what());
        continue;
      }
      const Age expected = optimal_threshold({p, c});
      if (threshold != expected) {
        r.passed = false;
        r.detail = fmt::format("p={} C={}: solver threshold {} vs closed form {}", p, c, threshold, expected);
      }
      const double err = std::abs(policy.gain - average_cost(expected, {p, c}));
      if (err > r.worst_residual) r.worst_residual = err;
    }
  }
  if (r.worst_residual > gain_tolerance) {
    r.passed = false;
    if (r.detail.empty()) r.detail = "gain deviates from the threshold cost";
  }
  return r;
}

CheckResult check_indexability(const VerifyGrid& grid) {
  CheckResult r{"indexability", true, 0.0, {}};
  for (const double p : grid.ps) {
    const auto sets = indexability_sweep(p, grid.sweep_costs, grid.x_max);
    if (!is_nested(sets)) {
      r.passed = false;
      r.detail = fmt::format("idle sets not nested for p={}", p);
    }
    for (const IdleSet& s : sets) {
      for (Age x = 1; x <= grid.x_max; ++x) {
        if (!s.contains({x, false})) {
          r.passed = false;
          r.detail = fmt::format("(x={},0) missing from S({}) at p={}", x, s.cost, p);
        }
      }
    }
  }
  return r;
}

CheckResult check_discounted_monotone(const VerifyGrid& grid, double discount) {
  CheckResult r{"discounted_threshold_monotone", true, 0.0, {}};
  DiscountedSolverConfig config;
  config.discount = discount;
  config.tolerance = 1e-9;
  for (const double p : grid.ps) {
    Age previous = 0;
    for (const double c : grid.costs) {
      const SolvedPolicy policy = discounted_value_iteration(build_subproblem(p, c, grid.x_max), config);
      Age threshold = 0;
      try {
        threshold = extract_threshold(policy);
      } catch (const std::exception& e) {
        r.passed = false;
        r.detail = fmt::format("p={} C={}: {}", p, c, e.what());
        break;
      }
      if (threshold < previous) {
        r.passed = false;
        r.worst_residual = std::max(r.worst_residual, static_cast<double>(previous - threshold));
        r.detail = fmt::format("p={}: threshold fell from {} to {} at C={}", p, previous, threshold, c);
      }
      previous = threshold;
    }
  }
  return r;
}

std::vector<CheckResult> run_verification(const VerifyGrid& grid) {
  return {
      check_closed_form_consistency(grid),
      check_equal_desirability(grid),
      check_threshold_argmin(grid),
      check_oracle_agreement(grid),
      check_indexability(grid),
      check_discounted_monotone(grid),
  };
}

}  // namespace aoi
