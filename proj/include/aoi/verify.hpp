#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "aoi/core.hpp"

namespace aoi {

struct VerifyGrid {
  std::vector<double> ps;
  Age max_threshold = 50;             // closed-form consistency
  std::vector<double> costs;          // consistency and oracle agreement
  Age max_index_age = 50;             // equal-desirability roots
  std::vector<double> sweep_costs;    // indexability
  Age x_max = 200;                    // single-user MDP truncation
  double rvi_tolerance = 1e-9;

  static VerifyGrid small();
  static VerifyGrid full();
  static VerifyGrid named(std::string_view name);  // "small" or "full"
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst_residual = 0.0;
  std::string detail;
};

// I(x, 1) as a function of (x, p); swappable so tests can inject a wrong one.
using ActiveIndexFn = std::function<double(Age, double)>;

CheckResult check_closed_form_consistency(const VerifyGrid& grid, double tolerance = 1e-12);
CheckResult check_equal_desirability(const VerifyGrid& grid, const ActiveIndexFn& index, double tolerance = 1e-9);
CheckResult check_equal_desirability(const VerifyGrid& grid, double tolerance = 1e-9);
CheckResult check_threshold_argmin(const VerifyGrid& grid);
CheckResult check_oracle_agreement(const VerifyGrid& grid, double gain_tolerance = 1e-5);
CheckResult check_indexability(const VerifyGrid& grid);
CheckResult check_discounted_monotone(const VerifyGrid& grid, double discount = 0.99);

std::vector<CheckResult> run_verification(const VerifyGrid& grid);

}  // namespace aoi
