#include <algorithm>

#include <doctest.h>

#include "aoi/verify.hpp"

using namespace aoi;

TEST_CASE("small grid passes every check") {
  const VerifyGrid grid = VerifyGrid::small();
  CHECK(std::find(grid.ps.begin(), grid.ps.end(), 1.0) != grid.ps.end());
  for (const CheckResult& r : run_verification(grid)) {
    CHECK_MESSAGE(r.passed, r.name << ": " << r.detail);
  }
}

TEST_CASE("a wrong index formula fails the equal-desirability check") {
  const VerifyGrid grid = VerifyGrid::small();
  // Missing the -x/2 term.
  const CheckResult r =
      check_equal_desirability(grid, [](Age x, double p) { return 0.5 * x * x + x / p; });
  CHECK_FALSE(r.passed);
  CHECK(r.worst_residual > 1e-3);
}

TEST_CASE("the p = 1 boundary on its own") {
  VerifyGrid grid = VerifyGrid::small();
  grid.ps = {1.0};
  for (const CheckResult& r : run_verification(grid)) CHECK_MESSAGE(r.passed, r.name);
}

TEST_CASE("grid names") {
  CHECK(VerifyGrid::named("full").ps.size() == 10);
  CHECK(VerifyGrid::named("full").costs.size() == 51);
  CHECK_THROWS_AS(VerifyGrid::named("huge"), std::invalid_argument);
}
