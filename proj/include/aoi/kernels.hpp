#pragma once

// Data-parallel loops behind the value-iteration solvers.
//
// Every kernel has a serial reference path and an OpenMP path. Each index is
// computed independently and the only reductions are min/max, so both paths
// produce bit-identical results; the tests rely on that.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <span>
#include <string_view>

namespace aoi::kernels {

enum class Backend { serial, openmp };

constexpr bool openmp_available() {
#ifdef AOI_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

constexpr Backend default_backend() {
  return openmp_available() ? Backend::openmp : Backend::serial;
}

constexpr std::string_view to_string(Backend b) {
  return b == Backend::serial ? "serial" : "openmp";
}

template <class F>
void for_each_index(Backend backend, std::size_t n, F&& body) {
  if (backend == Backend::openmp) {
    // Exceptions may not cross the parallel region; keep the first and
    // rethrow it on the calling thread.
    const auto count = static_cast<std::ptrdiff_t>(n);
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(aoi_kernel_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  double span() const { return hi - lo; }
  double mid() const { return lo + (hi - lo) / 2.0; }
};

// min and max of f(i) over [0, n).
template <class F>
Range minmax_over(Backend backend, std::size_t n, F&& f) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  if (backend == Backend::openmp) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) reduction(min : lo) reduction(max : hi)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const double v = f(static_cast<std::size_t>(i));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = f(i);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

struct Greedy {
  double value = 0.0;
  std::uint8_t action = 0;
};

// A finite MDP the sweep kernel can evaluate.
//
// prepare() fills per-iteration scratch (e.g. expectations shared by many
// states) and greedy() returns min_a { c(s,a) + discount * E[v(s')] }, taking
// the lowest-numbered action among those within tie_tolerance of the minimum.
template <class M>
concept SweepModel = requires(const M& m, std::size_t i, std::span<const double> values,
                              std::span<double> scratch, std::span<const double> cscratch,
                              double discount, double tie_tolerance) {
  { m.num_states() } -> std::convertible_to<std::size_t>;
  { m.scratch_size() } -> std::convertible_to<std::size_t>;
  m.prepare(i, values, scratch);
  { m.greedy(i, values, cscratch, discount, tie_tolerance) } -> std::same_as<Greedy>;
};

// One synchronous Bellman sweep: best[s], action[s] for every state.
template <SweepModel M>
void bellman_sweep(Backend backend, const M& model, std::span<const double> values, std::span<double> scratch,
                   double discount, double tie_tolerance, std::span<double> best,
                   std::span<std::uint8_t> action) {
  for_each_index(backend, model.scratch_size(), [&](std::size_t i) { model.prepare(i, values, scratch); });
  const std::span<const double> shared = scratch;
  for_each_index(backend, model.num_states(), [&](std::size_t s) {
    const Greedy g = model.greedy(s, values, shared, discount, tie_tolerance);
    best[s] = g.value;
    action[s] = g.action;
  });
}

}  // namespace aoi::kernels
