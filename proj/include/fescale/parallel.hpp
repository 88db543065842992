#pragma once

// Ordered fan-out/fan-in over a bounded worker count.
//
// parallel_map runs fn over [0, count) on an OpenMP team of at most `workers`
// threads and writes each result into its own slot, so output order is the
// input order regardless of scheduling. serial_map is the reference path the
// tests compare against.

#include <cstddef>
#include <exception>
#include <optional>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fescale {

template <typename Fn>
using map_result_t = std::invoke_result_t<Fn&, std::size_t>;

template <typename Fn>
std::vector<map_result_t<Fn>> serial_map(std::size_t count, Fn&& fn) {
  std::vector<map_result_t<Fn>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(fn(i));
  return out;
}

/// Exceptions are captured per slot and the lowest-index one is rethrown
/// after the team joins, matching what serial_map would have thrown.
template <typename Fn>
std::vector<map_result_t<Fn>> parallel_map(std::size_t count, int workers, Fn&& fn) {
  using R = map_result_t<Fn>;
  if (workers <= 1 || count <= 1) return serial_map(count, fn);

  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<long long>(count);

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (long long i = 0; i < n; ++i) {
    try {
      slots[static_cast<std::size_t>(i)].emplace(fn(static_cast<std::size_t>(i)));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(count);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

inline int hardware_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace fescale
