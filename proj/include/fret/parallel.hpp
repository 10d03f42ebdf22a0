#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace fret::parallel {

namespace detail {
inline std::size_t& override_slot() {
  static std::size_t workers = 0;
  return workers;
}
}  // namespace detail

/// Programmatic worker cap (0 clears it). Takes precedence over FRET_THREADS.
inline void set_worker_count(std::size_t n) { detail::override_slot() = n; }

/// Number of workers used by for_each_index. FRET_THREADS caps the count;
/// worker count affects speed only, never results.
inline std::size_t worker_count() {
  if (detail::override_slot() > 0) return detail::override_slot();
  std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FRET_THREADS"); env != nullptr && *env != '\0') {
    try {
      const long cap = std::stol(env);
      if (cap > 0) hw = std::min<std::size_t>(hw, static_cast<std::size_t>(cap));
    } catch (const std::exception&) {
      // ignored: malformed values fall back to hardware concurrency
    }
  }
  return hw;
}

/// Calls fn(i) for i in [0, n) on up to worker_count() threads using a
/// static block partition. fn must write only to slots owned by i.
/// The exception from the lowest-numbered failing block is rethrown.
template <class Fn>
void for_each_index(std::size_t n, Fn&& fn) {
  if (n == 0) return;
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      pool.emplace_back([&, w, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Maps fn over [0, n) into a vector, in index order.
template <class T, class Fn>
std::vector<T> map_indices(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  for_each_index(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace fret::parallel
