#pragma once

// Shared vocabulary: points, error types, and a deterministic parallel loop.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace monofem {

using Point = std::array<double, 2>;
using Vector = Eigen::VectorXd;

/// Raised when a computation produces or consumes non-finite numbers.
class numeric_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative linear solve fails to reach its tolerance.
class solver_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

inline Point midpoint(const Point& a, const Point& b) {
  return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
}

/// Twice the signed area of the triangle (a, b, c); positive when counter-clockwise.
inline double cross(const Point& a, const Point& b, const Point& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

/// Worker count from MONOFEM_NUM_THREADS (default 1).
inline std::size_t thread_count() {
  if (const char* env = std::getenv("MONOFEM_NUM_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) {
      return static_cast<std::size_t>(n);
    }
  }
  return 1;
}

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker and
/// callers write to per-index slots, so results never depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(workers);
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([begin, end, w, &body, &failures] {
      try {
        for (std::size_t i = begin; i < end; ++i) {
          body(i);
        }
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  for (const auto& failure : failures) {
    if (failure) {
      std::rethrow_exception(failure);
    }
  }
}

}  // namespace monofem
