#pragma once

#include <algorithm>
#include <complex>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gibbslab {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical precondition of an operation does not hold
/// (e.g. Q1 != 1, d^(0) != 0, a non-nonnegative generator).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Incompatible matrix or vector shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed user input (specifiers, rationals, JSON payloads).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A computed quantity violates a fact that must hold exactly
/// (e.g. a moment expected to be real has a large imaginary part).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// An iterative method did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

namespace detail {

/// Worker count, capped by GIBBSLAB_THREADS when set.
inline unsigned thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GIBBSLAB_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs body(i) for i in [0, count). Each index is handled by exactly one
/// worker, so callers writing into slot i get deterministic results.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), count));
  if (workers <= 1 || count < 64) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double ipow(double x, int j) {
  double r = 1.0;
  for (int i = 0; i < j; ++i) r *= x;
  return r;
}

inline cplx ipow(cplx x, int j) {
  cplx r = 1.0;
  for (int i = 0; i < j; ++i) r *= x;
  return r;
}

/// (-i)^j
inline cplx minus_i_pow(int j) {
  static const cplx table[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  return table[((j % 4) + 4) % 4];
}

inline double factorial(int j) {
  double r = 1.0;
  for (int i = 2; i <= j; ++i) r *= i;
  return r;
}

inline long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace detail
}  // namespace gibbslab
