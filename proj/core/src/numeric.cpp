#include "pwsc/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "pwsc/error.hpp"

namespace pwsc {

namespace {
std::atomic<unsigned> g_default_threads{0};
}

std::vector<std::pair<double, double>> scan_brackets(const ScalarFn& f, double lo, double hi,
                                                     std::size_t n) {
  std::vector<std::pair<double, double>> out;
  if (n == 0 || !(hi > lo)) return out;
  double x_prev = lo;
  double f_prev = f(lo);
  if (f_prev == 0.0) out.emplace_back(lo, lo);
  for (std::size_t i = 1; i <= n; ++i) {
    const double x = i == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
    const double fx = f(x);
    if (fx == 0.0) {
      out.emplace_back(x, x);
    } else if (f_prev != 0.0 && std::signbit(fx) != std::signbit(f_prev)) {
      out.emplace_back(x_prev, x);
    }
    x_prev = x;
    f_prev = fx;
  }
  return out;
}

double solve_bracketed(const ScalarFn& f, double lo, double hi, double x_tol) {
  if (lo == hi) return lo;
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if (std::signbit(f_lo) == std::signbit(f_hi) || !std::isfinite(f_lo) || !std::isfinite(f_hi)) {
    throw Error(ErrorCode::RootFindingFailure, "root is not bracketed");
  }
  std::uintmax_t max_iter = 200;
  auto tol = [x_tol](double a, double b) {
    const double ulp_floor = 4.0 * std::numeric_limits<double>::epsilon() *
                             std::max(std::abs(a), std::abs(b));
    return std::abs(b - a) <= std::max(x_tol, ulp_floor);
  };
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, max_iter);
  if (max_iter >= 200 && !tol(a, b)) {
    throw Error(ErrorCode::RootFindingFailure, "bracketed solve did not converge");
  }
  const double fa = std::abs(f(a));
  const double fb = std::abs(f(b));
  return fa <= fb ? a : b;
}

std::pair<double, double> bisect_predicate(const std::function<bool(double)>& pred, double lo,
                                           double hi, double x_tol) {
  while (std::abs(hi - lo) > x_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (pred(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, hi};
}

unsigned default_threads() {
  const unsigned set = g_default_threads.load();
  if (set > 0) return set;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_threads(unsigned threads) { g_default_threads.store(threads); }

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace pwsc
