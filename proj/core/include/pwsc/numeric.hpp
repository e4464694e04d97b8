#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace pwsc {

using ScalarFn = std::function<double(double)>;

// Sub-intervals of [lo, hi] (n equal cells) on which f changes sign. Exact
// zeros at grid nodes are reported as degenerate brackets [x, x].
std::vector<std::pair<double, double>> scan_brackets(const ScalarFn& f, double lo, double hi,
                                                     std::size_t n);

// Root of f in [lo, hi] with f(lo) f(hi) <= 0, to an absolute x-tolerance.
// Throws Error(RootFindingFailure) on an invalid bracket or iteration overrun.
double solve_bracketed(const ScalarFn& f, double lo, double hi, double x_tol = 1e-14);

// Bisection on a predicate that is true at lo and false at hi. Returns the
// final bracket [a, b] with pred(a) true, pred(b) false and b - a <= x_tol.
std::pair<double, double> bisect_predicate(const std::function<bool(double)>& pred, double lo,
                                           double hi, double x_tol);

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware).
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

// Thread count used when a caller passes 0.
unsigned default_threads();
void set_default_threads(unsigned threads);

}  // namespace pwsc
