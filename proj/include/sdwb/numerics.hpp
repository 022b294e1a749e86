#pragma once

#include <Eigen/Dense>
#include <functional>

namespace sdwb {

// Cholesky factor L (lower) of a symmetric PSD matrix, adding an escalating
// diagonal jitter when the plain factorization fails: jitter starts at 1e-12
// and grows by factors of 10 up to 1e-6 * trace/n. An exactly zero matrix
// factors to L = 0. Throws std::runtime_error naming the minimum eigenvalue
// once the jitter budget is exhausted.
Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& k,
                                  double* jitter_used = nullptr);

// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol);

// Integral of the radial function h over R^d:
//   surface(d) * int_0^inf r^{d-1} h(r) dr,
// integrated over doubling windows until the tail stops contributing
// relative to rel_tol. h must decay; throws if no convergence by r = 2^30.
double radial_integral(const std::function<double(double)>& h, int d,
                       double rel_tol = 1e-8);

// Run body(i) for i in [0, count) on the given number of threads
// (threads <= 0 selects the hardware concurrency). The partition is static
// and results must be written by index, so output is order-deterministic.
// The first exception thrown by any body is rethrown on the caller.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

int resolve_threads(int requested);

}  // namespace sdwb
