#include "sdwb/numerics.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

namespace sdwb {

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& k, double* jitter_used) {
  const Eigen::Index n = k.rows();
  if (n != k.cols()) throw std::invalid_argument("jittered_cholesky: matrix not square");

  const double scale = k.trace() / static_cast<double>(n);
  if (scale == 0.0 && k.isZero(0.0)) {
    if (jitter_used) *jitter_used = 0.0;
    return Eigen::MatrixXd::Zero(n, n);
  }

  const double cap = 1e-6 * scale;
  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd shifted = k;
    if (jitter > 0.0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jitter;
      return llt.matrixL();
    }
    if (jitter == 0.0) {
      jitter = 1e-12;
    } else if (jitter < cap) {
      jitter = std::min(jitter * 10.0, cap);
    } else {
      break;
    }
  }

  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  std::ostringstream msg;
  msg << "jittered_cholesky: factorization failed after jitter budget "
      << cap << "; min eigenvalue = " << min_eig;
  throw std::runtime_error(msg.str());
}

namespace {

double simpson_rule(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f, double a, double fa,
                   double b, double fb, double m, double fm, double whole,
                   double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_rule(a, fa, m, fm, flm);
  const double right = simpson_rule(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = simpson_rule(a, fa, b, fb, fm);
  return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

double radial_integral(const std::function<double(double)>& h, int d,
                       double rel_tol) {
  if (d < 1) throw std::invalid_argument("radial_integral: dimension must be >= 1");
  const double surface =
      2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
  auto integrand = [&](double r) { return std::pow(r, d - 1) * h(r); };

  double total = 0.0;
  double lo = 0.0, hi = 1.0;
  int quiet_windows = 0;
  while (hi <= std::ldexp(1.0, 30)) {
    const double piece =
        adaptive_simpson(integrand, lo, hi, rel_tol * (std::abs(total) + 1.0) / 64.0);
    total += piece;
    if (std::abs(piece) <= rel_tol * std::max(std::abs(total), 1e-300)) {
      if (++quiet_windows >= 2) return surface * total;
    } else {
      quiet_windows = 0;
    }
    lo = hi;
    hi *= 2.0;
  }
  throw std::runtime_error("radial_integral: integrand tail did not converge");
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (count <= 0) return;
  const int t = std::min(resolve_threads(threads), count);
  if (t <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += t) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace sdwb
