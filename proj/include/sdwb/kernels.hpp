#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sdwb/geometry.hpp"

namespace sdwb {

// Compactly supported taper used for the multiplier covariance and the
// lag-window weights. Both kinds satisfy a(0) = 1, a(x) = 0 for |x| >= 1,
// 0 <= a <= 1 and have nonnegative Fourier transform.
enum class TaperKind { Bartlett, Parzen };

struct TaperKernel {
  TaperKind kind = TaperKind::Bartlett;

  double operator()(double x) const;
};

double taper_eval(const TaperKernel& k, double x);

TaperKind taper_kind_from_name(const std::string& name);
std::string taper_kind_name(TaperKind kind);

// Isotropic Matern covariance, restricted to the half-integer smoothness
// values that admit closed exponential-polynomial forms.
struct MaternSpec {
  double nu = 1.5;       // smoothness, one of 1/2, 3/2, 5/2
  double a_scale = 1.0;  // range
  double sigma2 = 1.0;   // marginal variance

  void validate() const;
};

double matern_cov(const MaternSpec& spec, double r);

// g(r) = sum_i coef_i * exp(-rate_i * r), the moving-average kernel family
// covering exponential and CARMA cases.
struct ExpKernelSum {
  struct Term {
    double coef = 1.0;
    double rate = 1.0;  // > 0
  };
  std::vector<Term> terms;

  double operator()(double r) const;
  void validate() const;
};

// Isotropic CARMA(p0, q0) kernel from autoregressive roots lambda_i
// (distinct, negative) and moving-average roots xi_j (q0 < p0, with
// lambda_i^2 != xi_j^2): with a(z) = prod(z^2 - lambda_i^2) and
// b(z) = prod(z^2 - xi_j^2), term i has coefficient b(lambda_i)/a'(lambda_i)
// and decay rate -lambda_i.
ExpKernelSum carma_kernel(const std::vector<double>& ar_roots,
                          const std::vector<double>& ma_roots);

// Normalized CARMA(2,1) kernel (1-s)e^{l1 r} + s e^{l2 r} with l1 < l2 < 0,
// where s is fixed by the ratio of the general CARMA coefficients.
ExpKernelSum carma21_kernel(double lambda1, double lambda2, double xi);

// n x n matrix of taper values a(dist_ij / b).
Eigen::MatrixXd taper_gram(const TaperKernel& k, const Eigen::MatrixXd& dist,
                           double b);

// Smallest eigenvalue of the taper Gram matrix over the site set.
double psd_check(const TaperKernel& k, const SiteSet& s, double b);

}  // namespace sdwb
