#include "sdwb/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace sdwb {

double TaperKernel::operator()(double x) const {
  const double t = std::abs(x);
  if (t >= 1.0) return 0.0;
  switch (kind) {
    case TaperKind::Bartlett:
      return 1.0 - t;
    case TaperKind::Parzen:
      if (t <= 0.5) return 1.0 - 6.0 * t * t + 6.0 * t * t * t;
      return 2.0 * (1.0 - t) * (1.0 - t) * (1.0 - t);
  }
  return 0.0;
}

double taper_eval(const TaperKernel& k, double x) { return k(x); }

TaperKind taper_kind_from_name(const std::string& name) {
  if (name == "bartlett") return TaperKind::Bartlett;
  if (name == "parzen") return TaperKind::Parzen;
  throw std::invalid_argument("unknown taper kernel: " + name);
}

std::string taper_kind_name(TaperKind kind) {
  return kind == TaperKind::Bartlett ? "bartlett" : "parzen";
}

void MaternSpec::validate() const {
  const bool half_integer = std::abs(nu - 0.5) < 1e-12 ||
                            std::abs(nu - 1.5) < 1e-12 ||
                            std::abs(nu - 2.5) < 1e-12;
  if (!half_integer)
    throw std::invalid_argument("MaternSpec: nu must be one of 1/2, 3/2, 5/2");
  if (!(a_scale > 0.0)) throw std::invalid_argument("MaternSpec: range must be > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("MaternSpec: sigma2 must be > 0");
}

double matern_cov(const MaternSpec& spec, double r) {
  spec.validate();
  if (r < 0.0) throw std::invalid_argument("matern_cov: r must be >= 0");
  const double t = std::sqrt(2.0 * spec.nu) * r / spec.a_scale;
  if (std::abs(spec.nu - 0.5) < 1e-12) return spec.sigma2 * std::exp(-t);
  if (std::abs(spec.nu - 1.5) < 1e-12)
    return spec.sigma2 * (1.0 + t) * std::exp(-t);
  return spec.sigma2 * (1.0 + t + t * t / 3.0) * std::exp(-t);
}

double ExpKernelSum::operator()(double r) const {
  double g = 0.0;
  for (const Term& term : terms) g += term.coef * std::exp(-term.rate * r);
  return g;
}

void ExpKernelSum::validate() const {
  if (terms.empty()) throw std::invalid_argument("ExpKernelSum: no terms");
  for (const Term& term : terms)
    if (!(term.rate > 0.0))
      throw std::invalid_argument("ExpKernelSum: rates must be > 0");
}

ExpKernelSum carma_kernel(const std::vector<double>& ar_roots,
                          const std::vector<double>& ma_roots) {
  const std::size_t p0 = ar_roots.size();
  const std::size_t q0 = ma_roots.size();
  if (p0 == 0) throw std::invalid_argument("carma_kernel: no autoregressive roots");
  if (q0 >= p0) throw std::invalid_argument("carma_kernel: requires q0 < p0");
  for (std::size_t i = 0; i < p0; ++i) {
    if (!(ar_roots[i] < 0.0))
      throw std::invalid_argument("carma_kernel: autoregressive roots must be negative");
    for (std::size_t j = i + 1; j < p0; ++j)
      if (ar_roots[i] == ar_roots[j])
        throw std::invalid_argument("carma_kernel: repeated autoregressive root");
    for (double xi : ma_roots)
      if (ar_roots[i] * ar_roots[i] == xi * xi)
        throw std::invalid_argument(
            "carma_kernel: lambda_i^2 must differ from xi_j^2");
  }

  ExpKernelSum g;
  g.terms.reserve(p0);
  for (std::size_t i = 0; i < p0; ++i) {
    const double li = ar_roots[i];
    const double li2 = li * li;
    double b = 1.0;
    for (double xi : ma_roots) b *= li2 - xi * xi;
    // a'(lambda_i) with a(z) = prod_j (z^2 - lambda_j^2)
    double a_prime = 2.0 * li;
    for (std::size_t j = 0; j < p0; ++j)
      if (j != i) a_prime *= li2 - ar_roots[j] * ar_roots[j];
    g.terms.push_back({b / a_prime, -li});
  }
  return g;
}

ExpKernelSum carma21_kernel(double lambda1, double lambda2, double xi) {
  if (!(lambda1 < lambda2 && lambda2 < 0.0))
    throw std::invalid_argument("carma21_kernel: requires lambda1 < lambda2 < 0");
  if (xi > 0.0)
    throw std::invalid_argument("carma21_kernel: requires xi <= 0");
  // General coefficients b(lambda_i)/a'(lambda_i), normalized to sum to 1;
  // xi = lambda2 degenerates to the normalized CAR(1) kernel (s = 0).
  const double c1 =
      (lambda1 * lambda1 - xi * xi) /
      (2.0 * lambda1 * (lambda1 * lambda1 - lambda2 * lambda2));
  const double c2 =
      (lambda2 * lambda2 - xi * xi) /
      (2.0 * lambda2 * (lambda2 * lambda2 - lambda1 * lambda1));
  if (c1 + c2 == 0.0)
    throw std::invalid_argument("carma21_kernel: degenerate coefficient sum");
  const double s = c2 / (c1 + c2);
  ExpKernelSum g;
  g.terms = {{1.0 - s, -lambda1}, {s, -lambda2}};
  return g;
}

Eigen::MatrixXd taper_gram(const TaperKernel& k, const Eigen::MatrixXd& dist,
                           double b) {
  if (!(b > 0.0)) throw std::invalid_argument("taper_gram: bandwidth must be > 0");
  const Eigen::Index n = dist.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = k(dist(i, j) / b);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

double psd_check(const TaperKernel& k, const SiteSet& s, double b) {
  const Eigen::MatrixXd g = taper_gram(k, pairwise_distances(s), b);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

}  // namespace sdwb
