#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>

#include "sdwb/geometry.hpp"
#include "sdwb/kernels.hpp"

namespace sdwb {

// n x p matrix of observations bound to a site set; row i = Y(s_i)'.
struct FieldSample {
  SiteSet sites;
  Eigen::MatrixXd values;

  int n() const { return static_cast<int>(values.rows()); }
  int p() const { return static_cast<int>(values.cols()); }
};

// Jump distribution of the compound Poisson driver; zero mean by construction.
struct JumpDist {
  enum class Kind { StandardNormal, BoundedUniform };

  Kind kind = Kind::StandardNormal;
  int p = 1;
  double half_width = 1.0;  // BoundedUniform only

  double second_moment() const;
  void validate() const;
};

struct GaussianMaternModel {
  int p = 1;
  MaternSpec matern;
};

using RadialKernel = std::variant<ExpKernelSum, MaternSpec>;

double radial_kernel_eval(const RadialKernel& g, double r);

// Shot-noise moving average: Y(s) = sum_k g(||s - x_k||) J_k with Poisson
// knots x_k of the given intensity on a truncation cube R' = scale * (-1/2,1/2]^d.
// truncation_scale = 0 selects the default (7/3) * lambda_n.
struct CompoundPoissonModel {
  int p = 1;
  double intensity = 1.0;
  RadialKernel kernel = ExpKernelSum{{{1.0, 3.0}}};
  JumpDist jump;
  double truncation_scale = 0.0;

  double resolved_truncation(double lambda_n) const;
  void validate() const;
};

// Y(s) = A F(s) + R(s): k independent Gaussian Matern factor fields mixed by
// the p x k loading matrix, plus i.i.d. N(0, noise_sd^2) measurement noise.
struct FactorModel {
  int p = 1;
  int k = 1;
  Eigen::MatrixXd loading;  // p x k
  MaternSpec factor_matern;
  double noise_sd = 0.0;

  void validate() const;
};

struct FieldModel {
  std::variant<GaussianMaternModel, CompoundPoissonModel, FactorModel> model =
      GaussianMaternModel{};
  std::optional<Eigen::VectorXd> mean_shift;

  int p() const;
  Eigen::VectorXd true_mean() const;
  void validate() const;
};

// Factor models may leave the loading matrix empty; this draws it once from
// Uniform[-1,1] entries so it stays fixed across Monte Carlo replications.
FieldModel with_drawn_loading(FieldModel m, std::uint64_t seed);

// One draw of the field at the given sites; deterministic given the seed.
FieldSample simulate(const FieldModel& m, const SiteSet& s, std::uint64_t seed);

// p independent columns from N(0, K) with K_ij = cov(||s_i - s_j||), realized
// through a jittered symmetric factorization of K.
FieldSample simulate_gaussian_field(const SiteSet& s,
                                    const std::function<double(double)>& cov,
                                    int p, std::uint64_t seed);

FieldSample simulate_cp_ma(const SiteSet& s, const CompoundPoissonModel& m,
                           std::uint64_t seed);

FieldSample simulate_factor(const SiteSet& s, const FactorModel& m,
                            std::uint64_t seed);

// Marginal variance Sigma_jj(0) and integrated covariance int Sigma_jj(x) dx
// per coordinate. Closed forms for exponential kernels and Matern in d = 2,
// adaptive radial quadrature (relative tolerance 1e-8) otherwise.
struct FieldMoments {
  Eigen::VectorXd sigma0;
  Eigen::VectorXd integrated_cov;
};

FieldMoments theoretical_moments(const FieldModel& m, int d = 2);

}  // namespace sdwb
