#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sdwb/fields.hpp"
#include "sdwb/kernels.hpp"

namespace sdwb {

struct SdwbConfig {
  TaperKernel taper;
  double bandwidth_bn = 1.0;
  int replicates_B = 1000;
  std::uint64_t seed = 1;
  double variance_floor = 1e-12;  // studentization guard for degenerate coordinates

  void validate() const;
};

// Lag-window / SDWB covariance matrix estimate.
struct CovEstimate {
  Eigen::MatrixXd matrix;  // p x p symmetric
  double lambda_d = 1.0;   // lambda_n^d scale used
};

struct BootstrapDraws {
  Eigen::VectorXd stats;        // B max-studentized-deviation statistics
  std::vector<int> active_set;  // coordinate subset the max ran over
};

// Factor L with L L' equal to the taper Gram matrix over the sites (up to
// the jitter), computed once per (sites, taper, bandwidth) and shared
// read-only across replicates. Isotropic compactly supported tapers are not
// positive definite in d >= 2, so the Gram matrix can be indefinite beyond
// the jitter budget; the factorization then falls back to the nearest PSD
// matrix (eigendecomposition with negative eigenvalues clipped to zero) and
// reports the clipped magnitude.
struct MultiplierFactor {
  Eigen::MatrixXd chol;
  double jitter = 0.0;
  double clipped = 0.0;  // |most negative eigenvalue| removed; 0 when PSD
};

MultiplierFactor multiplier_factor(const SiteSet& s, const TaperKernel& taper,
                                   double b);

// One draw of the auxiliary Gaussian field W at the sites: mean zero, unit
// variance, Cov(W(s_i), W(s_j)) = a(||s_i - s_j|| / b).
Eigen::VectorXd simulate_multiplier_field(const SiteSet& s,
                                          const TaperKernel& taper, double b,
                                          std::uint64_t seed);

// Y*(s_i) = Ybar + (Y(s_i) - Ybar) w_i, per coordinate.
FieldSample pseudo_observations(const FieldSample& y, const Eigen::VectorXd& w);

// (lambda_d / n^2) * sum_{l1,l2} (Y_l1 - Ybar)(Y_l2 - Ybar)' a(d_{l1,l2}/b);
// equals lambda_d times the variance of the pseudo-observation mean over W.
CovEstimate sdwb_cov(const FieldSample& y, const TaperKernel& taper, double b,
                     double lambda_d);

// B x p matrix of studentized absolute deviation statistics
//   sqrt(lambda_d) |n^{-1} sum_i (Y_ij - Ybar_j) W_i^{(b)}| / sqrt(max(sigma_jj, floor)),
// one row per multiplier replicate. Replicate b draws W from the derived seed
// (seed, "sdwb-replicate", b), so the replicate loop is order-independent.
Eigen::MatrixXd bootstrap_coordinate_stats(const FieldSample& y,
                                           const SdwbConfig& cfg,
                                           double lambda_d,
                                           const Eigen::VectorXd& sigma_diag);

// Max over the active set of the studentized statistics, for each replicate.
// sigma_diag is the Sigma-hat diagonal computed with the same taper/bandwidth.
BootstrapDraws bootstrap_max_stats_with(const FieldSample& y,
                                        const SdwbConfig& cfg, double lambda_d,
                                        const std::vector<int>& active_set,
                                        const Eigen::VectorXd& sigma_diag);

BootstrapDraws bootstrap_max_stats(const FieldSample& y, const SdwbConfig& cfg,
                                   double lambda_d,
                                   const std::vector<int>& active_set);

// ceil(B * level)-th order statistic of the draws (the generalized-inverse
// convention for the bootstrap quantile).
double bootstrap_quantile(const BootstrapDraws& draws, double level);

}  // namespace sdwb
