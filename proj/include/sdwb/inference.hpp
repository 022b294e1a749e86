#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sdwb/bootstrap.hpp"
#include "sdwb/fields.hpp"
#include "sdwb/geometry.hpp"

namespace sdwb {

// Joint confidence hyper-rectangle for the mean vector,
//   [Ybar_j +- lambda_d^{-1/2} sqrt(sigma_jj) q_hat].
struct JointCI {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd estimate;
  Eigen::VectorXd sigma_diag;  // floored Sigma-hat diagonal used
  double q_hat = 0.0;
  double level = 0.0;          // 1 - tau
};

// Interval bounds from precomputed pieces; joint_ci composes the pipeline.
JointCI ci_bounds(const Eigen::VectorXd& estimate,
                  const Eigen::VectorXd& sigma_diag, double q_hat,
                  double lambda_d, double level);

JointCI joint_ci(const FieldSample& y, const SdwbConfig& cfg, double lambda_d,
                 double tau);

// Column j of the output = column j+1 - column j of the panel, per site.
FieldSample stack_adjacent_differences(const FieldSample& panel);

struct StepdownStep {
  std::vector<int> active;    // hypotheses tested at this step (0-based)
  double q_hat = 0.0;
  std::vector<int> rejected;  // hypotheses rejected at this step
};

struct StepdownResult {
  std::vector<StepdownStep> steps;
  std::vector<int> rejected;                      // sorted union, 0-based
  std::vector<std::pair<int, int>> segments;      // 1-based [start, end] time pieces
};

struct StepdownOptions {
  // Fresh bootstrap substream per step (default). When reuse_draws is set,
  // step 1's per-coordinate statistics are retained and later quantiles are
  // taken over the shrinking active set of the same draws.
  bool reuse_draws = false;
};

// Stepdown multiple test of H_j: mean of diff column j = 0, with segmentation
// of the time axis at the rejected indices. diffs has p-1 columns for p time
// points; rejection uses strict inequality against the step quantile.
StepdownResult stepdown_changepoint(const FieldSample& diffs,
                                    const SdwbConfig& cfg, double lambda_d,
                                    double tau, StepdownOptions opt = {});

// Diagonal of the limit covariance
//   int Sigma_jj(x) dx * int f^2(z) dz + kappa_inv * Sigma_jj(0)
// for the configured design; the validation oracle for sdwb_cov.
Eigen::VectorXd limit_cov_oracle(const FieldModel& model,
                                 const SamplingDesign& design);

}  // namespace sdwb
