#include "sdwb/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdwb/rng.hpp"

namespace sdwb {

JointCI ci_bounds(const Eigen::VectorXd& estimate,
                  const Eigen::VectorXd& sigma_diag, double q_hat,
                  double lambda_d, double level) {
  JointCI ci;
  ci.estimate = estimate;
  ci.sigma_diag = sigma_diag;
  ci.q_hat = q_hat;
  ci.level = level;
  const Eigen::VectorXd half_width =
      sigma_diag.array().sqrt().matrix() * (q_hat / std::sqrt(lambda_d));
  ci.lower = estimate - half_width;
  ci.upper = estimate + half_width;
  return ci;
}

JointCI joint_ci(const FieldSample& y, const SdwbConfig& cfg, double lambda_d,
                 double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("joint_ci: tau must be in (0,1)");
  const CovEstimate cov = sdwb_cov(y, cfg.taper, cfg.bandwidth_bn, lambda_d);
  Eigen::VectorXd sigma_diag = cov.matrix.diagonal();
  for (int j = 0; j < y.p(); ++j)
    sigma_diag[j] = std::max(sigma_diag[j], cfg.variance_floor);

  std::vector<int> all(y.p());
  for (int j = 0; j < y.p(); ++j) all[j] = j;
  const BootstrapDraws draws =
      bootstrap_max_stats_with(y, cfg, lambda_d, all, sigma_diag);
  const double q_hat = bootstrap_quantile(draws, 1.0 - tau);
  return ci_bounds(y.values.colwise().mean(), sigma_diag, q_hat, lambda_d,
                   1.0 - tau);
}

FieldSample stack_adjacent_differences(const FieldSample& panel) {
  if (panel.p() < 2)
    throw std::invalid_argument("stack_adjacent_differences: need >= 2 columns");
  FieldSample out{panel.sites, Eigen::MatrixXd(panel.n(), panel.p() - 1)};
  for (int j = 0; j + 1 < panel.p(); ++j)
    out.values.col(j) = panel.values.col(j + 1) - panel.values.col(j);
  return out;
}

namespace {

std::vector<std::pair<int, int>> segments_from_rejections(
    const std::vector<int>& rejected, int time_points) {
  std::vector<std::pair<int, int>> segments;
  int start = 1;
  for (int k : rejected) {
    segments.emplace_back(start, k + 1);  // hypothesis k (0-based) = time k+1
    start = k + 2;
  }
  segments.emplace_back(start, time_points);
  return segments;
}

}  // namespace

StepdownResult stepdown_changepoint(const FieldSample& diffs,
                                    const SdwbConfig& cfg, double lambda_d,
                                    double tau, StepdownOptions opt) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("stepdown_changepoint: tau must be in (0,1)");
  if (diffs.p() < 1)
    throw std::invalid_argument("stepdown_changepoint: no hypotheses");
  cfg.validate();

  const int p = diffs.p();
  const CovEstimate cov = sdwb_cov(diffs, cfg.taper, cfg.bandwidth_bn, lambda_d);
  Eigen::VectorXd sigma_diag = cov.matrix.diagonal();
  for (int j = 0; j < p; ++j)
    sigma_diag[j] = std::max(sigma_diag[j], cfg.variance_floor);

  // Test statistics are fixed across steps; only the critical value shrinks.
  const Eigen::RowVectorXd mean = diffs.values.colwise().mean();
  Eigen::VectorXd t_stat(p);
  for (int j = 0; j < p; ++j)
    t_stat[j] = std::sqrt(lambda_d) * std::abs(mean[j]) / std::sqrt(sigma_diag[j]);

  Eigen::MatrixXd reused_stats;  // B x p, reuse_draws mode only
  if (opt.reuse_draws) {
    SdwbConfig step_cfg = cfg;
    step_cfg.seed = derive_seed(cfg.seed, "stepdown-step", 1);
    reused_stats = bootstrap_coordinate_stats(diffs, step_cfg, lambda_d, sigma_diag);
  }

  StepdownResult result;
  std::vector<int> active(p);
  for (int j = 0; j < p; ++j) active[j] = j;

  for (int step = 1; !active.empty(); ++step) {
    double q_hat;
    if (opt.reuse_draws) {
      BootstrapDraws draws;
      draws.active_set = active;
      draws.stats.resize(reused_stats.rows());
      for (Eigen::Index b = 0; b < reused_stats.rows(); ++b) {
        double m = 0.0;
        for (int j : active) m = std::max(m, reused_stats(b, j));
        draws.stats[b] = m;
      }
      q_hat = bootstrap_quantile(draws, 1.0 - tau);
    } else {
      SdwbConfig step_cfg = cfg;
      step_cfg.seed = derive_seed(cfg.seed, "stepdown-step",
                                  static_cast<std::uint64_t>(step));
      const BootstrapDraws draws =
          bootstrap_max_stats_with(diffs, step_cfg, lambda_d, active, sigma_diag);
      q_hat = bootstrap_quantile(draws, 1.0 - tau);
    }

    StepdownStep record;
    record.active = active;
    record.q_hat = q_hat;
    std::vector<int> keep;
    for (int j : active) {
      if (t_stat[j] > q_hat)
        record.rejected.push_back(j);
      else
        keep.push_back(j);
    }
    const bool stop = record.rejected.empty();
    result.steps.push_back(std::move(record));
    if (stop) break;
    active = std::move(keep);
  }

  for (const StepdownStep& s : result.steps)
    result.rejected.insert(result.rejected.end(), s.rejected.begin(),
                           s.rejected.end());
  std::sort(result.rejected.begin(), result.rejected.end());
  result.segments = segments_from_rejections(result.rejected, p + 1);
  return result;
}

Eigen::VectorXd limit_cov_oracle(const FieldModel& model,
                                 const SamplingDesign& design) {
  design.validate();
  const FieldMoments moments = theoretical_moments(model, design.d);
  const double f2 = design.density.integral_f_squared(design.region);
  return moments.integrated_cov * f2 + design.kappa_inv * moments.sigma0;
}

}  // namespace sdwb
