#include "sdwb/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdwb/numerics.hpp"
#include "sdwb/rng.hpp"

namespace sdwb {

void SdwbConfig::validate() const {
  if (!(bandwidth_bn > 0.0))
    throw std::invalid_argument("SdwbConfig: bandwidth must be > 0");
  if (replicates_B < 1)
    throw std::invalid_argument("SdwbConfig: replicate count must be >= 1");
  if (!(variance_floor > 0.0))
    throw std::invalid_argument("SdwbConfig: variance floor must be > 0");
}

MultiplierFactor multiplier_factor(const SiteSet& s, const TaperKernel& taper,
                                   double b) {
  const Eigen::MatrixXd gram = taper_gram(taper, pairwise_distances(s), b);
  MultiplierFactor f;
  try {
    f.chol = jittered_cholesky(gram, &f.jitter);
  } catch (const std::runtime_error&) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    f.clipped = -es.eigenvalues().minCoeff();
    f.chol = es.eigenvectors() *
             es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  return f;
}

Eigen::VectorXd simulate_multiplier_field(const SiteSet& s,
                                          const TaperKernel& taper, double b,
                                          std::uint64_t seed) {
  const MultiplierFactor f = multiplier_factor(s, taper, b);
  Rng rng(seed);
  Eigen::VectorXd z(s.size());
  for (int i = 0; i < s.size(); ++i) z[i] = rng.normal();
  return f.chol * z;
}

FieldSample pseudo_observations(const FieldSample& y, const Eigen::VectorXd& w) {
  if (w.size() != y.n())
    throw std::invalid_argument("pseudo_observations: multiplier length mismatch");
  const Eigen::RowVectorXd mean = y.values.colwise().mean();
  FieldSample out{y.sites, Eigen::MatrixXd(y.n(), y.p())};
  for (int i = 0; i < y.n(); ++i)
    out.values.row(i) = mean + (y.values.row(i) - mean) * w[i];
  return out;
}

CovEstimate sdwb_cov(const FieldSample& y, const TaperKernel& taper, double b,
                     double lambda_d) {
  if (!(b > 0.0)) throw std::invalid_argument("sdwb_cov: bandwidth must be > 0");
  if (!(lambda_d > 0.0)) throw std::invalid_argument("sdwb_cov: lambda_d must be > 0");
  const int n = y.n();
  const Eigen::MatrixXd gram = taper_gram(taper, pairwise_distances(y.sites), b);
  const Eigen::MatrixXd centered =
      y.values.rowwise() - y.values.colwise().mean();
  Eigen::MatrixXd m = centered.transpose() * gram * centered;
  m *= lambda_d / (static_cast<double>(n) * static_cast<double>(n));
  m = ((m + m.transpose()) / 2.0).eval();
  return CovEstimate{std::move(m), lambda_d};
}

Eigen::MatrixXd bootstrap_coordinate_stats(const FieldSample& y,
                                           const SdwbConfig& cfg,
                                           double lambda_d,
                                           const Eigen::VectorXd& sigma_diag) {
  cfg.validate();
  if (sigma_diag.size() != y.p())
    throw std::invalid_argument("bootstrap_coordinate_stats: sigma_diag size mismatch");
  const int n = y.n();
  const int B = cfg.replicates_B;

  const MultiplierFactor factor =
      multiplier_factor(y.sites, cfg.taper, cfg.bandwidth_bn);
  const Eigen::MatrixXd centered =
      y.values.rowwise() - y.values.colwise().mean();

  Eigen::MatrixXd z(n, B);
  for (int b = 0; b < B; ++b) {
    Rng rng(derive_seed(cfg.seed, "sdwb-replicate", static_cast<std::uint64_t>(b)));
    for (int i = 0; i < n; ++i) z(i, b) = rng.normal();
  }

  // (Ybar* - Ybar) per replicate, computed directly from the weighted
  // deviation sum n^{-1} sum_i (Y_i - Ybar) W_i.
  const Eigen::MatrixXd w = factor.chol * z;                      // n x B
  const Eigen::MatrixXd dev_means = centered.transpose() * w / n;  // p x B

  Eigen::VectorXd scale(y.p());
  for (int j = 0; j < y.p(); ++j)
    scale[j] = std::sqrt(std::max(sigma_diag[j], cfg.variance_floor));

  const double root_lambda = std::sqrt(lambda_d);
  Eigen::MatrixXd stats(B, y.p());
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < y.p(); ++j)
      stats(b, j) = root_lambda * std::abs(dev_means(j, b)) / scale[j];
  return stats;
}

BootstrapDraws bootstrap_max_stats_with(const FieldSample& y,
                                        const SdwbConfig& cfg, double lambda_d,
                                        const std::vector<int>& active_set,
                                        const Eigen::VectorXd& sigma_diag) {
  if (active_set.empty())
    throw std::invalid_argument("bootstrap_max_stats: empty active set");
  for (int j : active_set)
    if (j < 0 || j >= y.p())
      throw std::invalid_argument("bootstrap_max_stats: active index out of range");

  const Eigen::MatrixXd coord =
      bootstrap_coordinate_stats(y, cfg, lambda_d, sigma_diag);
  BootstrapDraws draws;
  draws.active_set = active_set;
  draws.stats.resize(coord.rows());
  for (Eigen::Index b = 0; b < coord.rows(); ++b) {
    double m = 0.0;
    for (int j : active_set) m = std::max(m, coord(b, j));
    draws.stats[b] = m;
  }
  return draws;
}

BootstrapDraws bootstrap_max_stats(const FieldSample& y, const SdwbConfig& cfg,
                                   double lambda_d,
                                   const std::vector<int>& active_set) {
  const CovEstimate cov = sdwb_cov(y, cfg.taper, cfg.bandwidth_bn, lambda_d);
  return bootstrap_max_stats_with(y, cfg, lambda_d, active_set,
                                  cov.matrix.diagonal());
}

double bootstrap_quantile(const BootstrapDraws& draws, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("bootstrap_quantile: level must be in (0,1)");
  const Eigen::Index B = draws.stats.size();
  if (B < 1) throw std::invalid_argument("bootstrap_quantile: no draws");
  std::vector<double> sorted(draws.stats.data(), draws.stats.data() + B);
  std::sort(sorted.begin(), sorted.end());
  const auto k = static_cast<Eigen::Index>(
      std::ceil(level * static_cast<double>(B)));
  return sorted[std::clamp<Eigen::Index>(k, 1, B) - 1];
}

}  // namespace sdwb
