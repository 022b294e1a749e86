#include "sdwb/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sdwb/bootstrap.hpp"
#include "sdwb/numerics.hpp"
#include "sdwb/rng.hpp"

namespace sdwb {

namespace {

std::string bandwidth_tag(const char* stage, double b) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s|b=%.17g", stage, b);
  return buf;
}

double binomial_se(double rate, int reps) {
  return std::sqrt(rate * (1.0 - rate) / reps);
}

double lambda_power_d(const SamplingDesign& design) {
  return std::pow(design.lambda_n, design.d);
}

}  // namespace

void StudyConfig::validate() const {
  dgp.validate();
  design.validate();
  if (n < 1) throw std::invalid_argument("StudyConfig: n must be >= 1");
  if (p != dgp.p())
    throw std::invalid_argument("StudyConfig: p does not match the dgp dimension");
  if (bandwidths.empty())
    throw std::invalid_argument("StudyConfig: bandwidth grid is empty");
  for (double b : bandwidths)
    if (!(b > 0.0)) throw std::invalid_argument("StudyConfig: bandwidths must be > 0");
  if (replications < 1)
    throw std::invalid_argument("StudyConfig: replications must be >= 1");
  if (bootstrap_B < 1)
    throw std::invalid_argument("StudyConfig: bootstrap count must be >= 1");
  for (double level : levels)
    if (!(level > 0.0 && level < 1.0))
      throw std::invalid_argument("StudyConfig: levels must be in (0,1)");
  if (p >= 400 && !allow_large)
    throw std::invalid_argument(
        "StudyConfig: p >= 400 is gated behind allow_large");
  if (p >= 400)
    std::fprintf(stderr,
                 "warning: p = %d study; expect a long runtime at R = %d\n", p,
                 replications);
}

CoverageTable coverage_study(const StudyConfig& cfg, int threads) {
  cfg.validate();
  const double lambda_d = lambda_power_d(cfg.design);
  const Eigen::VectorXd truth = cfg.dgp.true_mean();
  const int nb = static_cast<int>(cfg.bandwidths.size());
  const int nl = static_cast<int>(cfg.levels.size());

  // covered[rep][bi * nl + li]
  std::vector<std::vector<char>> covered(cfg.replications,
                                         std::vector<char>(nb * nl, 0));

  parallel_for(cfg.replications, threads, [&](int rep) {
    const auto urep = static_cast<std::uint64_t>(rep);
    const SiteSet sites =
        generate_sites(cfg.design, cfg.n, derive_seed(cfg.base_seed, "sites", urep));
    const FieldSample y =
        simulate(cfg.dgp, sites, derive_seed(cfg.base_seed, "field", urep));
    const Eigen::RowVectorXd mean = y.values.colwise().mean();

    std::vector<int> all(cfg.p);
    for (int j = 0; j < cfg.p; ++j) all[j] = j;

    for (int bi = 0; bi < nb; ++bi) {
      const double b = cfg.bandwidths[bi];
      SdwbConfig boot{cfg.taper, b, cfg.bootstrap_B,
                      derive_seed(cfg.base_seed, bandwidth_tag("boot", b), urep),
                      cfg.variance_floor};
      const CovEstimate cov = sdwb_cov(y, cfg.taper, b, lambda_d);
      Eigen::VectorXd sigma_diag = cov.matrix.diagonal();
      for (int j = 0; j < cfg.p; ++j)
        sigma_diag[j] = std::max(sigma_diag[j], cfg.variance_floor);
      const BootstrapDraws draws =
          bootstrap_max_stats_with(y, boot, lambda_d, all, sigma_diag);

      for (int li = 0; li < nl; ++li) {
        const double q = bootstrap_quantile(draws, cfg.levels[li]);
        bool ok = true;
        for (int j = 0; j < cfg.p && ok; ++j) {
          const double half = std::sqrt(sigma_diag[j] / lambda_d) * q;
          ok = std::abs(mean[j] - truth[j]) <= half;
        }
        covered[rep][bi * nl + li] = ok ? 1 : 0;
      }
    }
  });

  CoverageTable table;
  for (int bi = 0; bi < nb; ++bi)
    for (int li = 0; li < nl; ++li) {
      int hits = 0;
      for (int rep = 0; rep < cfg.replications; ++rep)
        hits += covered[rep][bi * nl + li];
      CoverageRow row;
      row.dgp = cfg.name;
      row.n = cfg.n;
      row.p = cfg.p;
      row.lambda_n = cfg.design.lambda_n;
      row.b = cfg.bandwidths[bi];
      row.level = cfg.levels[li];
      row.coverage = static_cast<double>(hits) / cfg.replications;
      row.mc_se = binomial_se(row.coverage, cfg.replications);
      row.replications = cfg.replications;
      table.push_back(std::move(row));
    }
  return table;
}

namespace {

void require_time_constant_mean(const FieldModel& dgp) {
  if (!dgp.mean_shift) return;
  const Eigen::VectorXd& mu = *dgp.mean_shift;
  for (Eigen::Index j = 1; j < mu.size(); ++j)
    if (mu[j] != mu[0])
      throw std::invalid_argument("fwer_study: dgp mean must be constant in time");
}

// Per-replication stepdown rejection sets for each bandwidth.
std::vector<std::vector<std::vector<int>>> stepdown_replications(
    const StudyConfig& cfg, double tau, const FieldModel& dgp, int threads) {
  const double lambda_d = lambda_power_d(cfg.design);
  std::vector<std::vector<std::vector<int>>> rejections(
      cfg.replications,
      std::vector<std::vector<int>>(cfg.bandwidths.size()));

  parallel_for(cfg.replications, threads, [&](int rep) {
    const auto urep = static_cast<std::uint64_t>(rep);
    const SiteSet sites =
        generate_sites(cfg.design, cfg.n, derive_seed(cfg.base_seed, "sites", urep));
    const FieldSample panel =
        simulate(dgp, sites, derive_seed(cfg.base_seed, "field", urep));
    const FieldSample diffs = stack_adjacent_differences(panel);

    for (std::size_t bi = 0; bi < cfg.bandwidths.size(); ++bi) {
      const double b = cfg.bandwidths[bi];
      SdwbConfig boot{cfg.taper, b, cfg.bootstrap_B,
                      derive_seed(cfg.base_seed, bandwidth_tag("stepdown", b), urep),
                      cfg.variance_floor};
      rejections[rep][bi] =
          stepdown_changepoint(diffs, boot, lambda_d, tau).rejected;
    }
  });
  return rejections;
}

}  // namespace

std::vector<FwerRow> fwer_study(const StudyConfig& cfg, double tau, int threads) {
  cfg.validate();
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("fwer_study: tau must be in (0,1)");
  require_time_constant_mean(cfg.dgp);

  const auto rejections = stepdown_replications(cfg, tau, cfg.dgp, threads);
  std::vector<FwerRow> rows;
  for (std::size_t bi = 0; bi < cfg.bandwidths.size(); ++bi) {
    int any = 0;
    for (int rep = 0; rep < cfg.replications; ++rep)
      any += rejections[rep][bi].empty() ? 0 : 1;
    FwerRow row;
    row.b = cfg.bandwidths[bi];
    row.tau = tau;
    row.fwer = static_cast<double>(any) / cfg.replications;
    row.mc_se = binomial_se(row.fwer, cfg.replications);
    row.replications = cfg.replications;
    rows.push_back(row);
  }
  return rows;
}

std::vector<PowerRow> power_study(const StudyConfig& cfg, double tau,
                                  double shift, int shift_time_index,
                                  int threads) {
  cfg.validate();
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("power_study: tau must be in (0,1)");
  if (shift_time_index < 2 || shift_time_index > cfg.p)
    throw std::invalid_argument(
        "power_study: shift_time_index must be in [2, p]");

  FieldModel shifted = cfg.dgp;
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(cfg.p);
  for (int j = shift_time_index - 1; j < cfg.p; ++j) mu[j] = shift;
  shifted.mean_shift = mu;

  const int true_coord = shift_time_index - 2;  // 0-based diff column
  const auto rejections = stepdown_replications(cfg, tau, shifted, threads);

  std::vector<PowerRow> rows;
  for (std::size_t bi = 0; bi < cfg.bandwidths.size(); ++bi) {
    int detected = 0, spurious = 0, any = 0, localized = 0;
    for (int rep = 0; rep < cfg.replications; ++rep) {
      const auto& rej = rejections[rep][bi];
      const bool hit =
          std::find(rej.begin(), rej.end(), true_coord) != rej.end();
      detected += hit ? 1 : 0;
      spurious += (rej.size() > (hit ? 1u : 0u)) ? 1 : 0;
      if (!rej.empty()) {
        ++any;
        localized += hit ? 1 : 0;
      }
    }
    PowerRow row;
    row.b = cfg.bandwidths[bi];
    row.tau = tau;
    row.shift = shift;
    row.shift_time_index = shift_time_index;
    row.detection_rate = static_cast<double>(detected) / cfg.replications;
    row.spurious_rate = static_cast<double>(spurious) / cfg.replications;
    row.localization = any == 0 ? 1.0 : static_cast<double>(localized) / any;
    row.replications = cfg.replications;
    rows.push_back(row);
  }
  return rows;
}

std::vector<VarianceRow> variance_consistency_check(const StudyConfig& cfg,
                                                    int threads) {
  cfg.validate();
  const double lambda_d = lambda_power_d(cfg.design);
  const Eigen::VectorXd oracle = limit_cov_oracle(cfg.dgp, cfg.design);
  const int nb = static_cast<int>(cfg.bandwidths.size());

  std::vector<Eigen::MatrixXd> diag(cfg.replications);
  parallel_for(cfg.replications, threads, [&](int rep) {
    const auto urep = static_cast<std::uint64_t>(rep);
    const SiteSet sites =
        generate_sites(cfg.design, cfg.n, derive_seed(cfg.base_seed, "sites", urep));
    const FieldSample y =
        simulate(cfg.dgp, sites, derive_seed(cfg.base_seed, "field", urep));
    Eigen::MatrixXd d(nb, cfg.p);
    for (int bi = 0; bi < nb; ++bi)
      d.row(bi) =
          sdwb_cov(y, cfg.taper, cfg.bandwidths[bi], lambda_d).matrix.diagonal();
    diag[rep] = std::move(d);
  });

  std::vector<VarianceRow> rows;
  for (int bi = 0; bi < nb; ++bi)
    for (int j = 0; j < cfg.p; ++j) {
      double mean = 0.0;
      for (int rep = 0; rep < cfg.replications; ++rep)
        mean += diag[rep](bi, j);
      mean /= cfg.replications;
      VarianceRow row;
      row.b = cfg.bandwidths[bi];
      row.coordinate = j;
      row.mean_sigma_hat = mean;
      row.oracle = oracle[j];
      row.rel_deviation =
          oracle[j] == 0.0 ? mean : (mean - oracle[j]) / oracle[j];
      row.replications = cfg.replications;
      rows.push_back(row);
    }
  return rows;
}

}  // namespace sdwb
