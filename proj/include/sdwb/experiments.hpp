#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdwb/fields.hpp"
#include "sdwb/geometry.hpp"
#include "sdwb/inference.hpp"

namespace sdwb {

// Full description of a Monte Carlo study; together with its base seed it
// determines every table bit-identically, serial or parallel.
struct StudyConfig {
  std::string name;  // dgp label for output rows
  FieldModel dgp;
  SamplingDesign design;
  int n = 100;
  int p = 10;
  TaperKernel taper;
  std::vector<double> bandwidths;
  int replications = 500;
  int bootstrap_B = 1000;
  std::vector<double> levels = {0.95, 0.99};
  std::uint64_t base_seed = 1;
  double variance_floor = 1e-12;
  bool allow_large = false;  // gate for p >= 400 runs

  void validate() const;
};

struct CoverageRow {
  std::string dgp;
  int n = 0;
  int p = 0;
  double lambda_n = 0.0;
  double b = 0.0;
  double level = 0.0;
  double coverage = 0.0;
  double mc_se = 0.0;
  int replications = 0;
};

using CoverageTable = std::vector<CoverageRow>;

// Empirical joint-CI coverage per (bandwidth, level): the fraction of
// replications whose interval contains the true mean in every coordinate.
// Failed replications abort the study.
CoverageTable coverage_study(const StudyConfig& cfg, int threads = 0);

struct FwerRow {
  double b = 0.0;
  double tau = 0.0;
  double fwer = 0.0;
  double mc_se = 0.0;
  int replications = 0;
};

// Fraction of replications where the stepdown test on stacked adjacent
// differences rejects at least one hypothesis; the dgp mean must be constant
// in time.
std::vector<FwerRow> fwer_study(const StudyConfig& cfg, double tau,
                                int threads = 0);

struct PowerRow {
  double b = 0.0;
  double tau = 0.0;
  double shift = 0.0;
  int shift_time_index = 0;       // 1-based time index where the mean jumps
  double detection_rate = 0.0;    // true change coordinate rejected
  double spurious_rate = 0.0;     // any other coordinate rejected
  double localization = 0.0;      // true coordinate among rejections, given any
  int replications = 0;
};

// Injects a mean shift of the given magnitude from shift_time_index onward
// and scores the stepdown test's detection and localization.
std::vector<PowerRow> power_study(const StudyConfig& cfg, double tau,
                                  double shift, int shift_time_index,
                                  int threads = 0);

struct VarianceRow {
  double b = 0.0;
  int coordinate = 0;
  double mean_sigma_hat = 0.0;
  double oracle = 0.0;
  double rel_deviation = 0.0;
  int replications = 0;
};

// Mean of the Sigma-hat diagonal across replications against the limit
// covariance oracle, per coordinate and bandwidth.
std::vector<VarianceRow> variance_consistency_check(const StudyConfig& cfg,
                                                    int threads = 0);

}  // namespace sdwb
