#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sdwb/inference.hpp"
#include "sdwb/rng.hpp"

using namespace sdwb;

namespace {

SiteSet uniform_sites(int n, double lambda, std::uint64_t seed) {
  SamplingDesign design;
  design.lambda_n = lambda;
  return generate_sites(design, n, seed);
}

FieldSample noise_field(const SiteSet& s, int p, std::uint64_t seed,
                        double sd = 1.0) {
  Rng rng(seed);
  Eigen::MatrixXd values(s.size(), p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < s.size(); ++i) values(i, j) = sd * rng.normal();
  return FieldSample{s, values};
}

const TaperKernel kBartlett{TaperKind::Bartlett};
constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("ci bounds around a scalar estimate") {
  Eigen::VectorXd est(1), sig(1);
  est << 0.3;
  sig << 1.0;
  const JointCI ci = ci_bounds(est, sig, 1.96, 100.0, 0.95);
  CHECK(ci.lower[0] == doctest::Approx(0.104).epsilon(1e-12));
  CHECK(ci.upper[0] == doctest::Approx(0.496).epsilon(1e-12));
}

TEST_CASE("joint confidence intervals") {
  const SiteSet s = uniform_sites(40, 10.0, 1);
  const FieldSample y = noise_field(s, 4, 2);
  SdwbConfig cfg{kBartlett, 2.0, 400, 3};
  const JointCI ci = joint_ci(y, cfg, 100.0, 0.05);
  const Eigen::VectorXd mean = y.values.colwise().mean();
  for (int j = 0; j < 4; ++j) {
    CHECK(ci.lower[j] <= mean[j]);
    CHECK(mean[j] <= ci.upper[j]);
    // width identity: 2 lambda^{-d/2} sqrt(sigma_jj) q
    const double width = 2.0 * std::sqrt(ci.sigma_diag[j] / 100.0) * ci.q_hat;
    CHECK(ci.upper[j] - ci.lower[j] == doctest::Approx(width).epsilon(1e-12));
  }
  CHECK(ci.level == 0.95);
  CHECK_THROWS_AS(joint_ci(y, cfg, 100.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(joint_ci(y, cfg, 100.0, 1.0), std::invalid_argument);
}

TEST_CASE("stacking adjacent differences") {
  const SiteSet s = uniform_sites(5, 5.0, 4);
  SUBCASE("constant panel differences to zero") {
    const FieldSample panel{s, Eigen::MatrixXd::Constant(5, 4, 2.5)};
    const FieldSample d = stack_adjacent_differences(panel);
    CHECK(d.p() == 3);
    CHECK(d.values.isZero(0.0));
  }
  SUBCASE("squares difference to odd numbers") {
    Eigen::MatrixXd values(5, 3);
    for (int i = 0; i < 5; ++i) {
      values(i, 0) = 1.0;
      values(i, 1) = 4.0;
      values(i, 2) = 9.0;
    }
    const FieldSample d = stack_adjacent_differences(FieldSample{s, values});
    CHECK(d.values.col(0).isConstant(3.0));
    CHECK(d.values.col(1).isConstant(5.0));
  }
  SUBCASE("linear trend differences to a constant") {
    Eigen::MatrixXd values(5, 4);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j) values(i, j) = 0.7 * (j + 1) + i;
    const FieldSample d = stack_adjacent_differences(FieldSample{s, values});
    for (int j = 0; j < 3; ++j)
      CHECK((d.values.col(j).array() - 0.7).abs().maxCoeff() <= 1e-12);
  }
  SUBCASE("single column is rejected") {
    CHECK_THROWS_AS(stack_adjacent_differences(
                        FieldSample{s, Eigen::MatrixXd::Zero(5, 1)}),
                    std::invalid_argument);
  }
}

TEST_CASE("stepdown on a zero field rejects nothing") {
  const SiteSet s = uniform_sites(30, 10.0, 5);
  const FieldSample diffs{s, Eigen::MatrixXd::Zero(30, 6)};
  SdwbConfig cfg{kBartlett, 3.0, 200, 6};
  const StepdownResult r = stepdown_changepoint(diffs, cfg, 100.0, 0.05);
  CHECK(r.rejected.empty());
  CHECK(r.steps.size() == 1);
  REQUIRE(r.segments.size() == 1);
  CHECK(r.segments[0] == std::pair<int, int>(1, 7));
}

TEST_CASE("stepdown rejects a dominant coordinate and retests the rest") {
  const SiteSet s = uniform_sites(60, 15.0, 7);
  FieldSample diffs = noise_field(s, 5, 8, 0.3);
  diffs.values.col(2).array() += 50.0;  // far above any bootstrap quantile
  SdwbConfig cfg{kBartlett, 3.0, 400, 9};
  const StepdownResult r = stepdown_changepoint(diffs, cfg, 225.0, 0.05);
  REQUIRE(!r.steps.empty());
  const auto& step1 = r.steps.front();
  CHECK(std::find(step1.rejected.begin(), step1.rejected.end(), 2) !=
        step1.rejected.end());
  if (r.steps.size() > 1) {
    // later steps only retest survivors
    for (int j : r.steps[1].active) CHECK(j != 2);
  }
  CHECK(std::find(r.rejected.begin(), r.rejected.end(), 2) != r.rejected.end());
}

TEST_CASE("segmentation at rejected indices 3 and 7 of 10 time points") {
  const SiteSet s = uniform_sites(80, 15.0, 10);
  FieldSample panel = noise_field(s, 10, 11, 0.05);
  // mean jumps after time 3 and after time 7
  for (int j = 3; j < 10; ++j) panel.values.col(j).array() += 30.0;
  for (int j = 7; j < 10; ++j) panel.values.col(j).array() += 30.0;
  const FieldSample diffs = stack_adjacent_differences(panel);
  SdwbConfig cfg{kBartlett, 3.0, 400, 12};
  const StepdownResult r = stepdown_changepoint(diffs, cfg, 225.0, 0.05);
  REQUIRE(r.rejected == std::vector<int>{2, 6});  // 0-based diff indices
  REQUIRE(r.segments.size() == 3);
  CHECK(r.segments[0] == std::pair<int, int>(1, 3));
  CHECK(r.segments[1] == std::pair<int, int>(4, 7));
  CHECK(r.segments[2] == std::pair<int, int>(8, 10));
}

TEST_CASE("stepdown structural invariants") {
  const SiteSet s = uniform_sites(50, 12.0, 13);
  for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
    FieldSample diffs = noise_field(s, 6, seed);
    diffs.values.col(1).array() += 1.5;
    diffs.values.col(4).array() += 0.8;
    SdwbConfig cfg{kBartlett, 4.0, 300, seed + 100};
    const StepdownResult r = stepdown_changepoint(diffs, cfg, 144.0, 0.10);

    // step rejection sets are disjoint and union to the final set
    std::vector<int> collected;
    for (std::size_t k = 0; k < r.steps.size(); ++k) {
      for (int j : r.steps[k].rejected) {
        CHECK(std::count(collected.begin(), collected.end(), j) == 0);
        collected.push_back(j);
      }
      if (k > 0)
        CHECK(r.steps[k].active.size() < r.steps[k - 1].active.size());
    }
    std::sort(collected.begin(), collected.end());
    CHECK(collected == r.rejected);

    // segments partition the 1-based time axis {1,...,p+1}
    int expected_start = 1;
    for (const auto& [start, end] : r.segments) {
      CHECK(start == expected_start);
      CHECK(end >= start);
      expected_start = end + 1;
    }
    CHECK(expected_start == diffs.p() + 2);
    CHECK(static_cast<int>(r.segments.size()) ==
          static_cast<int>(r.rejected.size()) + 1);
  }
}

TEST_CASE("stepdown is invariant to positive rescaling") {
  const SiteSet s = uniform_sites(40, 10.0, 14);
  FieldSample diffs = noise_field(s, 5, 15);
  diffs.values.col(3).array() += 1.2;
  SdwbConfig cfg{kBartlett, 3.0, 300, 16};
  const StepdownResult r1 = stepdown_changepoint(diffs, cfg, 100.0, 0.05);
  FieldSample scaled{s, 2.5 * diffs.values};
  const StepdownResult r2 = stepdown_changepoint(scaled, cfg, 100.0, 0.05);
  CHECK(r1.rejected == r2.rejected);
  CHECK(r1.segments == r2.segments);
  CHECK(r1.steps.size() == r2.steps.size());
}

TEST_CASE("reused draws give non-increasing step quantiles") {
  const SiteSet s = uniform_sites(50, 12.0, 17);
  FieldSample diffs = noise_field(s, 6, 18);
  diffs.values.col(0).array() += 2.0;
  diffs.values.col(5).array() += 1.0;
  SdwbConfig cfg{kBartlett, 4.0, 400, 19};
  const StepdownResult r =
      stepdown_changepoint(diffs, cfg, 144.0, 0.10, StepdownOptions{true});
  for (std::size_t k = 1; k < r.steps.size(); ++k)
    CHECK(r.steps[k].q_hat <= r.steps[k - 1].q_hat);
}

TEST_CASE("limit covariance oracle") {
  SamplingDesign design;
  design.lambda_n = 25.0;
  design.kappa_inv = 6.25;  // lambda^2 / n at n = 100

  SUBCASE("gaussian matern") {
    FieldModel m;
    m.model = GaussianMaternModel{2, MaternSpec{1.5, 1.0 / std::sqrt(3.0), 1.0}};
    const Eigen::VectorXd limit = limit_cov_oracle(m, design);
    CHECK(limit[0] == doctest::Approx(2.0 * kPi / 3.0 + 6.25).epsilon(1e-12));
    CHECK(limit[1] == limit[0]);
  }
  SUBCASE("compound poisson car(1)") {
    FieldModel m;
    CompoundPoissonModel cp;
    cp.p = 1;
    cp.kernel = ExpKernelSum{{{1.0, 3.0}}};
    cp.jump = JumpDist{JumpDist::Kind::StandardNormal, 1, 1.0};
    m.model = cp;
    const Eigen::VectorXd limit = limit_cov_oracle(m, design);
    const double g1 = 2.0 * kPi / 9.0;
    CHECK(limit[0] ==
          doctest::Approx(g1 * g1 + 6.25 * kPi / 18.0).epsilon(1e-12));
    CHECK(limit[0] == doctest::Approx(1.578218).epsilon(1e-6));
  }
  SUBCASE("kappa_inv = 0 keeps only the integrated-covariance term") {
    SamplingDesign mixed = design;
    mixed.kappa_inv = 0.0;
    FieldModel m;
    m.model = GaussianMaternModel{1, MaternSpec{1.5, 1.0 / std::sqrt(3.0), 1.0}};
    const Eigen::VectorXd limit = limit_cov_oracle(m, mixed);
    CHECK(limit[0] == doctest::Approx(2.0 * kPi / 3.0).epsilon(1e-12));
  }
  SUBCASE("piecewise density scales the integral term by int f^2") {
    SamplingDesign skew = design;
    Eigen::VectorXd w(2);
    w << 3.0, 1.0;
    skew.density = Density::piecewise_constant({2, 1}, w);
    FieldModel m;
    m.model = GaussianMaternModel{1, MaternSpec{1.5, 1.0 / std::sqrt(3.0), 1.0}};
    const double f2 = skew.density.integral_f_squared(skew.region);
    const Eigen::VectorXd limit = limit_cov_oracle(m, skew);
    CHECK(limit[0] ==
          doctest::Approx(2.0 * kPi / 3.0 * f2 + 6.25).epsilon(1e-12));
  }
}
