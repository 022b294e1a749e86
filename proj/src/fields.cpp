#include "sdwb/fields.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sdwb/numerics.hpp"
#include "sdwb/rng.hpp"

namespace sdwb {

double JumpDist::second_moment() const {
  switch (kind) {
    case Kind::StandardNormal:
      return 1.0;
    case Kind::BoundedUniform:
      return half_width * half_width / 3.0;
  }
  return 0.0;
}

void JumpDist::validate() const {
  if (p < 1) throw std::invalid_argument("JumpDist: p must be >= 1");
  if (kind == Kind::BoundedUniform && !(half_width > 0.0))
    throw std::invalid_argument("JumpDist: half_width must be > 0");
}

double radial_kernel_eval(const RadialKernel& g, double r) {
  return std::visit(
      [r](const auto& kernel) -> double {
        using T = std::decay_t<decltype(kernel)>;
        if constexpr (std::is_same_v<T, ExpKernelSum>) return kernel(r);
        else return matern_cov(kernel, r);
      },
      g);
}

double CompoundPoissonModel::resolved_truncation(double lambda_n) const {
  return truncation_scale > 0.0 ? truncation_scale : (7.0 / 3.0) * lambda_n;
}

void CompoundPoissonModel::validate() const {
  if (p < 1) throw std::invalid_argument("CompoundPoissonModel: p must be >= 1");
  if (!(intensity > 0.0))
    throw std::invalid_argument("CompoundPoissonModel: intensity must be > 0");
  std::visit([](const auto& kernel) { kernel.validate(); }, kernel);
  jump.validate();
  if (jump.p != p)
    throw std::invalid_argument("CompoundPoissonModel: jump dimension mismatch");
  if (truncation_scale < 0.0)
    throw std::invalid_argument("CompoundPoissonModel: negative truncation scale");
}

void FactorModel::validate() const {
  if (p < 1 || k < 1) throw std::invalid_argument("FactorModel: p, k must be >= 1");
  if (loading.rows() != p || loading.cols() != k)
    throw std::invalid_argument("FactorModel: loading matrix must be p x k");
  factor_matern.validate();
  if (noise_sd < 0.0) throw std::invalid_argument("FactorModel: noise_sd must be >= 0");
}

int FieldModel::p() const {
  return std::visit([](const auto& m) { return m.p; }, model);
}

Eigen::VectorXd FieldModel::true_mean() const {
  if (mean_shift) return *mean_shift;
  return Eigen::VectorXd::Zero(p());
}

void FieldModel::validate() const {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianMaternModel>) {
          if (m.p < 1) throw std::invalid_argument("GaussianMaternModel: p must be >= 1");
          m.matern.validate();
        } else {
          m.validate();
        }
      },
      model);
  if (mean_shift && mean_shift->size() != p())
    throw std::invalid_argument("FieldModel: mean_shift dimension mismatch");
}

FieldModel with_drawn_loading(FieldModel m, std::uint64_t seed) {
  auto* factor = std::get_if<FactorModel>(&m.model);
  if (factor && factor->loading.size() == 0) {
    Rng rng(derive_seed(seed, "factor-loading"));
    factor->loading.resize(factor->p, factor->k);
    for (int i = 0; i < factor->p; ++i)
      for (int j = 0; j < factor->k; ++j)
        factor->loading(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

namespace {

void apply_mean_shift(const FieldModel& m, FieldSample& y) {
  if (m.mean_shift) y.values.rowwise() += m.mean_shift->transpose();
}

}  // namespace

FieldSample simulate(const FieldModel& m, const SiteSet& s, std::uint64_t seed) {
  m.validate();
  FieldSample y = std::visit(
      [&](const auto& model) -> FieldSample {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, GaussianMaternModel>) {
          const MaternSpec spec = model.matern;
          return simulate_gaussian_field(
              s, [spec](double r) { return matern_cov(spec, r); }, model.p, seed);
        } else if constexpr (std::is_same_v<T, CompoundPoissonModel>) {
          return simulate_cp_ma(s, model, seed);
        } else {
          return simulate_factor(s, model, seed);
        }
      },
      m.model);
  apply_mean_shift(m, y);
  return y;
}

FieldSample simulate_gaussian_field(const SiteSet& s,
                                    const std::function<double(double)>& cov,
                                    int p, std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("simulate_gaussian_field: p must be >= 1");
  const int n = s.size();
  const Eigen::MatrixXd dist = pairwise_distances(s);
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = cov(0.0);
    for (int j = i + 1; j < n; ++j) {
      const double v = cov(dist(i, j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }

  const Eigen::MatrixXd chol = jittered_cholesky(k);
  Rng rng(seed);
  Eigen::MatrixXd z(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) z(i, j) = rng.normal();
  return FieldSample{s, chol * z};
}

FieldSample simulate_cp_ma(const SiteSet& s, const CompoundPoissonModel& m,
                           std::uint64_t seed) {
  m.validate();
  const int n = s.size();
  const int d = s.dim();
  const double side = m.resolved_truncation(s.lambda_n);

  // The truncation cube must contain the sampling region.
  const double max_coord = s.sites.cwiseAbs().maxCoeff();
  if (side / 2.0 < max_coord - 1e-9)
    throw std::invalid_argument(
        "simulate_cp_ma: truncation region does not contain all sites");
  const Eigen::VectorXd span =
      s.sites.colwise().maxCoeff() - s.sites.colwise().minCoeff();
  if (side < span.norm() - 1e-9)
    throw std::invalid_argument(
        "simulate_cp_ma: truncation scale below the region diameter");

  Rng rng(seed);
  const double volume = std::pow(side, d);
  const std::int64_t knots = rng.poisson(m.intensity * volume);

  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, m.p);
  Eigen::VectorXd x(d);
  Eigen::VectorXd jump(m.p);
  for (std::int64_t kk = 0; kk < knots; ++kk) {
    for (int c = 0; c < d; ++c) x[c] = rng.uniform(-side / 2.0, side / 2.0);
    if (m.jump.kind == JumpDist::Kind::StandardNormal) {
      for (int j = 0; j < m.p; ++j) jump[j] = rng.normal();
    } else {
      for (int j = 0; j < m.p; ++j)
        jump[j] = rng.uniform(-m.jump.half_width, m.jump.half_width);
    }
    for (int i = 0; i < n; ++i) {
      const double r = (s.sites.row(i).transpose() - x).norm();
      values.row(i) += radial_kernel_eval(m.kernel, r) * jump.transpose();
    }
  }
  return FieldSample{s, std::move(values)};
}

FieldSample simulate_factor(const SiteSet& s, const FactorModel& m,
                            std::uint64_t seed) {
  m.validate();
  const MaternSpec spec = m.factor_matern;
  const FieldSample factors = simulate_gaussian_field(
      s, [spec](double r) { return matern_cov(spec, r); }, m.k,
      derive_seed(seed, "factor-fields"));

  Eigen::MatrixXd values = factors.values * m.loading.transpose();
  if (m.noise_sd > 0.0) {
    Rng rng(derive_seed(seed, "factor-noise"));
    for (int j = 0; j < m.p; ++j)
      for (int i = 0; i < s.size(); ++i)
        values(i, j) += m.noise_sd * rng.normal();
  }
  return FieldSample{s, std::move(values)};
}

namespace {

// int_{R^d} M(||x||) dx for the half-integer Matern family; 2*pi*sigma2*a^2
// in d = 2 for all supported nu, quadrature otherwise.
double matern_integral(const MaternSpec& spec, int d) {
  if (d == 2) return 2.0 * std::numbers::pi * spec.sigma2 * spec.a_scale * spec.a_scale;
  return radial_integral([&](double r) { return matern_cov(spec, r); }, d);
}

double exp_sum_integral(const ExpKernelSum& g, int d) {
  if (d == 2) {
    double total = 0.0;
    for (const auto& t : g.terms) total += t.coef / (t.rate * t.rate);
    return 2.0 * std::numbers::pi * total;
  }
  return radial_integral([&](double r) { return g(r); }, d);
}

double exp_sum_square_integral(const ExpKernelSum& g, int d) {
  if (d == 2) {
    double total = 0.0;
    for (const auto& ti : g.terms)
      for (const auto& tj : g.terms) {
        const double rate = ti.rate + tj.rate;
        total += ti.coef * tj.coef / (rate * rate);
      }
    return 2.0 * std::numbers::pi * total;
  }
  return radial_integral([&](double r) { const double v = g(r); return v * v; }, d);
}

}  // namespace

FieldMoments theoretical_moments(const FieldModel& m, int d) {
  m.validate();
  const int p = m.p();
  FieldMoments out;
  out.sigma0.resize(p);
  out.integrated_cov.resize(p);

  std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, GaussianMaternModel>) {
          out.sigma0.setConstant(model.matern.sigma2);
          out.integrated_cov.setConstant(matern_integral(model.matern, d));
        } else if constexpr (std::is_same_v<T, CompoundPoissonModel>) {
          const double e2 = model.jump.second_moment();
          double g1, g2;
          if (const auto* exp_sum = std::get_if<ExpKernelSum>(&model.kernel)) {
            g1 = exp_sum_integral(*exp_sum, d);
            g2 = exp_sum_square_integral(*exp_sum, d);
          } else {
            const auto& spec = std::get<MaternSpec>(model.kernel);
            g1 = matern_integral(spec, d);
            g2 = radial_integral(
                [&](double r) { const double v = matern_cov(spec, r); return v * v; }, d);
          }
          out.sigma0.setConstant(model.intensity * e2 * g2);
          out.integrated_cov.setConstant(model.intensity * e2 * g1 * g1);
        } else {
          const double c0 = model.factor_matern.sigma2;
          const double c_int = matern_integral(model.factor_matern, d);
          for (int j = 0; j < p; ++j) {
            const double load2 = model.loading.row(j).squaredNorm();
            out.sigma0[j] = load2 * c0 + model.noise_sd * model.noise_sd;
            out.integrated_cov[j] = load2 * c_int;
          }
        }
      },
      m.model);
  return out;
}

}  // namespace sdwb
