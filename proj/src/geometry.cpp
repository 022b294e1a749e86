#include "sdwb/geometry.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sdwb/rng.hpp"

namespace sdwb {

Rect Rect::unit_cube(int d) {
  Rect r;
  r.lo = Eigen::VectorXd::Constant(d, -0.5);
  r.hi = Eigen::VectorXd::Constant(d, 0.5);
  return r;
}

double Rect::volume() const { return (hi - lo).prod(); }

void Rect::validate() const {
  if (lo.size() == 0 || lo.size() != hi.size())
    throw std::invalid_argument("Rect: inconsistent bounds");
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    if (!(lo[k] < hi[k])) throw std::invalid_argument("Rect: empty side");
    if (lo[k] < -0.5 - 1e-12 || hi[k] > 0.5 + 1e-12)
      throw std::invalid_argument("Rect: region must lie inside the unit cube");
  }
}

Density Density::uniform() { return Density{}; }

Density Density::piecewise_constant(std::vector<int> grid,
                                    Eigen::VectorXd raw_weights) {
  Density f;
  f.kind = Kind::PiecewiseConstant;
  f.grid = std::move(grid);
  long cells = 1;
  for (int g : f.grid) {
    if (g < 1) throw std::invalid_argument("Density: grid dimensions must be >= 1");
    cells *= g;
  }
  if (raw_weights.size() != cells)
    throw std::invalid_argument("Density: weight count does not match grid");
  if ((raw_weights.array() < 0.0).any())
    throw std::invalid_argument("Density: negative cell weight");
  const double total = raw_weights.sum();
  if (!(total > 0.0))
    throw std::invalid_argument("Density: nonpositive total mass");
  f.weights = raw_weights / total;
  return f;
}

void Density::validate(int d) const {
  if (kind == Kind::Uniform) return;
  if (static_cast<int>(grid.size()) != d)
    throw std::invalid_argument("Density: grid rank does not match dimension");
  long cells = 1;
  for (int g : grid) cells *= g;
  if (weights.size() != cells)
    throw std::invalid_argument("Density: weight count does not match grid");
  if ((weights.array() < 0.0).any())
    throw std::invalid_argument("Density: negative cell weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("Density: cell weights must sum to 1");
}

double Density::integral_f_squared(const Rect& region) const {
  if (kind == Kind::Uniform) return 1.0 / region.volume();
  double cell_volume = region.volume();
  for (int g : grid) cell_volume /= g;
  return weights.array().square().sum() / cell_volume;
}

void SamplingDesign::validate() const {
  if (!(lambda_n > 0.0)) throw std::invalid_argument("SamplingDesign: lambda_n must be > 0");
  if (d < 1) throw std::invalid_argument("SamplingDesign: dimension must be >= 1");
  if (region.dim() != d)
    throw std::invalid_argument("SamplingDesign: region dimension mismatch");
  region.validate();
  if (!(region.volume() > 0.0))
    throw std::invalid_argument("SamplingDesign: region has no volume");
  density.validate(d);
  if (kappa_inv < 0.0) throw std::invalid_argument("SamplingDesign: kappa_inv must be >= 0");
}

namespace {

// Decompose a row-major cell index into per-dimension indices.
void cell_indices(long cell, const std::vector<int>& grid, std::vector<int>& out) {
  out.resize(grid.size());
  for (int k = static_cast<int>(grid.size()) - 1; k >= 0; --k) {
    out[k] = static_cast<int>(cell % grid[k]);
    cell /= grid[k];
  }
}

}  // namespace

SiteSet generate_sites(const SamplingDesign& design, int n, std::uint64_t seed) {
  design.validate();
  if (n < 1) throw std::invalid_argument("generate_sites: n must be >= 1");

  Rng rng(seed);
  const int d = design.d;
  Eigen::MatrixXd sites(n, d);

  if (design.density.kind == Density::Kind::Uniform) {
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k)
        sites(i, k) = design.lambda_n *
                      rng.uniform(design.region.lo[k], design.region.hi[k]);
  } else {
    const auto& f = design.density;
    Eigen::VectorXd cum(f.weights.size());
    std::partial_sum(f.weights.data(), f.weights.data() + f.weights.size(),
                     cum.data());
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform01();
      long cell = 0;
      while (cell + 1 < cum.size() && cum[cell] < u) ++cell;
      cell_indices(cell, f.grid, idx);
      for (int k = 0; k < d; ++k) {
        const double side =
            (design.region.hi[k] - design.region.lo[k]) / f.grid[k];
        const double lo = design.region.lo[k] + idx[k] * side;
        sites(i, k) = design.lambda_n * rng.uniform(lo, lo + side);
      }
    }
  }

  return SiteSet{std::move(sites), design.lambda_n};
}

Eigen::MatrixXd pairwise_distances(const SiteSet& s) {
  const int n = s.size();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double r = (s.sites.row(i) - s.sites.row(j)).norm();
      dist(i, j) = r;
      dist(j, i) = r;
    }
  return dist;
}

}  // namespace sdwb
