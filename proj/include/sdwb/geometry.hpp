#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sdwb {

// Axis-aligned rectangle, used as the prototype region R0 inside the unit
// cube. The sampling region is lambda_n * R0.
struct Rect {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static Rect unit_cube(int d);

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  void validate() const;
};

// Site density on the prototype region: uniform or piecewise constant on a
// rectangular grid of cells. Piecewise weights are stored as normalized cell
// probabilities (row-major over the grid).
struct Density {
  enum class Kind { Uniform, PiecewiseConstant };

  Kind kind = Kind::Uniform;
  std::vector<int> grid;     // cells per dimension (PiecewiseConstant only)
  Eigen::VectorXd weights;   // cell probabilities, row-major

  static Density uniform();
  static Density piecewise_constant(std::vector<int> grid,
                                    Eigen::VectorXd raw_weights);

  void validate(int d) const;

  // int_{R0} f^2(z) dz; equals 1/|R0| for the uniform density and
  // sum_c w_c^2 / |cell_c| for piecewise-constant cell probabilities w_c.
  double integral_f_squared(const Rect& region) const;
};

struct SamplingDesign {
  double lambda_n = 1.0;           // region scale
  int d = 2;                       // spatial dimension
  Rect region = Rect::unit_cube(2);
  Density density = Density::uniform();
  double kappa_inv = 0.0;          // lambda_n^d / n; 0 encodes kappa = infinity

  void validate() const;
};

struct SiteSet {
  Eigen::MatrixXd sites;  // n x d, row i = coordinates of site i
  double lambda_n = 1.0;

  int size() const { return static_cast<int>(sites.rows()); }
  int dim() const { return static_cast<int>(sites.cols()); }
};

// n i.i.d. draws from the design density on R0, scaled by lambda_n.
// Deterministic given the seed; site order is the indexing contract for all
// downstream matrices.
SiteSet generate_sites(const SamplingDesign& design, int n, std::uint64_t seed);

// n x n symmetric Euclidean distance matrix with zero diagonal.
Eigen::MatrixXd pairwise_distances(const SiteSet& s);

}  // namespace sdwb
