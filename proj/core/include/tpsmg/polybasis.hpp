#pragma once

#include "tpsmg/dense.hpp"
#include "tpsmg/flops.hpp"

#include <array>
#include <vector>

namespace tpsmg
{

/// Gauss–Lobatto support points of degree k on [0,1], ascending. Requires k >= 1.
std::vector<double> gauss_lobatto_nodes(int degree);

/// Gauss–Legendre rule on [0,1].
struct Quadrature1D
{
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

/// n-point Gauss–Legendre rule on [0,1], exact for polynomials of degree 2n-1.
Quadrature1D gauss_quadrature(int n_points);

/// Lagrange interpolation polynomials on an arbitrary set of distinct nodes.
class LagrangeBasis1D
{
public:
  explicit LagrangeBasis1D(std::vector<double> nodes);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<double> &nodes() const { return nodes_; }

  double value(std::size_t i, double x) const;
  double derivative(std::size_t i, double x) const;

private:
  std::vector<double> nodes_;
  std::vector<double> denominators_;
};

/**
 * Lagrange basis of degree k on the Gauss–Lobatto points of [0,1] together
 * with its values and derivatives tabulated in the points of a quadrature
 * rule and at the interval end points.
 */
class Basis1D
{
public:
  Basis1D(int degree, const Quadrature1D &quadrature);

  int degree() const { return degree_; }
  std::size_t n_dofs() const { return static_cast<std::size_t>(degree_) + 1; }
  std::size_t n_quadrature_points() const { return quadrature_.size(); }

  const std::vector<double> &nodes() const { return lagrange_.nodes(); }
  const Quadrature1D &quadrature() const { return quadrature_; }

  double value(std::size_t i, double x) const { return lagrange_.value(i, x); }
  double derivative(std::size_t i, double x) const { return lagrange_.derivative(i, x); }

  /// φ̂_i(x̂_q), stored as [i * n_q + q].
  const std::vector<double> &shape_values() const { return shape_values_; }
  /// φ̂'_i(x̂_q), stored as [i * n_q + q].
  const std::vector<double> &shape_gradients() const { return shape_gradients_; }

  /// φ̂_i(p) for p ∈ {0, 1}.
  double boundary_value(std::size_t i, int p) const { return boundary_values_[p][i]; }
  /// φ̂'_i(p) for p ∈ {0, 1}.
  double boundary_gradient(std::size_t i, int p) const { return boundary_gradients_[p][i]; }

private:
  int degree_;
  Quadrature1D quadrature_;
  LagrangeBasis1D lagrange_;
  std::vector<double> shape_values_;
  std::vector<double> shape_gradients_;
  std::array<std::vector<double>, 2> boundary_values_;
  std::array<std::vector<double>, 2> boundary_gradients_;
};

/// Kind of an end point of a univariate (sub)interval.
enum class FaceKind
{
  boundary,
  interior
};

/// One side of a univariate factor: physical boundary, or interior with the
/// neighbor's extent orthogonal to the face.
struct FaceSide
{
  FaceKind kind = FaceKind::boundary;
  double neighbor_length = 0.;

  static FaceSide at_boundary() { return {FaceKind::boundary, 0.}; }
  static FaceSide interior(double neighbor_length) { return {FaceKind::interior, neighbor_length}; }
};

/**
 * The one-dimensional matrices whose Kronecker sum is the interior penalty
 * matrix of a Cartesian cell or vertex patch in one coordinate direction.
 *
 * Cell variant: `mass` and `matrix` are (k+1)-square; `laplace`, the face
 * consistency blocks G_{e,p}, point masses M_p and Nitsche sums N_{e,p}
 * are kept for inspection.
 *
 * Patch variant: `mass` and `matrix` are 2(k+1)-square with the left
 * subinterval ("plus") first. The diagonal blocks equal the cell factor of
 * each subinterval with an interior face toward the other one; the
 * off-diagonal blocks couple the two subintervals through their interface.
 */
struct UnivariateFactors
{
  DenseMatrix mass;
  DenseMatrix matrix;

  DenseMatrix laplace;
  std::array<DenseMatrix, 2> consistency;
  std::array<DenseMatrix, 2> point_mass;
  std::array<DenseMatrix, 2> nitsche;
  std::array<double, 2> face_penalty{};

  DenseMatrix block_plus;
  DenseMatrix block_minus;
  DenseMatrix block_plus_minus;
  DenseMatrix block_minus_plus;

  std::array<double, 2> lengths{};
};

/// Univariate factors of a cell of extent h with the given end points.
UnivariateFactors univariate_cell_factors(const Basis1D &basis, double h, FaceSide left,
                                          FaceSide right, double penalty_hat,
                                          FlopCounter *counter = nullptr);

/// Univariate factors of two adjacent subintervals [h_plus | h_minus] of a vertex patch.
UnivariateFactors univariate_patch_factors(const Basis1D &basis, double h_plus, double h_minus,
                                           FaceSide left, FaceSide right, double penalty_hat,
                                           FlopCounter *counter = nullptr);

/// Generalized eigendecomposition Zᵀ A Z = Λ, Zᵀ M Z = I with ascending Λ.
struct EigenPair1D
{
  DenseMatrix vectors;
  std::vector<double> values;
};

/**
 * Solves the symmetric-definite pencil (A, M) by Cholesky reduction of M
 * and cyclic Jacobi rotations on the reduced matrix. Throws NumericalError
 * with "mass not SPD" if the Cholesky factorization breaks down and when
 * Jacobi does not converge within 30 sweeps.
 */
EigenPair1D generalized_sym_eig(const DenseMatrix &a, const DenseMatrix &m,
                                FlopCounter *counter = nullptr);

} // namespace tpsmg
