#pragma once

#include "tpsmg/dense.hpp"
#include "tpsmg/flops.hpp"
#include "tpsmg/mesh.hpp"
#include "tpsmg/polybasis.hpp"

#include <functional>
#include <span>

namespace tpsmg
{

using ScalarFunction = std::function<double(const Point &)>;

/**
 * Matrix-free symmetric interior penalty operator for -Δu = f with weak
 * Dirichlet data on one mesh level.
 *
 * Unknowns are numbered cell by cell; inside a cell the (k+1)^d nodal
 * coefficients are lexicographic with direction 0 fastest, so the global
 * index is cell · (k+1)^d + Σ_τ i_τ (k+1)^τ.
 *
 * Uniform Cartesian levels are applied through the Kronecker structure of
 * the univariate cell and interface matrices. Distorted levels use sum
 * factorization with (k+1)-point Gauss rules in every direction and
 * evaluate the multilinear geometry at the quadrature points on the fly.
 */
class DGOperator
{
public:
  DGOperator(const MeshHierarchy &mesh, std::size_t level, int degree, double penalty_hat,
             bool force_general_path = false);

  void set_flop_counter(FlopCounter *counter) { counter_ = counter; }
  FlopCounter *flop_counter() const { return counter_; }

  int dim() const { return dim_; }
  int degree() const { return basis_.degree(); }
  int n_per_direction() const { return n_; }
  std::size_t dofs_per_cell() const { return dofs_per_cell_; }
  std::size_t n_cells() const { return level_.n_cells(); }
  std::size_t n_dofs() const { return n_cells() * dofs_per_cell_; }
  double penalty_hat() const { return penalty_hat_; }
  std::size_t level_index() const { return level_index_; }
  const Level &level() const { return level_; }
  const MeshHierarchy &hierarchy() const { return mesh_; }
  const Basis1D &basis() const { return basis_; }
  bool uses_cartesian_path() const { return cartesian_; }

  /// Length of the cell orthogonal to a face: cell volume over face area.
  double face_length(std::size_t cell, int face) const
  {
    return face_length_[cell * 2 * dim_ + face];
  }

  /// dst = A src.
  void vmult(std::span<double> dst, std::span<const double> src) const;

  /// Floating point operations of one vmult, as counted.
  std::uint64_t vmult_flops() const;

  /// Values at the n_q^d Gauss points from nodal coefficients of one cell.
  void interpolate_to_quad(const double *dofs, double *values) const;
  /// Σ_q φ_i(x_q) w_q for quadrature-point data w of one cell; the adjoint of interpolate_to_quad.
  void integrate_against_basis(const double *values, double *dofs) const;

  /// Gauss points mapped to the reference cell, tensor ordered.
  Point reference_quad_point(std::size_t q) const;

  /// Row-major S[q][i] = φ_i(x_q).
  const std::vector<double> &interpolation_matrix() const { return shape_; }
  /// Row-major D[q][p] = l'_p(x_q), derivative of the Gauss-point Lagrange basis.
  const std::vector<double> &collocation_derivative() const { return colloc_deriv_; }

private:
  void vmult_cartesian(std::span<double> dst, std::span<const double> src) const;
  void vmult_general(std::span<double> dst, std::span<const double> src) const;
  template <int D>
  void vmult_general_dim(std::span<double> dst, std::span<const double> src) const;

  const MeshHierarchy &mesh_;
  const Level &level_;
  std::size_t level_index_;
  int dim_;
  int n_;
  std::size_t dofs_per_cell_;
  double penalty_hat_;
  Basis1D basis_;
  bool cartesian_;
  FlopCounter *counter_ = nullptr;

  std::vector<double> face_length_;

  // general path: multilinear map coefficients x_a = Σ_m A[a][m] Π_{s∈m} x̂_s per cell,
  // tensor quadrature points and weights, and face quadrature points per face
  std::vector<double> map_coefficients_;
  std::vector<Point> quad_points_;
  std::vector<double> quad_weights_;
  std::vector<std::vector<Point>> face_points_;
  std::vector<double> face_weights_;

  std::vector<double> shape_;
  std::vector<double> colloc_deriv_;
  std::array<std::vector<double>, 2> trace_value_;
  std::array<std::vector<double>, 2> trace_derivative_;

  // univariate matrices of the uniform Cartesian path
  DenseMatrix mass_1d_;
  std::array<std::array<DenseMatrix, 2>, 2> cell_1d_;
  DenseMatrix cross_upper_;
  DenseMatrix cross_lower_;
};

/// ∫ f v + Σ_{boundary faces} ∫ (γ_e g v - g ∂_n v) with the operator's penalty.
Vector compute_rhs(const DGOperator &op, const ScalarFunction &f, const ScalarFunction &g);

/// Nodal interpolant: coefficients are the function values at the mapped Gauss–Lobatto nodes.
Vector interpolate(const DGOperator &op, const ScalarFunction &u);

/// Evaluates the discrete function of a cell at a reference point.
double evaluate(const DGOperator &op, std::span<const double> u, std::size_t cell,
                const Point &xhat);

/// ‖u_h - u‖_{L²(Ω)} with a (k+3)-point Gauss rule per direction.
double l2_error(const DGOperator &op, std::span<const double> u_h, const ScalarFunction &u);

/// Largest system handled by the dense oracles.
inline constexpr std::size_t dense_assembly_limit = 20000;

/// Dense matrix by applying the operator to unit vectors.
DenseMatrix assemble_dense(const DGOperator &op);

/// Dense matrix by direct quadrature of the bilinear form with unfactorized basis evaluation.
DenseMatrix assemble_dense_quadrature(const DGOperator &op);

/**
 * Extracts all nonzero couplings with 3^d · (k+1)^d operator applications:
 * cells whose coordinates agree modulo 3 have disjoint face neighborhoods,
 * so one probe recovers one column for each of them.
 */
void probe_couplings(const DGOperator &op,
                     const std::function<void(std::size_t row, std::size_t col, double value)> &sink);

} // namespace tpsmg
