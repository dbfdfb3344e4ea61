#pragma once

#include "tpsmg/dgop.hpp"
#include "tpsmg/polybasis.hpp"

#include <memory>

namespace tpsmg
{

/**
 * (Z_{d-1} ⊗ … ⊗ Z_0) u for an order-d tensor with extent n in every
 * direction, by d one-dimensional contractions. `transpose` applies the
 * transposed factors. All factors must be n × n.
 */
void kronecker_matvec(const std::vector<const DenseMatrix *> &factors, std::span<const double> u,
                      std::span<double> out, bool transpose = false, FlopCounter *counter = nullptr);

enum class SubdomainKind
{
  cell,
  vertex_patch
};

enum class SolverProvenance
{
  exact,
  surrogate
};

/**
 * Inverse of a separable subdomain matrix Σ_τ M ⊗ … ⊗ A^(τ) ⊗ … ⊗ M through
 * the univariate generalized eigenpairs: A^{-1} = Z Λ^{-1} Zᵀ with
 * Z = Z_{d-1} ⊗ … ⊗ Z_0 and Λ(i) = Σ_τ λ^(τ)_{i_τ}.
 *
 * Only the eigenpairs are needed to apply the inverse. The univariate mass
 * and stiffness factors are kept on request for apply() and dense_matrix().
 */
class LocalSolver
{
public:
  LocalSolver(const std::vector<UnivariateFactors> &factors, SubdomainKind kind,
              SolverProvenance provenance, bool keep_factors = true,
              FlopCounter *setup_counter = nullptr);

  int dim() const { return dim_; }
  /// Extent per direction: k+1 for cells, 2(k+1) for vertex patches.
  int extent() const { return extent_; }
  std::size_t size() const { return size_; }
  SubdomainKind kind() const { return kind_; }
  SolverProvenance provenance() const { return provenance_; }

  /// Row-major Z^(τ) (extent × extent) and ascending λ^(τ).
  const double *eigenvectors(int tau) const { return z_.data() + tau * extent_ * extent_; }
  const double *eigenvalues(int tau) const { return lambda_.data() + tau * extent_; }
  /// Λ(i) = Σ_τ λ^(τ)_{i_τ} for the tensor index i.
  double eigenvalue_sum(std::size_t i) const;

  bool has_factors() const { return !mass_.empty(); }
  const DenseMatrix &mass(int tau) const { return mass_.at(tau); }
  const DenseMatrix &matrix(int tau) const { return matrix_.at(tau); }

  /// x = A^{-1} r. Reentrant; uses thread-local scratch.
  void apply_inverse(std::span<const double> r, std::span<double> x, FlopCounter *counter = nullptr) const;

  /// y = A x with the Kronecker-sum matrix; requires the kept factors.
  void apply(std::span<const double> x, std::span<double> y) const;

  /// Dense Kronecker-sum matrix; requires the kept factors.
  DenseMatrix dense_matrix() const;

  /// Counted operations of one apply_inverse.
  std::uint64_t apply_inverse_flops() const;

private:
  int dim_;
  int extent_;
  std::size_t size_;
  SubdomainKind kind_;
  SolverProvenance provenance_;
  std::vector<double> z_;
  std::vector<double> lambda_;
  std::vector<DenseMatrix> mass_;
  std::vector<DenseMatrix> matrix_;
};

/**
 * Fast-diagonalization solver for one cell. Cartesian levels use the exact
 * cell extents; distorted levels use surrogate_lengths with the interior
 * faces taking the neighbor's surrogate extent in the penalty.
 */
LocalSolver build_cell_solver(const DGOperator &op, std::size_t cell, bool surrogate = false,
                              bool keep_factors = true, FlopCounter *setup_counter = nullptr);

/// Exact fast-diagonalization solver for a vertex patch of a Cartesian level.
LocalSolver build_patch_solver(const DGOperator &op, const VertexPatch &patch,
                               bool keep_factors = true, FlopCounter *setup_counter = nullptr);

/// Univariate factors of a cell: exact extents on Cartesian levels, surrogate extents otherwise.
std::vector<UnivariateFactors> cell_factors(const DGOperator &op, std::size_t cell,
                                            FlopCounter *setup_counter = nullptr);

/**
 * Local solvers of all subdomains of a level. On Cartesian levels congruent
 * subdomains (same boundary pattern) share one solver object; distorted
 * levels get one surrogate solver per cell without stored factors.
 */
class SolverSet
{
public:
  std::size_t size() const { return index_.size(); }
  const LocalSolver &operator[](std::size_t j) const { return *unique_[index_[j]]; }
  std::size_t n_unique() const { return unique_.size(); }

  static SolverSet for_cells(const DGOperator &op, FlopCounter *setup_counter = nullptr);
  static SolverSet for_patches(const DGOperator &op, const std::vector<VertexPatch> &patches,
                               FlopCounter *setup_counter = nullptr);

private:
  std::vector<std::shared_ptr<const LocalSolver>> unique_;
  std::vector<std::size_t> index_;
};

/// Global DoF indices of a cell block, lexicographic within the cell.
std::vector<std::size_t> cell_dof_indices(const DGOperator &op, std::size_t cell);

/**
 * Global DoF indices of a vertex patch in tensor order: patch-local index
 * Σ_τ j_τ (2(k+1))^τ with j_τ = b_τ (k+1) + i_τ, where b_τ ∈ {0,1} selects
 * the cell layer and i_τ the node inside that cell.
 */
std::vector<std::size_t> patch_dof_indices(const DGOperator &op, const VertexPatch &patch);

/// Rows and columns of a dense matrix selected by an index list.
DenseMatrix restrict_dense(const DenseMatrix &a, const std::vector<std::size_t> &indices);

/**
 * Largest eigenvalue of the pencil (A_j, Ã_j), A_j the restriction of the
 * level operator to the subdomain and Ã_j the separable approximation held
 * by `solver`. Throws when the subdomain exceeds `max_size` unknowns.
 */
double estimate_local_stability(const DGOperator &op, const std::vector<std::size_t> &indices,
                                const LocalSolver &solver, std::size_t max_size = 512);

} // namespace tpsmg
