#pragma once

#include "tpsmg/krylov.hpp"
#include "tpsmg/smoothers.hpp"

#include <memory>

namespace tpsmg
{

/**
 * Embedding of parent-cell polynomials into the two children along one
 * direction: E^c(i, j) = φ_j((x_i + c)/2) with x_i the nodes of the child
 * basis, c ∈ {0, 1}.
 */
std::array<DenseMatrix, 2> embedding_matrices(const Basis1D &basis);

/// Prolongation and restriction between consecutive levels of a hierarchy.
class Transfer
{
public:
  Transfer(const MeshHierarchy &mesh, int degree);

  /// fine = I↑ coarse, from level `coarse_level` to coarse_level + 1.
  void prolongate(std::size_t coarse_level, std::span<const double> coarse, std::span<double> fine,
                  FlopCounter *counter = nullptr) const;
  /// fine += I↑ coarse.
  void prolongate_add(std::size_t coarse_level, std::span<const double> coarse, std::span<double> fine,
                      FlopCounter *counter = nullptr) const;
  /// coarse = I↓ fine = (I↑)ᵀ fine.
  void restrict_to_coarse(std::size_t coarse_level, std::span<const double> fine, std::span<double> coarse,
                          FlopCounter *counter = nullptr) const;

  const std::array<DenseMatrix, 2> &embedding() const { return embedding_; }

private:
  void check_sizes(std::size_t coarse_level, std::size_t n_coarse, std::size_t n_fine) const;

  const MeshHierarchy &mesh_;
  int n_;
  std::size_t dofs_per_cell_;
  std::array<DenseMatrix, 2> embedding_;
};

enum class CoarseSolverKind
{
  direct,
  chebyshev
};

const char *to_string(CoarseSolverKind kind);

/// Solver for the level-0 problem.
class CoarseSolver
{
public:
  virtual ~CoarseSolver() = default;
  virtual void solve(std::span<double> x, std::span<const double> b) const = 0;
};

/// Banded Cholesky factorization of the coarse operator, assembled by probing.
class DirectCoarseSolver : public CoarseSolver
{
public:
  explicit DirectCoarseSolver(const DGOperator &op, FlopCounter *setup_counter = nullptr);
  void solve(std::span<double> x, std::span<const double> b) const override;
  std::size_t half_bandwidth() const { return factor_.half_bandwidth(); }

private:
  const DGOperator &op_;
  BandCholesky factor_;
};

/**
 * Chebyshev iteration preconditioned by the additive cell smoother (block
 * Jacobi, ω = 1). The spectrum of the preconditioned operator is bounded by
 * [0.06, 1.2]·λ_max with λ_max from 20 Lanczos steps. Iterates until the
 * relative residual is at most `tolerance`; throws NumericalError after
 * 10·n₀ iterations.
 */
class ChebyshevCoarseSolver : public CoarseSolver
{
public:
  ChebyshevCoarseSolver(const DGOperator &op, double tolerance = 1e-8, FlopCounter *setup_counter = nullptr);
  void solve(std::span<double> x, std::span<const double> b) const override;

  double lambda_max() const { return lambda_max_; }
  /// Iterations of the most recent solve.
  int last_iterations() const { return last_iterations_; }

private:
  void precondition(std::span<double> z, std::span<const double> r) const;

  const DGOperator &op_;
  double tolerance_;
  SolverSet block_solvers_;
  double lambda_max_ = 0.;
  mutable int last_iterations_ = 0;
};

struct MultigridConfig
{
  SmootherConfig smoother;
  CoarseSolverKind coarse = CoarseSolverKind::direct;
  double coarse_tolerance = 1e-8;
};

/**
 * Geometric multigrid V-cycle on levels 0..finest of a hierarchy: operators,
 * smoothers on levels ≥ 1, transfers and a coarse solver.
 */
class Multigrid
{
public:
  Multigrid(const MeshHierarchy &mesh, std::size_t finest, int degree, double penalty_hat,
            const MultigridConfig &config, FlopCounter *counter = nullptr, FlopCounter *setup_counter = nullptr);

  std::size_t finest_level() const { return finest_; }
  const DGOperator &level_operator(std::size_t l) const { return *operators_.at(l); }
  const SchwarzSmoother &smoother(std::size_t l) const { return *smoothers_.at(l); }
  const Transfer &transfer() const { return transfer_; }
  const CoarseSolver &coarse_solver() const { return *coarse_; }
  const MultigridConfig &config() const { return config_; }

  /// One V-cycle on level l for A_l x = b, starting from x.
  void vcycle(std::size_t l, std::span<double> x, std::span<const double> b) const;

  /// Preconditioner application dst = B src (one V-cycle from zero on the finest level).
  void vmult(std::span<double> dst, std::span<const double> src) const;

  LinearOperator as_preconditioner() const;
  LinearOperator as_operator() const;

private:
  void cycle(std::size_t l, std::span<double> x, std::span<const double> b, bool zero_guess) const;

  const MeshHierarchy &mesh_;
  std::size_t finest_;
  MultigridConfig config_;
  FlopCounter *counter_;
  std::vector<std::unique_ptr<DGOperator>> operators_;
  std::vector<std::unique_ptr<SchwarzSmoother>> smoothers_;
  Transfer transfer_;
  std::unique_ptr<CoarseSolver> coarse_;
};

} // namespace tpsmg
