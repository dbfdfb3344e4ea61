#pragma once

#include "tpsmg/dense.hpp"

#include <functional>

namespace tpsmg
{

/// dst = Op(src)
using LinearOperator = std::function<void(std::span<double> dst, std::span<const double> src)>;

struct KrylovOptions
{
  /// Relative residual reduction δ_red.
  double reduction = 1e-8;
  int max_iterations = 200;
  /// GMRES restart length.
  int restart = 200;
  /// Called by CG once per iteration with the iteration index, residual and preconditioned residual.
  std::function<void(int, std::span<const double>, std::span<const double>)> monitor;
};

struct KrylovResult
{
  bool converged = false;
  int iterations = 0;
  double fractional_iterations = 0.;
  double reduction = 0.;
  /// ε_tol = e₀ δ_red for the history used in the fractional count.
  double tolerance = 0.;
  /// Euclidean residual norms ‖r_k‖, k = 0..ν.
  std::vector<double> residual_history;
  /// CG only: √(r_kᵀ z_k), the preconditioned residual norm.
  std::vector<double> energy_history;
  /// CG only: step lengths α_k and β_k (Lanczos coefficients).
  std::vector<double> cg_alpha;
  std::vector<double> cg_beta;
};

/**
 * Preconditioned conjugate gradients from the initial guess in `x`. Stops
 * when ‖r_k‖ ≤ δ_red ‖r_0‖. A null preconditioner means the identity.
 * Non-convergence within max_iterations is reported in the result.
 */
KrylovResult pcg(const LinearOperator &a, std::span<const double> b, std::span<double> x,
                 const LinearOperator &preconditioner, const KrylovOptions &options = {});

/**
 * Right-preconditioned restarted GMRES with modified Gram-Schmidt Arnoldi
 * and Givens rotations. The monitored residual is the unpreconditioned one;
 * convergence is confirmed on the true residual b − A x.
 */
KrylovResult pgmres(const LinearOperator &a, std::span<const double> b, std::span<double> x,
                    const LinearOperator &preconditioner, const KrylovOptions &options = {});

/**
 * ν_frac = ν − 1 + log(e_{ν−1}/ε_tol) / log(e_{ν−1}/e_ν) with ε_tol = e₀ δ_red
 * and ν the first index with e_ν ≤ ε_tol, so e_ν < e_{ν−1} at the crossing.
 * Returns ν when e_ν = 0. Throws std::invalid_argument when the history
 * never reaches ε_tol.
 */
double fractional_iterations(std::span<const double> history, double reduction);

/**
 * Largest eigenvalue estimate of P A from `steps` preconditioned CG
 * (Lanczos) iterations on a deterministic pseudo-random right-hand side.
 */
double estimate_largest_eigenvalue(const LinearOperator &a, const LinearOperator &preconditioner, std::size_t n,
                                   int steps = 20, std::uint64_t seed = 1);

} // namespace tpsmg
