#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tpsmg
{

using Vector = std::vector<double>;

/// Thrown for numerical breakdowns (non-SPD input, non-convergence, singular solvers).
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix for the small univariate problems and test oracles.
class DenseMatrix
{
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double value = 0.)
    : rows_(rows), cols_(cols), data_(rows * cols, value)
  {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const double *data() const { return data_.data(); }
  double *data() { return data_.data(); }

  DenseMatrix transpose() const;
  DenseMatrix operator*(const DenseMatrix &other) const;
  DenseMatrix operator+(const DenseMatrix &other) const;
  DenseMatrix operator-(const DenseMatrix &other) const;
  DenseMatrix &operator*=(double s);

  /// y = A x
  void vmult(std::span<const double> x, std::span<double> y) const;

  double frobenius_norm() const;
  /// max_ij |A_ij - A_ji|
  double symmetry_defect() const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Kronecker product A ⊗ B.
DenseMatrix kronecker(const DenseMatrix &a, const DenseMatrix &b);

/// In-place Cholesky factorization A = L Lᵀ; the lower triangle holds L afterwards.
/// Throws NumericalError if A is not numerically SPD.
void cholesky_in_place(DenseMatrix &a, const std::string &what = "matrix");

/// Solves L Lᵀ x = b with the factor from cholesky_in_place.
void cholesky_solve(const DenseMatrix &l, std::span<double> x);

/// Solves A x = b for symmetric positive definite A.
Vector solve_spd(DenseMatrix a, Vector b);

/**
 * Symmetric positive definite band matrix in lower band storage with
 * Cholesky factorization. Used for the direct coarse-grid solver.
 */
class BandCholesky
{
public:
  BandCholesky(std::size_t n, std::size_t half_bandwidth);

  std::size_t size() const { return n_; }
  std::size_t half_bandwidth() const { return bw_; }

  /// Adds to entry (i, j) with |i - j| <= half_bandwidth; only i >= j is stored.
  void add(std::size_t i, std::size_t j, double value);
  double get(std::size_t i, std::size_t j) const;

  /// Returns the number of floating point operations performed.
  std::size_t factorize();
  void solve(std::span<double> x) const;

private:
  double &at(std::size_t i, std::size_t j) { return data_[i * (bw_ + 1) + (bw_ + j - i)]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * (bw_ + 1) + (bw_ + j - i)]; }

  std::size_t n_;
  std::size_t bw_;
  bool factorized_ = false;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

} // namespace tpsmg
