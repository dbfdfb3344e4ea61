#include "tpsmg/dense.hpp"

#include <algorithm>
#include <cmath>

namespace tpsmg
{

DenseMatrix DenseMatrix::identity(std::size_t n)
{
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    m(i, i) = 1.;
  return m;
}

DenseMatrix DenseMatrix::transpose() const
{
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix &other) const
{
  if (cols_ != other.rows_)
    throw std::invalid_argument("DenseMatrix: dimension mismatch in product");
  DenseMatrix c(rows_, other.cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t l = 0; l < cols_; ++l)
      {
        const double a = (*this)(i, l);
        if (a == 0.)
          continue;
        for (std::size_t j = 0; j < other.cols_; ++j)
          c(i, j) += a * other(l, j);
      }
  return c;
}

DenseMatrix DenseMatrix::operator+(const DenseMatrix &other) const
{
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw std::invalid_argument("DenseMatrix: dimension mismatch in sum");
  DenseMatrix c = *this;
  for (std::size_t i = 0; i < data_.size(); ++i)
    c.data_[i] += other.data_[i];
  return c;
}

DenseMatrix DenseMatrix::operator-(const DenseMatrix &other) const
{
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw std::invalid_argument("DenseMatrix: dimension mismatch in difference");
  DenseMatrix c = *this;
  for (std::size_t i = 0; i < data_.size(); ++i)
    c.data_[i] -= other.data_[i];
  return c;
}

DenseMatrix &DenseMatrix::operator*=(double s)
{
  for (auto &v : data_)
    v *= s;
  return *this;
}

void DenseMatrix::vmult(std::span<const double> x, std::span<double> y) const
{
  if (x.size() != cols_ || y.size() != rows_)
    throw std::invalid_argument("DenseMatrix::vmult: size mismatch");
  for (std::size_t i = 0; i < rows_; ++i)
    {
      double s = 0.;
      const double *row = data_.data() + i * cols_;
      for (std::size_t j = 0; j < cols_; ++j)
        s += row[j] * x[j];
      y[i] = s;
    }
}

double DenseMatrix::frobenius_norm() const
{
  double s = 0.;
  for (double v : data_)
    s += v * v;
  return std::sqrt(s);
}

double DenseMatrix::symmetry_defect() const
{
  double d = 0.;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < i; ++j)
      d = std::max(d, std::abs((*this)(i, j) - (*this)(j, i)));
  return d;
}

DenseMatrix kronecker(const DenseMatrix &a, const DenseMatrix &b)
{
  DenseMatrix c(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          c(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return c;
}

void cholesky_in_place(DenseMatrix &a, const std::string &what)
{
  const std::size_t n = a.rows();
  if (a.cols() != n)
    throw std::invalid_argument("cholesky: matrix not square");
  for (std::size_t j = 0; j < n; ++j)
    {
      double d = a(j, j);
      for (std::size_t k = 0; k < j; ++k)
        d -= a(j, k) * a(j, k);
      if (!(d > 0.))
        throw NumericalError(what + " not SPD");
      d = std::sqrt(d);
      a(j, j) = d;
      for (std::size_t i = j + 1; i < n; ++i)
        {
          double s = a(i, j);
          for (std::size_t k = 0; k < j; ++k)
            s -= a(i, k) * a(j, k);
          a(i, j) = s / d;
        }
      for (std::size_t i = 0; i < j; ++i)
        a(i, j) = 0.;
    }
}

void cholesky_solve(const DenseMatrix &l, std::span<double> x)
{
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i)
    {
      double s = x[i];
      for (std::size_t k = 0; k < i; ++k)
        s -= l(i, k) * x[k];
      x[i] = s / l(i, i);
    }
  for (std::size_t i = n; i-- > 0;)
    {
      double s = x[i];
      for (std::size_t k = i + 1; k < n; ++k)
        s -= l(k, i) * x[k];
      x[i] = s / l(i, i);
    }
}

Vector solve_spd(DenseMatrix a, Vector b)
{
  cholesky_in_place(a);
  cholesky_solve(a, b);
  return b;
}

BandCholesky::BandCholesky(std::size_t n, std::size_t half_bandwidth)
  : n_(n), bw_(std::min(half_bandwidth, n == 0 ? 0 : n - 1)), data_(n * (bw_ + 1), 0.)
{}

void BandCholesky::add(std::size_t i, std::size_t j, double value)
{
  if (i < j)
    std::swap(i, j);
  if (i - j > bw_)
    throw std::out_of_range("BandCholesky: entry outside band");
  at(i, j) += value;
}

double BandCholesky::get(std::size_t i, std::size_t j) const
{
  if (i < j)
    std::swap(i, j);
  if (i - j > bw_)
    return 0.;
  return at(i, j);
}

std::size_t BandCholesky::factorize()
{
  std::size_t flops = 0;
  for (std::size_t j = 0; j < n_; ++j)
    {
      const std::size_t k0 = j > bw_ ? j - bw_ : 0;
      double d = at(j, j);
      for (std::size_t k = k0; k < j; ++k)
        d -= at(j, k) * at(j, k);
      flops += 2 * (j - k0) + 1;
      if (!(d > 0.))
        throw NumericalError("coarse matrix not SPD");
      d = std::sqrt(d);
      at(j, j) = d;
      const std::size_t i_end = std::min(n_, j + bw_ + 1);
      for (std::size_t i = j + 1; i < i_end; ++i)
        {
          const std::size_t kk = i > bw_ ? i - bw_ : 0;
          const std::size_t k_start = std::max(k0, kk);
          double s = at(i, j);
          for (std::size_t k = k_start; k < j; ++k)
            s -= at(i, k) * at(j, k);
          at(i, j) = s / d;
          flops += 2 * (j - k_start) + 1;
        }
    }
  factorized_ = true;
  return flops;
}

void BandCholesky::solve(std::span<double> x) const
{
  if (!factorized_)
    throw std::logic_error("BandCholesky::solve before factorize");
  if (x.size() != n_)
    throw std::invalid_argument("BandCholesky::solve: size mismatch");
  for (std::size_t i = 0; i < n_; ++i)
    {
      const std::size_t k0 = i > bw_ ? i - bw_ : 0;
      double s = x[i];
      for (std::size_t k = k0; k < i; ++k)
        s -= at(i, k) * x[k];
      x[i] = s / at(i, i);
    }
  for (std::size_t i = n_; i-- > 0;)
    {
      const std::size_t k_end = std::min(n_, i + bw_ + 1);
      double s = x[i];
      for (std::size_t k = i + 1; k < k_end; ++k)
        s -= at(k, i) * x[k];
      x[i] = s / at(i, i);
    }
}

double dot(std::span<const double> a, std::span<const double> b)
{
  double s = 0.;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a)
{
  return std::sqrt(dot(a, a));
}

void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += alpha * x[i];
}

} // namespace tpsmg
