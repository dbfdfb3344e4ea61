#include "tpsmg/polybasis.hpp"

#include "tpsmg/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace tpsmg
{

namespace
{

/// Legendre polynomial P_n and its derivative on [-1,1].
std::pair<double, double> legendre(int n, double x)
{
  if (n == 0)
    return {1., 0.};
  double p_prev = 1., p = x;
  for (int m = 1; m < n; ++m)
    {
      const double p_next = ((2. * m + 1.) * x * p - m * p_prev) / (m + 1.);
      p_prev = p;
      p = p_next;
    }
  // P'_n from the recurrence (x^2 - 1) P'_n = n (x P_n - P_{n-1}); valid for |x| < 1
  const double dp = n * (x * p - p_prev) / (x * x - 1.);
  return {p, dp};
}

constexpr int max_newton_steps = 100;

} // namespace

double penalty(double penalty_hat, int degree, double h_plus, double h_minus)
{
  if (!(h_plus > 0.) || !(h_minus > 0.))
    throw std::invalid_argument("penalty: cell extents must be positive");
  return penalty_hat * degree * (degree + 1.) * (1. / h_plus + 1. / h_minus);
}

std::vector<double> gauss_lobatto_nodes(int degree)
{
  if (degree < 1)
    throw std::invalid_argument("gauss_lobatto_nodes: degree must be at least 1");
  const int k = degree;
  std::vector<double> x(k + 1);
  x[0] = -1.;
  x[k] = 1.;
  // interior nodes are the roots of P'_k; Newton with (1-x^2) P''_k = 2x P'_k - k(k+1) P_k
  for (int j = 1; j < k; ++j)
    {
      double t = -std::cos(std::numbers::pi * j / k);
      for (int it = 0; it < max_newton_steps; ++it)
        {
          const auto [p, dp] = legendre(k, t);
          const double d2p = (2. * t * dp - k * (k + 1.) * p) / (1. - t * t);
          const double dt = dp / d2p;
          t -= dt;
          if (std::abs(dt) < 1e-16)
            break;
        }
      x[j] = t;
    }
  std::vector<double> nodes(k + 1);
  for (int j = 0; j <= k; ++j)
    nodes[j] = 0.5 * (1. + x[j]);
  // enforce exact mirror symmetry about 1/2
  for (int j = 0; j <= k / 2; ++j)
    {
      const double s = 0.5 * (nodes[j] + 1. - nodes[k - j]);
      nodes[j] = s;
      nodes[k - j] = 1. - s;
    }
  if (k % 2 == 0)
    nodes[k / 2] = 0.5;
  nodes[0] = 0.;
  nodes[k] = 1.;
  return nodes;
}

Quadrature1D gauss_quadrature(int n_points)
{
  if (n_points < 1)
    throw std::invalid_argument("gauss_quadrature: need at least one point");
  const int n = n_points;
  Quadrature1D q;
  q.points.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < n; ++i)
    {
      double t = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 1.;
      for (int it = 0; it < max_newton_steps; ++it)
        {
          const auto [p, d] = legendre(n, t);
          dp = d;
          const double dt = p / d;
          t -= dt;
          if (std::abs(dt) < 1e-16)
            break;
        }
      dp = legendre(n, t).second;
      q.points[i] = 0.5 * (1. + t);
      q.weights[i] = 1. / ((1. - t * t) * dp * dp);
    }
  for (int i = 0; i < n / 2; ++i)
    {
      const double s = 0.5 * (q.points[i] + 1. - q.points[n - 1 - i]);
      q.points[i] = s;
      q.points[n - 1 - i] = 1. - s;
      const double w = 0.5 * (q.weights[i] + q.weights[n - 1 - i]);
      q.weights[i] = w;
      q.weights[n - 1 - i] = w;
    }
  if (n % 2 == 1)
    q.points[n / 2] = 0.5;
  return q;
}

LagrangeBasis1D::LagrangeBasis1D(std::vector<double> nodes)
  : nodes_(std::move(nodes)), denominators_(nodes_.size(), 1.)
{
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (std::size_t j = 0; j < nodes_.size(); ++j)
      if (j != i)
        {
          const double d = nodes_[i] - nodes_[j];
          if (d == 0.)
            throw std::invalid_argument("LagrangeBasis1D: nodes must be distinct");
          denominators_[i] *= d;
        }
}

double LagrangeBasis1D::value(std::size_t i, double x) const
{
  double v = 1.;
  for (std::size_t j = 0; j < nodes_.size(); ++j)
    if (j != i)
      v *= x - nodes_[j];
  return v / denominators_[i];
}

double LagrangeBasis1D::derivative(std::size_t i, double x) const
{
  double sum = 0.;
  for (std::size_t l = 0; l < nodes_.size(); ++l)
    {
      if (l == i)
        continue;
      double prod = 1.;
      for (std::size_t j = 0; j < nodes_.size(); ++j)
        if (j != i && j != l)
          prod *= x - nodes_[j];
      sum += prod;
    }
  return sum / denominators_[i];
}

Basis1D::Basis1D(int degree, const Quadrature1D &quadrature)
  : degree_(degree), quadrature_(quadrature), lagrange_(gauss_lobatto_nodes(degree))
{
  const std::size_t n = n_dofs();
  const std::size_t nq = quadrature_.size();
  shape_values_.resize(n * nq);
  shape_gradients_.resize(n * nq);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t q = 0; q < nq; ++q)
      {
        shape_values_[i * nq + q] = lagrange_.value(i, quadrature_.points[q]);
        shape_gradients_[i * nq + q] = lagrange_.derivative(i, quadrature_.points[q]);
      }
  for (int p = 0; p < 2; ++p)
    {
      boundary_values_[p].resize(n);
      boundary_gradients_[p].resize(n);
      for (std::size_t i = 0; i < n; ++i)
        {
          // Lagrange cardinality holds exactly at the end points
          boundary_values_[p][i] = (p == 0 ? i == 0 : i == n - 1) ? 1. : 0.;
          boundary_gradients_[p][i] = lagrange_.derivative(i, static_cast<double>(p));
        }
    }
}

UnivariateFactors univariate_cell_factors(const Basis1D &basis, double h, FaceSide left,
                                          FaceSide right, double penalty_hat,
                                          FlopCounter *counter)
{
  if (!(h > 0.))
    throw std::invalid_argument("univariate_cell_factors: interval length must be positive");
  const std::size_t n = basis.n_dofs();
  const std::size_t nq = basis.n_quadrature_points();
  const auto &w = basis.quadrature().weights;
  const auto &phi = basis.shape_values();
  const auto &dphi = basis.shape_gradients();
  const int k = basis.degree();

  UnivariateFactors f;
  f.lengths = {h, h};
  f.mass = DenseMatrix(n, n);
  f.laplace = DenseMatrix(n, n);
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n; ++col)
      {
        double m = 0., l = 0.;
        for (std::size_t q = 0; q < nq; ++q)
          {
            m += phi[col * nq + q] * phi[row * nq + q] * w[q];
            l += dphi[col * nq + q] * dphi[row * nq + q] * w[q];
          }
        f.mass(row, col) = m * h;
        f.laplace(row, col) = l / h;
      }

  f.matrix = f.laplace;
  const std::array<FaceSide, 2> sides{left, right};
  for (int p = 0; p < 2; ++p)
    {
      const bool at_boundary = sides[p].kind == FaceKind::boundary;
      const double h_neighbor = at_boundary ? h : sides[p].neighbor_length;
      if (!(h_neighbor > 0.))
        throw std::invalid_argument("univariate_cell_factors: neighbor length must be positive");
      const double eta = face_penalty_weight(at_boundary);
      const double sigma = eta * penalty(penalty_hat, k, h, h_neighbor);
      const double sign = p == 0 ? -1. : 1.;
      f.face_penalty[p] = sigma;
      f.consistency[p] = DenseMatrix(n, n);
      f.point_mass[p] = DenseMatrix(n, n);
      for (std::size_t row = 0; row < n; ++row)
        for (std::size_t col = 0; col < n; ++col)
          {
            f.consistency[p](row, col) = sign * eta / h * basis.boundary_gradient(col, p) *
                                         basis.boundary_value(row, p);
            f.point_mass[p](row, col) = basis.boundary_value(col, p) * basis.boundary_value(row, p);
          }
      f.nitsche[p] = DenseMatrix(n, n);
      for (std::size_t row = 0; row < n; ++row)
        for (std::size_t col = 0; col < n; ++col)
          f.nitsche[p](row, col) = sigma * f.point_mass[p](row, col) -
                                   f.consistency[p](row, col) - f.consistency[p](col, row);
      f.matrix = f.matrix + f.nitsche[p];
    }
  count_flops(counter, Kernel::smoother_setup, 8 * n * n * nq + 16 * n * n);
  return f;
}

UnivariateFactors univariate_patch_factors(const Basis1D &basis, double h_plus, double h_minus,
                                           FaceSide left, FaceSide right, double penalty_hat,
                                           FlopCounter *counter)
{
  if (!(h_plus > 0.) || !(h_minus > 0.))
    throw std::invalid_argument("univariate_patch_factors: interval lengths must be positive");
  const std::size_t n = basis.n_dofs();
  const int k = basis.degree();

  const auto plus = univariate_cell_factors(basis, h_plus, left, FaceSide::interior(h_minus),
                                            penalty_hat, counter);
  const auto minus = univariate_cell_factors(basis, h_minus, FaceSide::interior(h_plus), right,
                                             penalty_hat, counter);

  // interface at the right end of "plus" (x̂ = 1) and the left end of "minus" (x̂ = 0);
  // rows are test functions on plus, columns trial functions on minus
  const double sigma = face_penalty_weight(false) * penalty(penalty_hat, k, h_plus, h_minus);
  DenseMatrix cross(n, n);
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n; ++col)
      cross(row, col) =
        -sigma * basis.boundary_value(col, 0) * basis.boundary_value(row, 1) -
        0.5 / h_minus * basis.boundary_gradient(col, 0) * basis.boundary_value(row, 1) +
        0.5 / h_plus * basis.boundary_value(col, 0) * basis.boundary_gradient(row, 1);

  UnivariateFactors f;
  f.lengths = {h_plus, h_minus};
  f.block_plus = plus.matrix;
  f.block_minus = minus.matrix;
  f.block_plus_minus = cross;
  f.block_minus_plus = cross.transpose();
  f.face_penalty = {plus.face_penalty[0], minus.face_penalty[1]};

  f.mass = DenseMatrix(2 * n, 2 * n);
  f.matrix = DenseMatrix(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      {
        f.mass(i, j) = plus.mass(i, j);
        f.mass(n + i, n + j) = minus.mass(i, j);
        f.matrix(i, j) = f.block_plus(i, j);
        f.matrix(n + i, n + j) = f.block_minus(i, j);
        f.matrix(i, n + j) = f.block_plus_minus(i, j);
        f.matrix(n + i, j) = f.block_minus_plus(i, j);
      }
  count_flops(counter, Kernel::smoother_setup, 10 * n * n);
  return f;
}

EigenPair1D generalized_sym_eig(const DenseMatrix &a, const DenseMatrix &m, FlopCounter *counter)
{
  const std::size_t n = a.rows();
  if (a.cols() != n || m.rows() != n || m.cols() != n)
    throw std::invalid_argument("generalized_sym_eig: dimension mismatch");
  const double a_norm = a.frobenius_norm();
  if (a.symmetry_defect() > 1e-12 * std::max(1., a_norm))
    throw std::invalid_argument("generalized_sym_eig: A not symmetric");

  DenseMatrix l = m;
  cholesky_in_place(l, "mass");

  // C = L^{-1} A L^{-T}: forward substitution on the columns, then on the rows
  DenseMatrix c = a;
  for (std::size_t col = 0; col < n; ++col)
    for (std::size_t i = 0; i < n; ++i)
      {
        double s = c(i, col);
        for (std::size_t kk = 0; kk < i; ++kk)
          s -= l(i, kk) * c(kk, col);
        c(i, col) = s / l(i, i);
      }
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t j = 0; j < n; ++j)
      {
        double s = c(row, j);
        for (std::size_t kk = 0; kk < j; ++kk)
          s -= l(j, kk) * c(row, kk);
        c(row, j) = s / l(j, j);
      }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      {
        const double s = 0.5 * (c(i, j) + c(j, i));
        c(i, j) = s;
        c(j, i) = s;
      }

  std::uint64_t flops = n * n * n / 3 + 2 * n * n * n;

  DenseMatrix q = DenseMatrix::identity(n);
  const double c_norm = c.frobenius_norm();
  constexpr int max_sweeps = 30;
  constexpr double threshold = 1e-14;
  bool converged = false;
  for (int sweep = 0; sweep <= max_sweeps; ++sweep)
    {
      double off = 0.;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          off += 2. * c(i, j) * c(i, j);
      flops += n * n;
      if (std::sqrt(off) <= threshold * c_norm || c_norm == 0.)
        {
          converged = true;
          break;
        }
      if (sweep == max_sweeps)
        break;
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t r = p + 1; r < n; ++r)
          {
            const double apr = c(p, r);
            if (std::abs(apr) < 1e-300)
              continue;
            const double theta = (c(r, r) - c(p, p)) / (2. * apr);
            const double t = (theta >= 0. ? 1. : -1.) / (std::abs(theta) + std::sqrt(theta * theta + 1.));
            const double cs = 1. / std::sqrt(t * t + 1.);
            const double sn = t * cs;
            for (std::size_t kk = 0; kk < n; ++kk)
              {
                const double ckp = c(kk, p), ckr = c(kk, r);
                c(kk, p) = cs * ckp - sn * ckr;
                c(kk, r) = sn * ckp + cs * ckr;
              }
            for (std::size_t kk = 0; kk < n; ++kk)
              {
                const double cpk = c(p, kk), crk = c(r, kk);
                c(p, kk) = cs * cpk - sn * crk;
                c(r, kk) = sn * cpk + cs * crk;
              }
            for (std::size_t kk = 0; kk < n; ++kk)
              {
                const double qkp = q(kk, p), qkr = q(kk, r);
                q(kk, p) = cs * qkp - sn * qkr;
                q(kk, r) = sn * qkp + cs * qkr;
              }
            flops += 18 * n + 12;
          }
    }
  if (!converged)
    throw NumericalError("generalized_sym_eig: Jacobi iteration did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return c(i, i) < c(j, j); });

  // Z = L^{-T} Q, columns sorted by eigenvalue
  EigenPair1D result;
  result.values.resize(n);
  result.vectors = DenseMatrix(n, n);
  std::vector<double> col(n);
  for (std::size_t jj = 0; jj < n; ++jj)
    {
      const std::size_t j = order[jj];
      result.values[jj] = c(j, j);
      for (std::size_t i = n; i-- > 0;)
        {
          double s = q(i, j);
          for (std::size_t kk = i + 1; kk < n; ++kk)
            s -= l(kk, i) * col[kk];
          col[i] = s / l(i, i);
        }
      for (std::size_t i = 0; i < n; ++i)
        result.vectors(i, jj) = col[i];
    }
  flops += n * n * n;
  count_flops(counter, Kernel::smoother_setup, flops);
  return result;
}

} // namespace tpsmg
