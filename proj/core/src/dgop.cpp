#include "tpsmg/dgop.hpp"

#include "tpsmg/penalty.hpp"
#include "tpsmg/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace tpsmg
{

namespace
{

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Inverse of the leading dim × dim block; returns the determinant.
double invert(const Matrix3 &j, int dim, Matrix3 &inv)
{
  inv = Matrix3{};
  const double det = determinant(j, dim);
  if (dim == 1)
    inv[0][0] = 1. / j[0][0];
  else if (dim == 2)
    {
      inv[0][0] = j[1][1] / det;
      inv[0][1] = -j[0][1] / det;
      inv[1][0] = -j[1][0] / det;
      inv[1][1] = j[0][0] / det;
    }
  else
    {
      inv[0][0] = (j[1][1] * j[2][2] - j[1][2] * j[2][1]) / det;
      inv[0][1] = (j[0][2] * j[2][1] - j[0][1] * j[2][2]) / det;
      inv[0][2] = (j[0][1] * j[1][2] - j[0][2] * j[1][1]) / det;
      inv[1][0] = (j[1][2] * j[2][0] - j[1][0] * j[2][2]) / det;
      inv[1][1] = (j[0][0] * j[2][2] - j[0][2] * j[2][0]) / det;
      inv[1][2] = (j[0][2] * j[1][0] - j[0][0] * j[1][2]) / det;
      inv[2][0] = (j[1][0] * j[2][1] - j[1][1] * j[2][0]) / det;
      inv[2][1] = (j[0][1] * j[2][0] - j[0][0] * j[2][1]) / det;
      inv[2][2] = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) / det;
    }
  return det;
}

/// Geometry of the multilinear map at one reference point: det J and J^{-1}[σ][a] = ∂x̂_σ/∂x_a.
struct PointGeometry
{
  double det;
  Matrix3 inv;

  PointGeometry(const std::array<Point, 8> &vertices, int dim, const Point &xhat)
  {
    det = invert(multilinear_jacobian(vertices, dim, xhat), dim, inv);
    if (!(det > 0.))
      throw NumericalError("DGOperator: nonpositive Jacobian determinant");
  }

  /// Physical gradient from reference gradient.
  Point physical(const Point &ref, int dim) const
  {
    Point g{0., 0., 0.};
    for (int a = 0; a < dim; ++a)
      for (int s = 0; s < dim; ++s)
        g[a] += inv[s][a] * ref[s];
    return g;
  }

  /// Reference-gradient coefficients c_σ such that Σ_σ c_σ ∂̂_σ v = vec · ∇v.
  Point pullback(const Point &vec, int dim) const
  {
    Point c{0., 0., 0.};
    for (int s = 0; s < dim; ++s)
      for (int a = 0; a < dim; ++a)
        c[s] += inv[s][a] * vec[a];
    return c;
  }

  /// Outward normal times surface element on face (τ, side) of the reference cell.
  Point scaled_normal(int tau, int side, int dim) const
  {
    Point n{0., 0., 0.};
    const double sign = side == 1 ? 1. : -1.;
    for (int a = 0; a < dim; ++a)
      n[a] = sign * det * inv[tau][a];
    return n;
  }
};

double norm(const Point &p)
{
  return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

double dot3(const Point &a, const Point &b)
{
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/// Cell directions other than τ, ascending; they index the face tensor.
std::array<int, 2> face_directions(int dim, int tau)
{
  std::array<int, 2> dirs{0, 0};
  int m = 0;
  for (int s = 0; s < dim; ++s)
    if (s != tau)
      dirs[m++] = s;
  return dirs;
}

/// Reference point on face (τ, side) for the face quadrature index qf.
Point face_point(const std::vector<double> &points, int dim, int tau, int side, std::size_t qf)
{
  const int n = static_cast<int>(points.size());
  const auto dirs = face_directions(dim, tau);
  Point xhat{0., 0., 0.};
  xhat[tau] = side;
  for (int j = 0; j < dim - 1; ++j)
    {
      xhat[dirs[j]] = points[qf % n];
      qf /= n;
    }
  return xhat;
}

double face_weight(const std::vector<double> &weights, int dim, std::size_t qf)
{
  const std::size_t n = weights.size();
  double w = 1.;
  for (int j = 0; j < dim - 1; ++j)
    {
      w *= weights[qf % n];
      qf /= n;
    }
  return w;
}

struct Scratch
{
  std::vector<double> uq, tmp, tmp2, vq;
  std::array<std::vector<double>, 3> grad, vg;
  std::vector<double> fu, fdn, fval, fa, fb, ftmp;
  std::array<std::vector<double>, 3> fgrad, fcoef, fgrad_nb;

  void resize(std::size_t nd, std::size_t nf)
  {
    for (auto *v : {&uq, &tmp, &tmp2, &vq})
      v->resize(nd);
    for (int s = 0; s < 3; ++s)
      {
        grad[s].resize(nd);
        vg[s].resize(nd);
        fgrad[s].resize(nf);
        fcoef[s].resize(nf);
        fgrad_nb[s].resize(nf);
      }
    for (auto *v : {&fu, &fdn, &fval, &fa, &fb, &ftmp})
      v->resize(nf);
  }
};

Scratch &scratch(std::size_t nd, std::size_t nf)
{
  thread_local Scratch s;
  s.resize(nd, nf);
  return s;
}

/// Jacobian J[a][t] of x_a = Σ_m A[a·2^d + m] Π_{s∈m} x̂_s.
template <int D>
void monomial_jacobian(const double *coeffs, const Point &x, Matrix3 &jac)
{
  constexpr int nv = 1 << D;
  for (int t = 0; t < D; ++t)
    {
      std::array<double, nv> w{};
      for (int m = 0; m < nv; ++m)
        {
          if (((m >> t) & 1) == 0)
            continue;
          double p = 1.;
          for (int s = 0; s < D; ++s)
            if (s != t && ((m >> s) & 1))
              p *= x[s];
          w[m] = p;
        }
      for (int a = 0; a < D; ++a)
        {
          double v = 0.;
          for (int m = 0; m < nv; ++m)
            v += coeffs[a * nv + m] * w[m];
          jac[a][t] = v;
        }
    }
}

/// Adjugate adj with J adj = det(J) I; returns det(J).
template <int D>
double adjugate(const Matrix3 &j, Matrix3 &adj)
{
  if constexpr (D == 1)
    {
      adj[0][0] = 1.;
      return j[0][0];
    }
  else if constexpr (D == 2)
    {
      adj[0][0] = j[1][1];
      adj[0][1] = -j[0][1];
      adj[1][0] = -j[1][0];
      adj[1][1] = j[0][0];
      return j[0][0] * j[1][1] - j[0][1] * j[1][0];
    }
  else
    {
      adj[0][0] = j[1][1] * j[2][2] - j[1][2] * j[2][1];
      adj[0][1] = j[0][2] * j[2][1] - j[0][1] * j[2][2];
      adj[0][2] = j[0][1] * j[1][2] - j[0][2] * j[1][1];
      adj[1][0] = j[1][2] * j[2][0] - j[1][0] * j[2][2];
      adj[1][1] = j[0][0] * j[2][2] - j[0][2] * j[2][0];
      adj[1][2] = j[0][2] * j[1][0] - j[0][0] * j[1][2];
      adj[2][0] = j[1][0] * j[2][1] - j[1][1] * j[2][0];
      adj[2][1] = j[0][1] * j[2][0] - j[0][0] * j[2][1];
      adj[2][2] = j[0][0] * j[1][1] - j[0][1] * j[1][0];
      return j[0][0] * adj[0][0] + j[0][1] * adj[1][0] + j[0][2] * adj[2][0];
    }
}

/// Geometry at one point from the monomial coefficients: adjugate and positive determinant.
template <int D>
double point_adjugate(const double *coeffs, const Point &x, Matrix3 &adj)
{
  Matrix3 jac;
  monomial_jacobian<D>(coeffs, x, jac);
  const double det = adjugate<D>(jac, adj);
  if (!(det > 0.))
    throw NumericalError("DGOperator: nonpositive Jacobian determinant");
  return det;
}

} // namespace

DGOperator::DGOperator(const MeshHierarchy &mesh, std::size_t level, int degree,
                       double penalty_hat, bool force_general_path)
  : mesh_(mesh),
    level_(mesh.level(level)),
    level_index_(level),
    dim_(mesh.dim),
    n_(degree + 1),
    dofs_per_cell_(static_cast<std::size_t>(tensor::ipow(degree + 1, mesh.dim))),
    penalty_hat_(penalty_hat),
    basis_(degree, gauss_quadrature(degree + 1)),
    cartesian_(mesh.level(level).is_cartesian() && !force_general_path)
{
  if (degree < 1)
    throw std::invalid_argument("DGOperator: polynomial degree must be at least 1");
  if (!(penalty_hat > 0.))
    throw std::invalid_argument("DGOperator: penalty factor must be positive");

  const auto &quad = basis_.quadrature();
  const std::size_t n = static_cast<std::size_t>(n_);
  shape_.resize(n * n);
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t i = 0; i < n; ++i)
      shape_[q * n + i] = basis_.shape_values()[i * n + q];

  const LagrangeBasis1D gauss_lagrange(quad.points);
  colloc_deriv_.resize(n * n);
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t p = 0; p < n; ++p)
      colloc_deriv_[q * n + p] = gauss_lagrange.derivative(p, quad.points[q]);
  for (int side = 0; side < 2; ++side)
    {
      trace_value_[side].resize(n);
      trace_derivative_[side].resize(n);
      for (std::size_t q = 0; q < n; ++q)
        {
          trace_value_[side][q] = gauss_lagrange.value(q, side);
          trace_derivative_[side][q] = gauss_lagrange.derivative(q, side);
        }
    }

  // cell length orthogonal to each face: volume / face area
  face_length_.resize(level_.n_cells() * 2 * dim_);
  const std::size_t nd = dofs_per_cell_;
  const std::size_t nf = static_cast<std::size_t>(tensor::ipow(n_, dim_ - 1));
  for (std::size_t c = 0; c < level_.n_cells(); ++c)
    {
      if (level_.is_cartesian())
        {
          for (int f = 0; f < 2 * dim_; ++f)
            face_length_[c * 2 * dim_ + f] = level_.cartesian_length();
          continue;
        }
      const auto vertices = level_.cell_vertices(c);
      double volume = 0.;
      for (std::size_t q = 0; q < nd; ++q)
        {
          const Point xhat = reference_quad_point(q);
          double w = 1.;
          for (int t = 0; t < dim_; ++t)
            w *= quad.weights[(q / tensor::ipow(n_, t)) % n];
          volume += w * PointGeometry(vertices, dim_, xhat).det;
        }
      for (int f = 0; f < 2 * dim_; ++f)
        {
          const int tau = f / 2, side = f % 2;
          double area = 0.;
          for (std::size_t qf = 0; qf < nf; ++qf)
            {
              const PointGeometry g(vertices, dim_, face_point(quad.points, dim_, tau, side, qf));
              area += face_weight(quad.weights, dim_, qf) * norm(g.scaled_normal(tau, side, dim_));
            }
          face_length_[c * 2 * dim_ + f] = volume / area;
        }
    }

  if (!cartesian_)
    {
      quad_points_.resize(nd);
      quad_weights_.resize(nd);
      for (std::size_t q = 0; q < nd; ++q)
        {
          quad_points_[q] = reference_quad_point(q);
          double w = 1.;
          for (int t = 0; t < dim_; ++t)
            w *= quad.weights[(q / tensor::ipow(n_, t)) % n];
          quad_weights_[q] = w;
        }
      face_points_.resize(2 * dim_);
      face_weights_.resize(nf);
      for (int f = 0; f < 2 * dim_; ++f)
        for (std::size_t qf = 0; qf < nf; ++qf)
          face_points_[f].push_back(face_point(quad.points, dim_, f / 2, f % 2, qf));
      for (std::size_t qf = 0; qf < nf; ++qf)
        face_weights_[qf] = face_weight(quad.weights, dim_, qf);

      // Möbius inversion of the vertex values: A[a][m] = Σ_{c ⊆ m} (−1)^{|m|−|c|} v_c[a]
      const int nv = 1 << dim_;
      map_coefficients_.assign(level_.n_cells() * dim_ * nv, 0.);
      for (std::size_t c = 0; c < level_.n_cells(); ++c)
        {
          const auto vertices = level_.cell_vertices(c);
          double *coeffs = map_coefficients_.data() + c * dim_ * nv;
          for (int m = 0; m < nv; ++m)
            for (int sub = m;; sub = (sub - 1) & m)
              {
                const int sign = (std::popcount(static_cast<unsigned>(m ^ sub)) % 2) ? -1 : 1;
                for (int a = 0; a < dim_; ++a)
                  coeffs[a * nv + m] += sign * vertices[sub][a];
                if (sub == 0)
                  break;
              }
        }
    }

  if (cartesian_)
    {
      const double h = level_.cartesian_length();
      for (int l = 0; l < 2; ++l)
        for (int r = 0; r < 2; ++r)
          {
            const FaceSide left = l ? FaceSide::at_boundary() : FaceSide::interior(h);
            const FaceSide right = r ? FaceSide::at_boundary() : FaceSide::interior(h);
            const auto f = univariate_cell_factors(basis_, h, left, right, penalty_hat_);
            cell_1d_[l][r] = f.matrix;
            mass_1d_ = f.mass;
          }
      const auto patch = univariate_patch_factors(basis_, h, h, FaceSide::interior(h),
                                                  FaceSide::interior(h), penalty_hat_);
      cross_upper_ = patch.block_plus_minus;
      cross_lower_ = patch.block_minus_plus;
    }
}

Point DGOperator::reference_quad_point(std::size_t q) const
{
  const auto &pts = basis_.quadrature().points;
  Point xhat{0., 0., 0.};
  for (int t = 0; t < dim_; ++t)
    {
      xhat[t] = pts[q % n_];
      q /= n_;
    }
  return xhat;
}

void DGOperator::interpolate_to_quad(const double *dofs, double *values) const
{
  thread_local std::vector<double> a, b;
  a.assign(dofs, dofs + dofs_per_cell_);
  b.resize(dofs_per_cell_);
  for (int t = 0; t < dim_; ++t)
    {
      tensor::apply_1d(dim_, n_, t, shape_.data(), a.data(), b.data());
      std::swap(a, b);
    }
  std::copy(a.begin(), a.end(), values);
}

void DGOperator::integrate_against_basis(const double *values, double *dofs) const
{
  thread_local std::vector<double> a, b;
  a.assign(values, values + dofs_per_cell_);
  b.resize(dofs_per_cell_);
  for (int t = 0; t < dim_; ++t)
    {
      tensor::apply_1d(dim_, n_, t, shape_.data(), a.data(), b.data(), true);
      std::swap(a, b);
    }
  std::copy(a.begin(), a.end(), dofs);
}

void DGOperator::vmult(std::span<double> dst, std::span<const double> src) const
{
  if (dst.size() != n_dofs() || src.size() != n_dofs())
    throw std::invalid_argument("DGOperator::vmult: vector size does not match the level");
  if (cartesian_)
    vmult_cartesian(dst, src);
  else
    vmult_general(dst, src);
  count_flops(counter_, Kernel::operator_apply, vmult_flops());
}

std::uint64_t DGOperator::vmult_flops() const
{
  const std::uint64_t apply = tensor::apply_1d_flops(dim_, n_);
  const std::uint64_t n_cells = level_.n_cells();
  const std::uint64_t per_dim = level_.cells_per_dim();
  std::uint64_t interior_face_sides = 2 * dim_ * (per_dim - 1);
  for (int t = 1; t < dim_; ++t)
    interior_face_sides *= per_dim;
  if (cartesian_)
    return (n_cells * dim_ + interior_face_sides) * dim_ * apply;

  const std::uint64_t nd = dofs_per_cell_;
  const std::uint64_t nf = tensor::ipow(n_, dim_ - 1);
  const std::uint64_t d = dim_;
  const std::uint64_t geometry = d * d * (1u << (d - 1)) * (d + 1) + 2 * d * d * d;
  const std::uint64_t cell = (4 * d + 2) * apply + nd * (geometry + 4 * d * d + 2);
  const std::uint64_t face_own = (2 + 2 * d) * 2 * nd + nf * (geometry + 6 * d * d + 10);
  const std::uint64_t face_nb = 4 * nd + (d - 1) * (d + 1) * 2 * nf * n_ + nf * (geometry + 2 * d * d + 10);
  return n_cells * (cell + 2 * d * face_own) + interior_face_sides * face_nb;
}

void DGOperator::vmult_cartesian(std::span<double> dst, std::span<const double> src) const
{
  const std::size_t nd = dofs_per_cell_;
  thread_local std::vector<double> a, b;
  a.resize(nd);
  b.resize(nd);

  // out (+)= (mats[d-1] ⊗ … ⊗ mats[0]) in
  auto chain = [&](const std::array<const DenseMatrix *, 3> &mats, const double *in, double *out) {
    const double *cur = in;
    for (int t = 0; t < dim_ - 1; ++t)
      {
        double *next = (t % 2 == 0) ? a.data() : b.data();
        tensor::apply_1d(dim_, n_, t, mats[t]->data(), cur, next);
        cur = next;
      }
    tensor::apply_1d(dim_, n_, dim_ - 1, mats[dim_ - 1]->data(), cur, out, false, true);
  };

  for (std::size_t c = 0; c < level_.n_cells(); ++c)
    {
      double *v = dst.data() + c * nd;
      std::fill(v, v + nd, 0.);
      const double *u = src.data() + c * nd;
      std::array<std::size_t, 6> nb{};
      for (int f = 0; f < 2 * dim_; ++f)
        nb[f] = level_.neighbor(c, f);
      std::array<const DenseMatrix *, 3> mats{&mass_1d_, &mass_1d_, &mass_1d_};
      for (int t = 0; t < dim_; ++t)
        {
          mats.fill(&mass_1d_);
          mats[t] = &cell_1d_[nb[2 * t] == no_neighbor][nb[2 * t + 1] == no_neighbor];
          chain(mats, u, v);
        }
      for (int f = 0; f < 2 * dim_; ++f)
        {
          if (nb[f] == no_neighbor)
            continue;
          mats.fill(&mass_1d_);
          mats[f / 2] = (f % 2 == 1) ? &cross_upper_ : &cross_lower_;
          chain(mats, src.data() + nb[f] * nd, v);
        }
    }
}

void DGOperator::vmult_general(std::span<double> dst, std::span<const double> src) const
{
  switch (dim_)
    {
    case 1:
      vmult_general_dim<1>(dst, src);
      break;
    case 2:
      vmult_general_dim<2>(dst, src);
      break;
    default:
      vmult_general_dim<3>(dst, src);
    }
}

template <int D>
void DGOperator::vmult_general_dim(std::span<double> dst, std::span<const double> src) const
{
  constexpr int nv = 1 << D;
  const std::size_t nd = dofs_per_cell_;
  const std::size_t nf = static_cast<std::size_t>(tensor::ipow(n_, D - 1));
  const int k = basis_.degree();
  Scratch &s = scratch(nd, nf);
  const double *dq = colloc_deriv_.data();

  std::vector<double> nb_value(static_cast<std::size_t>(n_)), nb_deriv(static_cast<std::size_t>(n_));
  Matrix3 adj{}, adj_nb{};

  for (std::size_t c = 0; c < level_.n_cells(); ++c)
    {
      const double *u = src.data() + c * nd;
      const double *coeffs = map_coefficients_.data() + c * D * nv;
      interpolate_to_quad(u, s.uq.data());
      for (int t = 0; t < D; ++t)
        {
          tensor::apply_1d(D, n_, t, dq, s.uq.data(), s.grad[t].data());
          std::fill(s.vg[t].begin(), s.vg[t].end(), 0.);
        }
      std::fill(s.vq.begin(), s.vq.end(), 0.);

      // (∇u, ∇v): coefficients w/det · adj adjᵀ applied to the reference gradient
      for (std::size_t q = 0; q < nd; ++q)
        {
          const double det = point_adjugate<D>(coeffs, quad_points_[q], adj);
          const double scale = quad_weights_[q] / det;
          std::array<double, D> g{};
          for (int a = 0; a < D; ++a)
            for (int t = 0; t < D; ++t)
              g[a] += adj[t][a] * s.grad[t][q];
          for (int t = 0; t < D; ++t)
            {
              double v = 0.;
              for (int a = 0; a < D; ++a)
                v += adj[t][a] * g[a];
              s.vg[t][q] = scale * v;
            }
        }

      for (int f = 0; f < 2 * D; ++f)
        {
          const int tau = f / 2, side = f % 2;
          const auto dirs = face_directions(D, tau);
          const double *ev = trace_value_[side].data();
          const double *de = trace_derivative_[side].data();
          tensor::contract_dir(D, n_, tau, ev, s.uq.data(), s.fu.data());
          for (int t = 0; t < D; ++t)
            {
              if (t == tau)
                tensor::contract_dir(D, n_, tau, de, s.uq.data(), s.fgrad[t].data());
              else
                tensor::contract_dir(D, n_, tau, ev, s.grad[t].data(), s.fgrad[t].data());
            }

          const std::size_t nb = level_.neighbor(c, f);
          const int nb_side = 1 - side;
          const double *coeffs_nb = nullptr;
          if (nb != no_neighbor)
            {
              coeffs_nb = map_coefficients_.data() + nb * D * nv;
              for (int i = 0; i < n_; ++i)
                {
                  nb_value[i] = basis_.boundary_value(i, nb_side);
                  nb_deriv[i] = basis_.boundary_gradient(i, nb_side);
                }
              const double *unb = src.data() + nb * nd;
              tensor::contract_dir(D, n_, tau, nb_value.data(), unb, s.fa.data());
              tensor::contract_dir(D, n_, tau, nb_deriv.data(), unb, s.fb.data());
              for (int j = 0; j < D - 1; ++j)
                {
                  tensor::apply_1d(D - 1, n_, j, shape_.data(), s.fa.data(), s.ftmp.data());
                  std::swap(s.fa, s.ftmp);
                  tensor::apply_1d(D - 1, n_, j, shape_.data(), s.fb.data(), s.ftmp.data());
                  std::swap(s.fb, s.ftmp);
                }
              for (int j = 0; j < D - 1; ++j)
                tensor::apply_1d(D - 1, n_, j, dq, s.fa.data(), s.fgrad_nb[dirs[j]].data());
              std::copy(s.fb.begin(), s.fb.end(), s.fgrad_nb[tau].begin());
            }

          const double h_own = face_length(c, f);
          const double penalty_factor =
            nb == no_neighbor ? penalty(penalty_hat_, k, h_own, h_own)
                              : face_penalty_weight(false) * penalty(penalty_hat_, k, h_own, face_length(nb, f ^ 1));
          const double sign = side == 1 ? 1. : -1.;
          const auto &points = face_points_[f];
          const auto &points_nb = face_points_[f ^ 1];
          for (std::size_t qf = 0; qf < nf; ++qf)
            {
              const double det = point_adjugate<D>(coeffs, points[qf], adj);
              // scaled outward normal det J^{-T} n̂ = ± row τ of the adjugate
              std::array<double, D> normal{};
              double area2 = 0.;
              for (int a = 0; a < D; ++a)
                {
                  normal[a] = sign * adj[tau][a];
                  area2 += normal[a] * normal[a];
                }
              const double area = std::sqrt(area2);
              for (int a = 0; a < D; ++a)
                normal[a] /= area;
              const double w = face_weights_[qf] * area;
              // J^{-1} n in reference coordinates
              std::array<double, D> c_ref{};
              double dn_u = 0.;
              for (int t = 0; t < D; ++t)
                {
                  double v = 0.;
                  for (int a = 0; a < D; ++a)
                    v += adj[t][a] * normal[a];
                  c_ref[t] = v / det;
                  dn_u += c_ref[t] * s.fgrad[t][qf];
                }
              const double uval = s.fu[qf];

              double coef_value, coef_dn;
              if (nb == no_neighbor)
                {
                  coef_value = w * (penalty_factor * uval - dn_u);
                  coef_dn = -w * uval;
                }
              else
                {
                  const double det_nb = point_adjugate<D>(coeffs_nb, points_nb[qf], adj_nb);
                  double dn_nb = 0.;
                  for (int t = 0; t < D; ++t)
                    {
                      double v = 0.;
                      for (int a = 0; a < D; ++a)
                        v += adj_nb[t][a] * normal[a];
                      dn_nb += v / det_nb * s.fgrad_nb[t][qf];
                    }
                  const double jump = uval - s.fa[qf];
                  coef_value = w * (penalty_factor * jump - 0.5 * (dn_u + dn_nb));
                  coef_dn = -0.5 * w * jump;
                }
              s.fval[qf] = coef_value;
              for (int t = 0; t < D; ++t)
                s.fcoef[t][qf] = coef_dn * c_ref[t];
            }

          tensor::expand_dir(D, n_, tau, ev, s.fval.data(), s.vq.data());
          for (int t = 0; t < D; ++t)
            {
              if (t == tau)
                tensor::expand_dir(D, n_, tau, de, s.fcoef[t].data(), s.vq.data());
              else
                tensor::expand_dir(D, n_, tau, ev, s.fcoef[t].data(), s.vg[t].data());
            }
        }

      for (int t = 0; t < D; ++t)
        tensor::apply_1d(D, n_, t, dq, s.vg[t].data(), s.vq.data(), true, true);
      integrate_against_basis(s.vq.data(), dst.data() + c * nd);
    }
}

Vector compute_rhs(const DGOperator &op, const ScalarFunction &f, const ScalarFunction &g)
{
  const int d = op.dim();
  const int n = op.n_per_direction();
  const int k = op.degree();
  const std::size_t nd = op.dofs_per_cell();
  const std::size_t nf = static_cast<std::size_t>(tensor::ipow(n, d - 1));
  const Level &level = op.level();
  const auto &quad = op.basis().quadrature();
  const double *dq = op.collocation_derivative().data();
  const LagrangeBasis1D gauss_lagrange(quad.points);
  std::array<std::vector<double>, 2> ev, de;
  for (int side = 0; side < 2; ++side)
    for (int q = 0; q < n; ++q)
      {
        ev[side].push_back(gauss_lagrange.value(q, side));
        de[side].push_back(gauss_lagrange.derivative(q, side));
      }

  Vector rhs(op.n_dofs(), 0.);
  std::vector<double> vq(nd);
  std::array<std::vector<double>, 3> vg;
  for (auto &v : vg)
    v.resize(nd);
  std::vector<double> fval(nf);
  std::array<std::vector<double>, 3> fcoef;
  for (auto &v : fcoef)
    v.resize(nf);

  for (std::size_t c = 0; c < level.n_cells(); ++c)
    {
      const auto vertices = level.cell_vertices(c);
      std::fill(vq.begin(), vq.end(), 0.);
      for (auto &v : vg)
        std::fill(v.begin(), v.end(), 0.);
      for (std::size_t q = 0; q < nd; ++q)
        {
          const Point xhat = op.reference_quad_point(q);
          const PointGeometry geo(vertices, d, xhat);
          double w = geo.det;
          for (int t = 0; t < d; ++t)
            w *= quad.weights[(q / tensor::ipow(n, t)) % n];
          vq[q] = w * f(level.map_point(c, xhat));
        }
      for (int face = 0; face < 2 * d; ++face)
        {
          if (!level.at_boundary(c, face))
            continue;
          const int tau = face / 2, side = face % 2;
          const double gamma = penalty(op.penalty_hat(), k, op.face_length(c, face),
                                       op.face_length(c, face));
          for (std::size_t qf = 0; qf < nf; ++qf)
            {
              const Point xhat = face_point(quad.points, d, tau, side, qf);
              const PointGeometry geo(vertices, d, xhat);
              const Point scaled = geo.scaled_normal(tau, side, d);
              const double area = norm(scaled);
              const Point normal{scaled[0] / area, scaled[1] / area, scaled[2] / area};
              const double w = face_weight(quad.weights, d, qf) * area;
              const double gval = g(level.map_point(c, xhat));
              fval[qf] = w * gamma * gval;
              const Point c_ref = geo.pullback(normal, d);
              for (int t = 0; t < d; ++t)
                fcoef[t][qf] = -w * gval * c_ref[t];
            }
          tensor::expand_dir(d, n, tau, ev[side].data(), fval.data(), vq.data());
          for (int t = 0; t < d; ++t)
            {
              if (t == tau)
                tensor::expand_dir(d, n, tau, de[side].data(), fcoef[t].data(), vq.data());
              else
                tensor::expand_dir(d, n, tau, ev[side].data(), fcoef[t].data(), vg[t].data());
            }
        }
      for (int t = 0; t < d; ++t)
        tensor::apply_1d(d, n, t, dq, vg[t].data(), vq.data(), true, true);
      op.integrate_against_basis(vq.data(), rhs.data() + c * nd);
    }
  return rhs;
}

Vector interpolate(const DGOperator &op, const ScalarFunction &u)
{
  const int d = op.dim();
  const int n = op.n_per_direction();
  const std::size_t nd = op.dofs_per_cell();
  const auto &nodes = op.basis().nodes();
  Vector values(op.n_dofs());
  for (std::size_t c = 0; c < op.n_cells(); ++c)
    for (std::size_t i = 0; i < nd; ++i)
      {
        Point xhat{0., 0., 0.};
        std::size_t r = i;
        for (int t = 0; t < d; ++t)
          {
            xhat[t] = nodes[r % n];
            r /= n;
          }
        values[c * nd + i] = u(op.level().map_point(c, xhat));
      }
  return values;
}

double evaluate(const DGOperator &op, std::span<const double> u, std::size_t cell,
                const Point &xhat)
{
  const int d = op.dim();
  const int n = op.n_per_direction();
  const std::size_t nd = op.dofs_per_cell();
  std::array<std::vector<double>, 3> phi;
  for (int t = 0; t < d; ++t)
    for (int i = 0; i < n; ++i)
      phi[t].push_back(op.basis().value(i, xhat[t]));
  double sum = 0.;
  for (std::size_t i = 0; i < nd; ++i)
    {
      double v = u[cell * nd + i];
      std::size_t r = i;
      for (int t = 0; t < d; ++t)
        {
          v *= phi[t][r % n];
          r /= n;
        }
      sum += v;
    }
  return sum;
}

double l2_error(const DGOperator &op, std::span<const double> u_h, const ScalarFunction &u)
{
  const int d = op.dim();
  const int n = op.n_per_direction();
  const std::size_t nd = op.dofs_per_cell();
  const Quadrature1D quad = gauss_quadrature(op.degree() + 3);
  const std::size_t m = quad.size();
  const std::size_t n_points = static_cast<std::size_t>(tensor::ipow(static_cast<int>(m), d));
  std::vector<double> table(m * n);
  for (std::size_t q = 0; q < m; ++q)
    for (int i = 0; i < n; ++i)
      table[q * n + i] = op.basis().value(i, quad.points[q]);

  double sum = 0.;
  for (std::size_t c = 0; c < op.n_cells(); ++c)
    {
      const auto vertices = op.level().cell_vertices(c);
      for (std::size_t q = 0; q < n_points; ++q)
        {
          std::array<std::size_t, 3> qi{0, 0, 0};
          Point xhat{0., 0., 0.};
          double w = 1.;
          std::size_t r = q;
          for (int t = 0; t < d; ++t)
            {
              qi[t] = r % m;
              r /= m;
              xhat[t] = quad.points[qi[t]];
              w *= quad.weights[qi[t]];
            }
          double uh = 0.;
          for (std::size_t i = 0; i < nd; ++i)
            {
              double v = u_h[c * nd + i];
              std::size_t ri = i;
              for (int t = 0; t < d; ++t)
                {
                  v *= table[qi[t] * n + ri % n];
                  ri /= n;
                }
              uh += v;
            }
          const double diff = uh - u(op.level().map_point(c, xhat));
          sum += w * PointGeometry(vertices, d, xhat).det * diff * diff;
        }
    }
  return std::sqrt(sum);
}

DenseMatrix assemble_dense(const DGOperator &op)
{
  const std::size_t n = op.n_dofs();
  if (n > dense_assembly_limit)
    throw std::invalid_argument("assemble_dense: system too large for dense assembly");
  DenseMatrix a(n, n);
  Vector e(n, 0.), col(n);
  for (std::size_t j = 0; j < n; ++j)
    {
      e[j] = 1.;
      op.vmult(col, e);
      e[j] = 0.;
      for (std::size_t i = 0; i < n; ++i)
        a(i, j) = col[i];
    }
  return a;
}

namespace
{

/// Values and reference gradients of all cell basis functions at one reference point.
struct BasisAtPoint
{
  std::vector<double> value;
  std::array<std::vector<double>, 3> grad;
};

BasisAtPoint tabulate(const DGOperator &op, const Point &xhat)
{
  const int d = op.dim();
  const int n = op.n_per_direction();
  const std::size_t nd = op.dofs_per_cell();
  BasisAtPoint b;
  b.value.assign(nd, 1.);
  for (int t = 0; t < d; ++t)
    b.grad[t].assign(nd, 1.);
  for (std::size_t i = 0; i < nd; ++i)
    {
      std::size_t r = i;
      for (int t = 0; t < d; ++t)
        {
          const std::size_t it = r % n;
          r /= n;
          const double v = op.basis().value(it, xhat[t]);
          const double dv = op.basis().derivative(it, xhat[t]);
          b.value[i] *= v;
          for (int s = 0; s < d; ++s)
            b.grad[s][i] *= (s == t) ? dv : v;
        }
    }
  return b;
}

} // namespace

DenseMatrix assemble_dense_quadrature(const DGOperator &op)
{
  const std::size_t n_total = op.n_dofs();
  if (n_total > dense_assembly_limit)
    throw std::invalid_argument("assemble_dense_quadrature: system too large for dense assembly");
  const int d = op.dim();
  const int n = op.n_per_direction();
  const int k = op.degree();
  const std::size_t nd = op.dofs_per_cell();
  const std::size_t nf = static_cast<std::size_t>(tensor::ipow(n, d - 1));
  const auto &quad = op.basis().quadrature();
  const Level &level = op.level();
  DenseMatrix a(n_total, n_total);

  for (std::size_t c = 0; c < level.n_cells(); ++c)
    {
      const auto vertices = level.cell_vertices(c);
      for (std::size_t q = 0; q < nd; ++q)
        {
          const Point xhat = op.reference_quad_point(q);
          const PointGeometry geo(vertices, d, xhat);
          double w = geo.det;
          for (int t = 0; t < d; ++t)
            w *= quad.weights[(q / tensor::ipow(n, t)) % n];
          const BasisAtPoint b = tabulate(op, xhat);
          std::vector<Point> grads(nd);
          for (std::size_t i = 0; i < nd; ++i)
            grads[i] = geo.physical({b.grad[0][i], d > 1 ? b.grad[1][i] : 0., d > 2 ? b.grad[2][i] : 0.}, d);
          for (std::size_t i = 0; i < nd; ++i)
            for (std::size_t j = 0; j < nd; ++j)
              a(c * nd + i, c * nd + j) += w * dot3(grads[i], grads[j]);
        }

      for (int face = 0; face < 2 * d; ++face)
        {
          const std::size_t nb = level.neighbor(c, face);
          if (nb != no_neighbor && nb < c)
            continue;
          const int tau = face / 2, side = face % 2;
          for (std::size_t qf = 0; qf < nf; ++qf)
            {
              const Point xhat = face_point(quad.points, d, tau, side, qf);
              const PointGeometry geo(vertices, d, xhat);
              const Point scaled = geo.scaled_normal(tau, side, d);
              const double area = norm(scaled);
              const Point normal{scaled[0] / area, scaled[1] / area, scaled[2] / area};
              const double w = face_weight(quad.weights, d, qf) * area;
              const BasisAtPoint b = tabulate(op, xhat);
              std::vector<double> dn(nd);
              for (std::size_t i = 0; i < nd; ++i)
                dn[i] = dot3(normal, geo.physical({b.grad[0][i], d > 1 ? b.grad[1][i] : 0.,
                                                   d > 2 ? b.grad[2][i] : 0.},
                                                  d));
              if (nb == no_neighbor)
                {
                  const double gamma = penalty(op.penalty_hat(), k, op.face_length(c, face),
                                               op.face_length(c, face));
                  for (std::size_t i = 0; i < nd; ++i)
                    for (std::size_t j = 0; j < nd; ++j)
                      a(c * nd + i, c * nd + j) += w * (gamma * b.value[j] * b.value[i] -
                                                        dn[j] * b.value[i] - b.value[j] * dn[i]);
                  continue;
                }

              Point xnb = xhat;
              xnb[tau] = 1 - side;
              const PointGeometry gnb(level.cell_vertices(nb), d, xnb);
              const BasisAtPoint bn = tabulate(op, xnb);
              std::vector<double> dn_nb(nd);
              for (std::size_t i = 0; i < nd; ++i)
                dn_nb[i] = dot3(normal, gnb.physical({bn.grad[0][i], d > 1 ? bn.grad[1][i] : 0.,
                                                      d > 2 ? bn.grad[2][i] : 0.},
                                                     d));
              const double sigma = 0.5 * penalty(op.penalty_hat(), k, op.face_length(c, face),
                                                 op.face_length(nb, face ^ 1));
              // jump and normal-derivative average of a basis function on either side
              const std::array<std::size_t, 2> cells{c, nb};
              const std::array<const std::vector<double> *, 2> jumps{&b.value, &bn.value};
              const std::array<const std::vector<double> *, 2> avgs{&dn, &dn_nb};
              const std::array<double, 2> sign{1., -1.};
              for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                  for (std::size_t i = 0; i < nd; ++i)
                    for (std::size_t j = 0; j < nd; ++j)
                      {
                        const double jv = sign[y] * (*jumps[y])[i];
                        const double ju = sign[x] * (*jumps[x])[j];
                        const double av = 0.5 * (*avgs[y])[i];
                        const double au = 0.5 * (*avgs[x])[j];
                        a(cells[y] * nd + i, cells[x] * nd + j) +=
                          w * (sigma * ju * jv - au * jv - ju * av);
                      }
            }
        }
    }
  return a;
}

void probe_couplings(const DGOperator &op,
                     const std::function<void(std::size_t, std::size_t, double)> &sink)
{
  const int d = op.dim();
  const std::size_t nd = op.dofs_per_cell();
  const Level &level = op.level();
  const std::size_t n_classes = static_cast<std::size_t>(tensor::ipow(3, d));
  std::vector<std::vector<std::size_t>> classes(n_classes);
  for (std::size_t c = 0; c < level.n_cells(); ++c)
    {
      const MultiIndex idx = level.cell_index(c);
      std::size_t cls = 0;
      for (int t = d - 1; t >= 0; --t)
        cls = 3 * cls + idx[t] % 3;
      classes[cls].push_back(c);
    }
  Vector x(op.n_dofs(), 0.), y(op.n_dofs());
  for (const auto &cls : classes)
    {
      if (cls.empty())
        continue;
      for (std::size_t i = 0; i < nd; ++i)
        {
          for (std::size_t c : cls)
            x[c * nd + i] = 1.;
          op.vmult(y, x);
          for (std::size_t c : cls)
            {
              x[c * nd + i] = 0.;
              const std::size_t col = c * nd + i;
              auto emit = [&](std::size_t cell) {
                for (std::size_t r = 0; r < nd; ++r)
                  sink(cell * nd + r, col, y[cell * nd + r]);
              };
              emit(c);
              for (int f = 0; f < 2 * d; ++f)
                if (const std::size_t nb = level.neighbor(c, f); nb != no_neighbor)
                  emit(nb);
            }
        }
    }
}

} // namespace tpsmg
