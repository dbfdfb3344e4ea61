#include "tpsmg/krylov.hpp"

#include "tpsmg/polybasis.hpp"

#include <cmath>
#include <random>

namespace tpsmg
{

namespace
{

void apply_or_copy(const LinearOperator &op, std::span<double> dst, std::span<const double> src)
{
  if (op)
    op(dst, src);
  else
    std::copy(src.begin(), src.end(), dst.begin());
}

void finish(KrylovResult &result, double reduction)
{
  result.reduction = reduction;
  const auto &h = result.residual_history;
  result.tolerance = h.empty() ? 0. : h.front() * reduction;
  if (result.converged && h.size() > 1)
    result.fractional_iterations = fractional_iterations(h, reduction);
  else
    result.fractional_iterations = result.iterations;
}

} // namespace

double fractional_iterations(std::span<const double> history, double reduction)
{
  if (history.empty() || !(reduction > 0.))
    throw std::invalid_argument("fractional iterations need a history and a positive reduction");
  const double tol = history[0] * reduction;
  std::size_t nu = 0;
  while (nu < history.size() && history[nu] > tol)
    ++nu;
  if (nu == history.size())
    throw std::invalid_argument("history does not reach the tolerance");
  if (nu == 0)
    return 0.;
  const double prev = history[nu - 1], last = history[nu];
  if (last <= 0.)
    return static_cast<double>(nu);
  return static_cast<double>(nu) - 1. + std::log(prev / tol) / std::log(prev / last);
}

KrylovResult pcg(const LinearOperator &a, std::span<const double> b, std::span<double> x,
                 const LinearOperator &preconditioner, const KrylovOptions &options)
{
  const std::size_t n = b.size();
  if (x.size() != n)
    throw std::invalid_argument("pcg: size mismatch");
  KrylovResult result;
  Vector r(n), z(n), p(n), ap(n);
  a(ap, x);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = b[i] - ap[i];
  const double r0 = l2_norm(r);
  result.residual_history.push_back(r0);
  if (r0 == 0.)
    {
      result.converged = true;
      result.energy_history.push_back(0.);
      finish(result, options.reduction);
      return result;
    }
  apply_or_copy(preconditioner, z, r);
  double rz = dot(r, z);
  result.energy_history.push_back(std::sqrt(std::max(rz, 0.)));
  if (options.monitor)
    options.monitor(0, r, z);
  p = z;
  const double tol = options.reduction * r0;
  for (int it = 1; it <= options.max_iterations; ++it)
    {
      a(ap, p);
      const double pap = dot(p, ap);
      if (!(pap > 0.))
        break;
      const double alpha = rz / pap;
      axpy(alpha, p, x);
      axpy(-alpha, ap, r);
      const double rn = l2_norm(r);
      result.residual_history.push_back(rn);
      result.iterations = it;
      result.cg_alpha.push_back(alpha);
      apply_or_copy(preconditioner, z, r);
      const double rz_new = dot(r, z);
      result.energy_history.push_back(std::sqrt(std::max(rz_new, 0.)));
      if (options.monitor)
        options.monitor(it, r, z);
      if (rn <= tol)
        {
          result.converged = true;
          break;
        }
      const double beta = rz_new / rz;
      result.cg_beta.push_back(beta);
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i)
        p[i] = z[i] + beta * p[i];
    }
  finish(result, options.reduction);
  return result;
}

KrylovResult pgmres(const LinearOperator &a, std::span<const double> b, std::span<double> x,
                    const LinearOperator &preconditioner, const KrylovOptions &options)
{
  const std::size_t n = b.size();
  if (x.size() != n)
    throw std::invalid_argument("pgmres: size mismatch");
  if (options.restart < 1)
    throw std::invalid_argument("pgmres: restart must be positive");
  KrylovResult result;
  Vector r(n), w(n), zw(n);
  const auto true_residual = [&]() {
    a(w, x);
    for (std::size_t i = 0; i < n; ++i)
      r[i] = b[i] - w[i];
    return l2_norm(r);
  };
  double beta = true_residual();
  result.residual_history.push_back(beta);
  const double tol = options.reduction * beta;
  if (beta == 0.)
    {
      result.converged = true;
      finish(result, options.reduction);
      return result;
    }
  const int m = options.restart;
  int total = 0;
  while (total < options.max_iterations)
    {
      std::vector<Vector> v;
      v.emplace_back(r);
      for (double &e : v[0])
        e /= beta;
      // Hessenberg columns, Givens rotations, and the rotated right-hand side
      std::vector<std::vector<double>> hcol;
      std::vector<double> cs, sn, g{beta};
      int k = 0;
      bool done = false;
      while (k < m && total < options.max_iterations)
        {
          apply_or_copy(preconditioner, zw, v[k]);
          a(w, zw);
          std::vector<double> h(k + 2, 0.);
          for (int i = 0; i <= k; ++i)
            {
              h[i] = dot(w, v[i]);
              axpy(-h[i], v[i], w);
            }
          h[k + 1] = l2_norm(w);
          for (int i = 0; i < k; ++i)
            {
              const double t = cs[i] * h[i] + sn[i] * h[i + 1];
              h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
              h[i] = t;
            }
          const double denom = std::hypot(h[k], h[k + 1]);
          const double c = denom == 0. ? 1. : h[k] / denom, s = denom == 0. ? 0. : h[k + 1] / denom;
          cs.push_back(c);
          sn.push_back(s);
          const double hk1 = h[k + 1];
          h[k] = c * h[k] + s * h[k + 1];
          h[k + 1] = 0.;
          g.push_back(-s * g[k]);
          g[k] *= c;
          hcol.push_back(std::move(h));
          ++k;
          ++total;
          result.residual_history.push_back(std::abs(g[k]));
          result.iterations = total;
          if (std::abs(g[k]) <= tol || hk1 == 0.)
            {
              done = true;
              break;
            }
          v.emplace_back(w);
          for (double &e : v.back())
            e /= hk1;
        }
      // y = H⁻¹ g, x += P V y
      std::vector<double> y(k);
      for (int i = k - 1; i >= 0; --i)
        {
          double s = g[i];
          for (int j = i + 1; j < k; ++j)
            s -= hcol[j][i] * y[j];
          y[i] = s / hcol[i][i];
        }
      std::fill(w.begin(), w.end(), 0.);
      for (int j = 0; j < k; ++j)
        axpy(y[j], v[j], w);
      apply_or_copy(preconditioner, zw, w);
      axpy(1., zw, x);
      beta = true_residual();
      if (beta <= tol || done)
        result.residual_history.back() = beta;
      if (beta <= tol)
        {
          result.converged = true;
          break;
        }
    }
  finish(result, options.reduction);
  return result;
}

double estimate_largest_eigenvalue(const LinearOperator &a, const LinearOperator &preconditioner, std::size_t n,
                                   int steps, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1., 1.);
  Vector b(n), x(n, 0.);
  for (double &v : b)
    v = dist(rng);
  KrylovOptions options;
  options.reduction = 1e-300;
  options.max_iterations = steps;
  const KrylovResult cg = pcg(a, b, x, preconditioner, options);
  const std::size_t m = cg.cg_alpha.size();
  if (m == 0)
    throw NumericalError("Lanczos estimate: no CG step performed");
  DenseMatrix t(m, m);
  for (std::size_t i = 0; i < m; ++i)
    {
      t(i, i) = 1. / cg.cg_alpha[i] + (i > 0 ? cg.cg_beta[i - 1] / cg.cg_alpha[i - 1] : 0.);
      if (i + 1 < m)
        {
          const double off = std::sqrt(cg.cg_beta[i]) / cg.cg_alpha[i];
          t(i, i + 1) = off;
          t(i + 1, i) = off;
        }
    }
  const EigenPair1D eig = generalized_sym_eig(t, DenseMatrix::identity(m));
  return eig.values.back();
}

} // namespace tpsmg
