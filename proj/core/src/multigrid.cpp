#include "tpsmg/multigrid.hpp"

#include "tpsmg/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace tpsmg
{

std::array<DenseMatrix, 2> embedding_matrices(const Basis1D &basis)
{
  const std::size_t n = basis.n_dofs();
  std::array<DenseMatrix, 2> e{DenseMatrix(n, n), DenseMatrix(n, n)};
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        e[c](i, j) = basis.value(j, 0.5 * (basis.nodes()[i] + c));
  return e;
}

Transfer::Transfer(const MeshHierarchy &mesh, int degree)
  : mesh_(mesh), n_(degree + 1),
    dofs_per_cell_(static_cast<std::size_t>(tensor::ipow(degree + 1, mesh.dim))),
    embedding_(embedding_matrices(Basis1D(degree, gauss_quadrature(degree + 1))))
{}

void Transfer::check_sizes(std::size_t coarse_level, std::size_t n_coarse, std::size_t n_fine) const
{
  if (coarse_level + 1 >= mesh_.n_levels())
    throw std::out_of_range("transfer: no finer level");
  if (n_coarse != mesh_.level(coarse_level).n_cells() * dofs_per_cell_ ||
      n_fine != mesh_.level(coarse_level + 1).n_cells() * dofs_per_cell_)
    throw std::invalid_argument("transfer: vector sizes do not match the levels");
}

void Transfer::prolongate(std::size_t coarse_level, std::span<const double> coarse, std::span<double> fine,
                          FlopCounter *counter) const
{
  check_sizes(coarse_level, coarse.size(), fine.size());
  std::fill(fine.begin(), fine.end(), 0.);
  prolongate_add(coarse_level, coarse, fine, counter);
}

void Transfer::prolongate_add(std::size_t coarse_level, std::span<const double> coarse, std::span<double> fine,
                              FlopCounter *counter) const
{
  check_sizes(coarse_level, coarse.size(), fine.size());
  const int d = mesh_.dim;
  const std::size_t nd = dofs_per_cell_;
  Vector a(nd), b(nd);
  const std::size_t n_coarse_cells = mesh_.level(coarse_level).n_cells();
  for (std::size_t c = 0; c < n_coarse_cells; ++c)
    for (unsigned ch = 0; ch < (1u << d); ++ch)
      {
        const double *in = coarse.data() + c * nd;
        double *bufs[2] = {a.data(), b.data()};
        int cur = 0;
        for (int t = 0; t < d; ++t)
          {
            tensor::apply_1d(d, n_, t, embedding_[(ch >> t) & 1u].data(), in, bufs[cur]);
            in = bufs[cur];
            cur ^= 1;
          }
        double *dst = fine.data() + mesh_.child(coarse_level, c, ch) * nd;
        for (std::size_t i = 0; i < nd; ++i)
          dst[i] += in[i];
      }
  count_flops(counter, Kernel::transfer,
              n_coarse_cells * (1u << d) * (d * tensor::apply_1d_flops(d, n_) + nd));
}

void Transfer::restrict_to_coarse(std::size_t coarse_level, std::span<const double> fine, std::span<double> coarse,
                                  FlopCounter *counter) const
{
  check_sizes(coarse_level, coarse.size(), fine.size());
  const int d = mesh_.dim;
  const std::size_t nd = dofs_per_cell_;
  Vector a(nd), b(nd);
  const std::size_t n_coarse_cells = mesh_.level(coarse_level).n_cells();
  for (std::size_t c = 0; c < n_coarse_cells; ++c)
    {
      double *dst = coarse.data() + c * nd;
      std::fill(dst, dst + nd, 0.);
      for (unsigned ch = 0; ch < (1u << d); ++ch)
        {
          const double *in = fine.data() + mesh_.child(coarse_level, c, ch) * nd;
          double *bufs[2] = {a.data(), b.data()};
          int cur = 0;
          for (int t = 0; t < d; ++t)
            {
              tensor::apply_1d(d, n_, t, embedding_[(ch >> t) & 1u].data(), in, bufs[cur], true);
              in = bufs[cur];
              cur ^= 1;
            }
          for (std::size_t i = 0; i < nd; ++i)
            dst[i] += in[i];
        }
    }
  count_flops(counter, Kernel::transfer,
              n_coarse_cells * (1u << d) * (d * tensor::apply_1d_flops(d, n_) + nd));
}

const char *to_string(CoarseSolverKind kind)
{
  return kind == CoarseSolverKind::direct ? "direct" : "chebyshev";
}

namespace
{

BandCholesky assemble_band(const DGOperator &op)
{
  struct Entry
  {
    std::size_t row, col;
    double value;
  };
  std::vector<Entry> entries;
  std::size_t bandwidth = 0;
  probe_couplings(op, [&](std::size_t row, std::size_t col, double value) {
    if (row >= col && value != 0.)
      {
        entries.push_back({row, col, value});
        bandwidth = std::max(bandwidth, row - col);
      }
  });
  BandCholesky band(op.n_dofs(), bandwidth);
  for (const auto &e : entries)
    band.add(e.row, e.col, e.value);
  return band;
}

} // namespace

DirectCoarseSolver::DirectCoarseSolver(const DGOperator &op, FlopCounter *setup_counter)
  : op_(op), factor_(assemble_band(op))
{
  const std::size_t flops = factor_.factorize();
  count_flops(setup_counter, Kernel::coarse_solve, flops);
}

void DirectCoarseSolver::solve(std::span<double> x, std::span<const double> b) const
{
  if (x.size() != op_.n_dofs() || b.size() != op_.n_dofs())
    throw std::invalid_argument("coarse solve: size mismatch");
  std::copy(b.begin(), b.end(), x.begin());
  factor_.solve(x);
  count_flops(op_.flop_counter(), Kernel::coarse_solve, 2 * x.size() * (2 * factor_.half_bandwidth() + 1));
}

ChebyshevCoarseSolver::ChebyshevCoarseSolver(const DGOperator &op, double tolerance, FlopCounter *setup_counter)
  : op_(op), tolerance_(tolerance), block_solvers_(SolverSet::for_cells(op, setup_counter))
{
  if (!(tolerance > 0.))
    throw std::invalid_argument("coarse tolerance must be positive");
  const LinearOperator a = [this](std::span<double> dst, std::span<const double> src) { op_.vmult(dst, src); };
  const LinearOperator p = [this](std::span<double> dst, std::span<const double> src) { precondition(dst, src); };
  lambda_max_ = estimate_largest_eigenvalue(a, p, op.n_dofs(), 20);
}

void ChebyshevCoarseSolver::precondition(std::span<double> z, std::span<const double> r) const
{
  const std::size_t nd = op_.dofs_per_cell();
  for (std::size_t c = 0; c < op_.n_cells(); ++c)
    block_solvers_[c].apply_inverse(r.subspan(c * nd, nd), z.subspan(c * nd, nd), op_.flop_counter());
}

void ChebyshevCoarseSolver::solve(std::span<double> x, std::span<const double> b) const
{
  const std::size_t n = op_.n_dofs();
  if (x.size() != n || b.size() != n)
    throw std::invalid_argument("coarse solve: size mismatch");
  std::fill(x.begin(), x.end(), 0.);
  last_iterations_ = 0;
  const double b_norm = l2_norm(b);
  if (b_norm == 0.)
    return;
  const double lmax = 1.2 * lambda_max_, lmin = 0.06 * lambda_max_;
  const double theta = 0.5 * (lmax + lmin), delta = 0.5 * (lmax - lmin);
  const double sigma = theta / delta;
  double rho = 1. / sigma;
  Vector r(b.begin(), b.end()), z(n), d(n), ad(n);
  precondition(z, r);
  for (std::size_t i = 0; i < n; ++i)
    d[i] = z[i] / theta;
  const std::size_t cap = 10 * n;
  for (std::size_t it = 1; it <= cap; ++it)
    {
      axpy(1., d, x);
      op_.vmult(ad, d);
      axpy(-1., ad, r);
      last_iterations_ = static_cast<int>(it);
      if (l2_norm(r) <= tolerance_ * b_norm)
        {
          count_flops(op_.flop_counter(), Kernel::vector_ops, it * 8 * n);
          return;
        }
      const double rho_new = 1. / (2. * sigma - rho);
      precondition(z, r);
      for (std::size_t i = 0; i < n; ++i)
        d[i] = rho_new * rho * d[i] + 2. * rho_new / delta * z[i];
      rho = rho_new;
    }
  throw NumericalError("Chebyshev coarse solver exceeded its iteration cap");
}

Multigrid::Multigrid(const MeshHierarchy &mesh, std::size_t finest, int degree, double penalty_hat,
                     const MultigridConfig &config, FlopCounter *counter, FlopCounter *setup_counter)
  : mesh_(mesh), finest_(finest), config_(config), counter_(counter), transfer_(mesh, degree)
{
  if (finest >= mesh.n_levels())
    throw std::out_of_range("multigrid: finest level not in the hierarchy");
  config_.smoother.validate();
  for (std::size_t l = 0; l <= finest; ++l)
    {
      operators_.push_back(std::make_unique<DGOperator>(mesh, l, degree, penalty_hat));
      operators_.back()->set_flop_counter(counter);
    }
  smoothers_.resize(finest + 1);
  for (std::size_t l = 1; l <= finest; ++l)
    smoothers_[l] = std::make_unique<SchwarzSmoother>(*operators_[l], config_.smoother, setup_counter);
  if (config_.coarse == CoarseSolverKind::direct)
    coarse_ = std::make_unique<DirectCoarseSolver>(*operators_[0], setup_counter);
  else
    coarse_ = std::make_unique<ChebyshevCoarseSolver>(*operators_[0], config_.coarse_tolerance, setup_counter);
}

void Multigrid::vcycle(std::size_t l, std::span<double> x, std::span<const double> b) const
{
  if (l > finest_)
    throw std::out_of_range("vcycle: level not built");
  const DGOperator &op = *operators_[l];
  if (x.size() != op.n_dofs() || b.size() != op.n_dofs())
    throw std::invalid_argument("vcycle: size mismatch");
  cycle(l, x, b, false);
}

void Multigrid::cycle(std::size_t l, std::span<double> x, std::span<const double> b, bool zero_guess) const
{
  const DGOperator &op = *operators_[l];
  if (l == 0)
    {
      coarse_->solve(x, b);
      return;
    }
  const SchwarzSmoother &smoother = *smoothers_[l];
  smoother.pre_smooth(x, b, zero_guess);
  Vector r(op.n_dofs());
  compute_residual(op, x, b, r);
  const std::size_t nc = operators_[l - 1]->n_dofs();
  Vector rc(nc), ec(nc, 0.);
  transfer_.restrict_to_coarse(l - 1, r, rc, counter_);
  cycle(l - 1, ec, rc, true);
  transfer_.prolongate_add(l - 1, ec, x, counter_);
  smoother.post_smooth(x, b);
}

void Multigrid::vmult(std::span<double> dst, std::span<const double> src) const
{
  if (dst.size() != operators_[finest_]->n_dofs() || src.size() != dst.size())
    throw std::invalid_argument("vcycle: size mismatch");
  std::fill(dst.begin(), dst.end(), 0.);
  cycle(finest_, dst, src, true);
}

LinearOperator Multigrid::as_preconditioner() const
{
  return [this](std::span<double> dst, std::span<const double> src) { vmult(dst, src); };
}

LinearOperator Multigrid::as_operator() const
{
  return [this](std::span<double> dst, std::span<const double> src) { operators_[finest_]->vmult(dst, src); };
}

} // namespace tpsmg
