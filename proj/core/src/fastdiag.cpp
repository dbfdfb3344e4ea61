#include "tpsmg/fastdiag.hpp"

#include "tpsmg/tensor.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace tpsmg
{

void kronecker_matvec(const std::vector<const DenseMatrix *> &factors, std::span<const double> u,
                      std::span<double> out, bool transpose, FlopCounter *counter)
{
  const int dim = static_cast<int>(factors.size());
  if (dim < 1)
    throw std::invalid_argument("kronecker_matvec: need at least one factor");
  const int n = static_cast<int>(factors[0]->rows());
  for (const auto *f : factors)
    if (static_cast<int>(f->rows()) != n || static_cast<int>(f->cols()) != n)
      throw std::invalid_argument("kronecker_matvec: factors must be square of equal size");
  const std::size_t size = static_cast<std::size_t>(tensor::ipow(n, dim));
  if (u.size() != size || out.size() != size)
    throw std::invalid_argument("kronecker_matvec: tensor size does not match the factors");

  thread_local std::vector<double> a, b;
  a.assign(u.begin(), u.end());
  b.resize(size);
  for (int t = 0; t < dim; ++t)
    {
      tensor::apply_1d(dim, n, t, factors[t]->data(), a.data(), b.data(), transpose);
      std::swap(a, b);
    }
  std::copy(a.begin(), a.end(), out.begin());
  count_flops(counter, Kernel::local_solver, dim * tensor::apply_1d_flops(dim, n));
}

LocalSolver::LocalSolver(const std::vector<UnivariateFactors> &factors, SubdomainKind kind,
                         SolverProvenance provenance, bool keep_factors, FlopCounter *setup_counter)
  : dim_(static_cast<int>(factors.size())),
    extent_(factors.empty() ? 0 : static_cast<int>(factors[0].matrix.rows())),
    size_(static_cast<std::size_t>(tensor::ipow(extent_, dim_))),
    kind_(kind),
    provenance_(provenance)
{
  if (dim_ < 1 || dim_ > 3)
    throw std::invalid_argument("LocalSolver: need one to three univariate factors");
  const std::size_t n = static_cast<std::size_t>(extent_);
  z_.resize(dim_ * n * n);
  lambda_.resize(dim_ * n);
  double min_sum = 0.;
  for (int t = 0; t < dim_; ++t)
    {
      const auto &f = factors[t];
      if (f.matrix.rows() != n || f.mass.rows() != n)
        throw std::invalid_argument("LocalSolver: univariate factors differ in size");
      const EigenPair1D e = generalized_sym_eig(f.matrix, f.mass, setup_counter);
      std::copy(e.vectors.data(), e.vectors.data() + n * n, z_.begin() + t * n * n);
      std::copy(e.values.begin(), e.values.end(), lambda_.begin() + t * n);
      min_sum += e.values.front();
      if (keep_factors)
        {
          mass_.push_back(f.mass);
          matrix_.push_back(f.matrix);
        }
    }
  if (!(min_sum > 0.))
    throw NumericalError("LocalSolver: singular local solver (nonpositive eigenvalue sum)");
}

double LocalSolver::eigenvalue_sum(std::size_t i) const
{
  double s = 0.;
  for (int t = 0; t < dim_; ++t)
    {
      s += lambda_[t * extent_ + i % extent_];
      i /= extent_;
    }
  return s;
}

void LocalSolver::apply_inverse(std::span<const double> r, std::span<double> x,
                                FlopCounter *counter) const
{
  if (r.size() != size_ || x.size() != size_)
    throw std::invalid_argument("LocalSolver::apply_inverse: vector size does not match the subdomain");
  thread_local std::vector<double> a, b;
  a.assign(r.begin(), r.end());
  b.resize(size_);
  for (int t = 0; t < dim_; ++t)
    {
      tensor::apply_1d(dim_, extent_, t, eigenvectors(t), a.data(), b.data(), true);
      std::swap(a, b);
    }
  // divide by Λ(i), accumulated direction by direction
  if (dim_ == 1)
    for (int i = 0; i < extent_; ++i)
      a[i] /= lambda_[i];
  else if (dim_ == 2)
    for (int j = 0, idx = 0; j < extent_; ++j)
      for (int i = 0; i < extent_; ++i, ++idx)
        a[idx] /= lambda_[i] + lambda_[extent_ + j];
  else
    for (int l = 0, idx = 0; l < extent_; ++l)
      for (int j = 0; j < extent_; ++j)
        for (int i = 0; i < extent_; ++i, ++idx)
          a[idx] /= lambda_[i] + lambda_[extent_ + j] + lambda_[2 * extent_ + l];
  for (int t = 0; t < dim_; ++t)
    {
      tensor::apply_1d(dim_, extent_, t, eigenvectors(t), a.data(), b.data());
      std::swap(a, b);
    }
  std::copy(a.begin(), a.end(), x.begin());
  count_flops(counter, Kernel::local_solver, apply_inverse_flops());
}

std::uint64_t LocalSolver::apply_inverse_flops() const
{
  return 2 * dim_ * tensor::apply_1d_flops(dim_, extent_) + dim_ * size_;
}

void LocalSolver::apply(std::span<const double> x, std::span<double> y) const
{
  if (!has_factors())
    throw std::logic_error("LocalSolver::apply: univariate factors were not kept");
  if (x.size() != size_ || y.size() != size_)
    throw std::invalid_argument("LocalSolver::apply: vector size does not match the subdomain");
  std::fill(y.begin(), y.end(), 0.);
  Vector term(size_);
  std::vector<const DenseMatrix *> mats(dim_);
  for (int t = 0; t < dim_; ++t)
    {
      for (int s = 0; s < dim_; ++s)
        mats[s] = s == t ? &matrix_[s] : &mass_[s];
      kronecker_matvec(mats, x, term);
      for (std::size_t i = 0; i < size_; ++i)
        y[i] += term[i];
    }
}

DenseMatrix LocalSolver::dense_matrix() const
{
  if (!has_factors())
    throw std::logic_error("LocalSolver::dense_matrix: univariate factors were not kept");
  DenseMatrix sum(size_, size_);
  for (int t = 0; t < dim_; ++t)
    {
      // direction 0 runs fastest, so it is the rightmost Kronecker factor
      DenseMatrix term = t == dim_ - 1 ? matrix_[dim_ - 1] : mass_[dim_ - 1];
      for (int s = dim_ - 2; s >= 0; --s)
        term = kronecker(term, s == t ? matrix_[s] : mass_[s]);
      sum = sum + term;
    }
  return sum;
}

std::vector<UnivariateFactors> cell_factors(const DGOperator &op, std::size_t cell,
                                            FlopCounter *setup_counter)
{
  const Level &level = op.level();
  const int d = op.dim();
  std::vector<UnivariateFactors> factors;
  if (level.is_cartesian())
    {
      const double h = level.cartesian_length();
      for (int t = 0; t < d; ++t)
        {
          const FaceSide left = level.at_boundary(cell, 2 * t) ? FaceSide::at_boundary() : FaceSide::interior(h);
          const FaceSide right = level.at_boundary(cell, 2 * t + 1) ? FaceSide::at_boundary() : FaceSide::interior(h);
          factors.push_back(univariate_cell_factors(op.basis(), h, left, right, op.penalty_hat(), setup_counter));
        }
      return factors;
    }
  const auto own = surrogate_lengths(level.cell_vertices(cell), d);
  for (int t = 0; t < d; ++t)
    {
      std::array<FaceSide, 2> sides;
      for (int s = 0; s < 2; ++s)
        {
          const std::size_t nb = level.neighbor(cell, 2 * t + s);
          sides[s] = nb == no_neighbor
                       ? FaceSide::at_boundary()
                       : FaceSide::interior(surrogate_lengths(level.cell_vertices(nb), d)[t]);
        }
      factors.push_back(univariate_cell_factors(op.basis(), own[t], sides[0], sides[1],
                                                op.penalty_hat(), setup_counter));
    }
  return factors;
}

LocalSolver build_cell_solver(const DGOperator &op, std::size_t cell, bool surrogate,
                              bool keep_factors, FlopCounter *setup_counter)
{
  if (!surrogate && !op.level().is_cartesian())
    throw std::invalid_argument("build_cell_solver: exact solvers require a Cartesian level");
  return LocalSolver(cell_factors(op, cell, setup_counter), SubdomainKind::cell,
                     surrogate ? SolverProvenance::surrogate : SolverProvenance::exact, keep_factors,
                     setup_counter);
}

LocalSolver build_patch_solver(const DGOperator &op, const VertexPatch &patch, bool keep_factors,
                               FlopCounter *setup_counter)
{
  const Level &level = op.level();
  if (!level.is_cartesian())
    throw std::invalid_argument("build_patch_solver: vertex patch solvers require a Cartesian level");
  const int d = op.dim();
  const double h = level.cartesian_length();
  std::vector<UnivariateFactors> factors;
  for (int t = 0; t < d; ++t)
    {
      const std::size_t lower = patch.cells[0];
      const std::size_t upper = patch.cells[1u << t];
      const FaceSide left = level.at_boundary(lower, 2 * t) ? FaceSide::at_boundary() : FaceSide::interior(h);
      const FaceSide right = level.at_boundary(upper, 2 * t + 1) ? FaceSide::at_boundary() : FaceSide::interior(h);
      factors.push_back(univariate_patch_factors(op.basis(), h, h, left, right, op.penalty_hat(), setup_counter));
    }
  return LocalSolver(factors, SubdomainKind::vertex_patch, SolverProvenance::exact, keep_factors,
                     setup_counter);
}

namespace
{

/// Bit pattern of boundary faces: bit f set when face f lies on the boundary.
unsigned boundary_pattern(const Level &level, const std::array<std::size_t, 2 * 3> &cells_per_face)
{
  unsigned pattern = 0;
  for (int f = 0; f < 2 * level.dim(); ++f)
    if (level.at_boundary(cells_per_face[f], f))
      pattern |= 1u << f;
  return pattern;
}

} // namespace

SolverSet SolverSet::for_cells(const DGOperator &op, FlopCounter *setup_counter)
{
  const Level &level = op.level();
  SolverSet set;
  set.index_.resize(level.n_cells());
  if (!level.is_cartesian())
    {
      set.unique_.reserve(level.n_cells());
      for (std::size_t c = 0; c < level.n_cells(); ++c)
        {
          set.unique_.push_back(std::make_shared<const LocalSolver>(
            build_cell_solver(op, c, true, false, setup_counter)));
          set.index_[c] = c;
        }
      return set;
    }
  std::map<unsigned, std::size_t> classes;
  for (std::size_t c = 0; c < level.n_cells(); ++c)
    {
      std::array<std::size_t, 6> cells;
      cells.fill(c);
      const unsigned key = boundary_pattern(level, cells);
      auto [it, inserted] = classes.try_emplace(key, set.unique_.size());
      if (inserted)
        set.unique_.push_back(std::make_shared<const LocalSolver>(
          build_cell_solver(op, c, false, false, setup_counter)));
      set.index_[c] = it->second;
    }
  return set;
}

SolverSet SolverSet::for_patches(const DGOperator &op, const std::vector<VertexPatch> &patches,
                                 FlopCounter *setup_counter)
{
  const Level &level = op.level();
  SolverSet set;
  set.index_.resize(patches.size());
  std::map<unsigned, std::size_t> classes;
  for (std::size_t j = 0; j < patches.size(); ++j)
    {
      std::array<std::size_t, 6> cells{};
      for (int t = 0; t < level.dim(); ++t)
        {
          cells[2 * t] = patches[j].cells[0];
          cells[2 * t + 1] = patches[j].cells[1u << t];
        }
      const unsigned key = boundary_pattern(level, cells);
      auto [it, inserted] = classes.try_emplace(key, set.unique_.size());
      if (inserted)
        set.unique_.push_back(std::make_shared<const LocalSolver>(
          build_patch_solver(op, patches[j], false, setup_counter)));
      set.index_[j] = it->second;
    }
  return set;
}

std::vector<std::size_t> cell_dof_indices(const DGOperator &op, std::size_t cell)
{
  std::vector<std::size_t> idx(op.dofs_per_cell());
  for (std::size_t i = 0; i < idx.size(); ++i)
    idx[i] = cell * op.dofs_per_cell() + i;
  return idx;
}

std::vector<std::size_t> patch_dof_indices(const DGOperator &op, const VertexPatch &patch)
{
  const int d = op.dim();
  const std::size_t n = static_cast<std::size_t>(op.n_per_direction());
  const std::size_t m = 2 * n;
  const std::size_t size = static_cast<std::size_t>(tensor::ipow(static_cast<int>(m), d));
  std::vector<std::size_t> idx(size);
  for (std::size_t j = 0; j < size; ++j)
    {
      std::size_t r = j, local = 0, stride = 1;
      unsigned block = 0;
      for (int t = 0; t < d; ++t)
        {
          const std::size_t jt = r % m;
          r /= m;
          block |= static_cast<unsigned>(jt / n) << t;
          local += (jt % n) * stride;
          stride *= n;
        }
      idx[j] = patch.cells[block] * op.dofs_per_cell() + local;
    }
  return idx;
}

DenseMatrix restrict_dense(const DenseMatrix &a, const std::vector<std::size_t> &indices)
{
  DenseMatrix r(indices.size(), indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i)
    for (std::size_t j = 0; j < indices.size(); ++j)
      r(i, j) = a(indices[i], indices[j]);
  return r;
}

double estimate_local_stability(const DGOperator &op, const std::vector<std::size_t> &indices,
                                const LocalSolver &solver, std::size_t max_size)
{
  const std::size_t m = indices.size();
  if (m > max_size)
    throw std::invalid_argument("estimate_local_stability: subdomain exceeds the dense size guard");
  if (m != solver.size())
    throw std::invalid_argument("estimate_local_stability: solver does not match the subdomain");
  DenseMatrix a(m, m);
  Vector e(op.n_dofs(), 0.), col(op.n_dofs());
  for (std::size_t j = 0; j < m; ++j)
    {
      e[indices[j]] = 1.;
      op.vmult(col, e);
      e[indices[j]] = 0.;
      for (std::size_t i = 0; i < m; ++i)
        a(i, j) = col[indices[i]];
    }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < i; ++j)
      {
        const double s = 0.5 * (a(i, j) + a(j, i));
        a(i, j) = s;
        a(j, i) = s;
      }
  const EigenPair1D e_pair = generalized_sym_eig(a, solver.dense_matrix());
  return e_pair.values.back();
}

} // namespace tpsmg
