#pragma once

#include <cstdint>

namespace tpsmg::tensor
{

/// n^e for small integers.
constexpr std::int64_t ipow(std::int64_t n, int e)
{
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i)
    r *= n;
  return r;
}

/**
 * Sum-factorization building block: applies the n×n row-major matrix `mat`
 * along direction `dir` of an order-`dim` tensor with extent n in every
 * direction (direction 0 runs fastest). With `transpose` the matrix is
 * applied transposed; with `add` the result is accumulated into `out`.
 * `in` and `out` must not alias.
 */
void apply_1d(int dim, int n, int dir, const double *mat, const double *in, double *out,
              bool transpose = false, bool add = false);

/// FLOPs of one apply_1d call (one multiply and one add per term).
constexpr std::uint64_t apply_1d_flops(int dim, int n)
{
  return 2 * static_cast<std::uint64_t>(ipow(n, dim + 1));
}

/// out[j] = Σ_i v[i] in[.., i (along dir), ..]; out has n^(dim-1) entries.
void contract_dir(int dim, int n, int dir, const double *v, const double *in, double *out);

/// out[.., i (along dir), ..] += v[i] face[j]; the transpose of contract_dir.
void expand_dir(int dim, int n, int dir, const double *v, const double *face, double *out);

} // namespace tpsmg::tensor
