#include "tpsmg/tensor.hpp"

namespace tpsmg::tensor
{

namespace
{

template <int N, bool transpose, bool add>
void apply_1d_impl(int n_rt, int inner, int outer, const double *mat, const double *in,
                   double *out)
{
  const int n = N > 0 ? N : n_rt;
  const int stride = n * inner;
  if (inner == 1)
    {
      for (int o = 0; o < outer; ++o)
        {
          const double *src = in + o * stride;
          double *dst = out + o * stride;
          for (int i = 0; i < n; ++i)
            {
              double s = 0.;
              for (int j = 0; j < n; ++j)
                s += (transpose ? mat[j * n + i] : mat[i * n + j]) * src[j];
              if constexpr (add)
                dst[i] += s;
              else
                dst[i] = s;
            }
        }
      return;
    }
  for (int o = 0; o < outer; ++o)
    {
      const double *src = in + o * stride;
      double *dst = out + o * stride;
      for (int i = 0; i < n; ++i)
        {
          double *d = dst + i * inner;
          if constexpr (!add)
            for (int m = 0; m < inner; ++m)
              d[m] = 0.;
          for (int j = 0; j < n; ++j)
            {
              const double a = transpose ? mat[j * n + i] : mat[i * n + j];
              const double *s = src + j * inner;
              for (int m = 0; m < inner; ++m)
                d[m] += a * s[m];
            }
        }
    }
}

template <int N>
void dispatch_flags(int n, int inner, int outer, const double *mat, const double *in, double *out,
                    bool transpose, bool add)
{
  if (transpose)
    {
      if (add)
        apply_1d_impl<N, true, true>(n, inner, outer, mat, in, out);
      else
        apply_1d_impl<N, true, false>(n, inner, outer, mat, in, out);
    }
  else
    {
      if (add)
        apply_1d_impl<N, false, true>(n, inner, outer, mat, in, out);
      else
        apply_1d_impl<N, false, false>(n, inner, outer, mat, in, out);
    }
}

} // namespace

void apply_1d(int dim, int n, int dir, const double *mat, const double *in, double *out,
              bool transpose, bool add)
{
  const int inner = static_cast<int>(ipow(n, dir));
  const int outer = static_cast<int>(ipow(n, dim - dir - 1));
#define TPSMG_CASE(NN)                                                                       \
  case NN:                                                                                   \
    dispatch_flags<NN>(n, inner, outer, mat, in, out, transpose, add);                        \
    return;
  switch (n)
    {
      TPSMG_CASE(2)
      TPSMG_CASE(3)
      TPSMG_CASE(4)
      TPSMG_CASE(5)
      TPSMG_CASE(6)
      TPSMG_CASE(7)
      TPSMG_CASE(8)
      TPSMG_CASE(9)
      TPSMG_CASE(10)
      TPSMG_CASE(12)
      TPSMG_CASE(16)
      TPSMG_CASE(24)
      TPSMG_CASE(32)
      default:
        dispatch_flags<0>(n, inner, outer, mat, in, out, transpose, add);
    }
#undef TPSMG_CASE
}

void contract_dir(int dim, int n, int dir, const double *v, const double *in, double *out)
{
  const int inner = static_cast<int>(ipow(n, dir));
  const int outer = static_cast<int>(ipow(n, dim - dir - 1));
  for (int o = 0; o < outer; ++o)
    {
      const double *src = in + o * n * inner;
      double *dst = out + o * inner;
      for (int m = 0; m < inner; ++m)
        dst[m] = 0.;
      for (int j = 0; j < n; ++j)
        {
          const double a = v[j];
          const double *s = src + j * inner;
          for (int m = 0; m < inner; ++m)
            dst[m] += a * s[m];
        }
    }
}

void expand_dir(int dim, int n, int dir, const double *v, const double *face, double *out)
{
  const int inner = static_cast<int>(ipow(n, dir));
  const int outer = static_cast<int>(ipow(n, dim - dir - 1));
  for (int o = 0; o < outer; ++o)
    {
      const double *src = face + o * inner;
      double *dst = out + o * n * inner;
      for (int j = 0; j < n; ++j)
        {
          const double a = v[j];
          double *d = dst + j * inner;
          for (int m = 0; m < inner; ++m)
            d[m] += a * src[m];
        }
    }
}

} // namespace tpsmg::tensor
