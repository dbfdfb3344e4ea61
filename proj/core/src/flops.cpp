#include "tpsmg/flops.hpp"

namespace tpsmg
{

const char *kernel_name(Kernel k)
{
  switch (k)
    {
    case Kernel::operator_apply:
      return "operator_apply";
    case Kernel::local_solver:
      return "local_solver";
    case Kernel::smoother_setup:
      return "smoother_setup";
    case Kernel::transfer:
      return "transfer";
    case Kernel::coarse_solve:
      return "coarse_solve";
    case Kernel::vector_ops:
      return "vector_ops";
    default:
      return "unknown";
    }
}

std::uint64_t FlopCounter::total() const
{
  std::uint64_t sum = 0;
  for (auto c : counts_)
    sum += c;
  return sum;
}

std::map<std::string, std::uint64_t> FlopCounter::counts() const
{
  std::map<std::string, std::uint64_t> out;
  for (int k = 0; k < static_cast<int>(Kernel::n_kernels); ++k)
    out[kernel_name(static_cast<Kernel>(k))] = counts_[k];
  return out;
}

} // namespace tpsmg
