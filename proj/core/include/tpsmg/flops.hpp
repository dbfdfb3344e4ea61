#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

namespace tpsmg
{

/// Kernels tracked by the software FLOP counters.
enum class Kernel : int
{
  operator_apply = 0,
  local_solver,
  smoother_setup,
  transfer,
  coarse_solve,
  vector_ops,
  n_kernels
};

const char *kernel_name(Kernel k);

/**
 * Analytic floating point operation counters.
 *
 * Kernels add the number of additions, multiplications and divisions they
 * perform (each counted as one operation). Counting is disabled by default
 * and costs a single branch per kernel call when off.
 */
class FlopCounter
{
public:
  void enable(bool on = true) { enabled_ = on; }
  bool enabled() const { return enabled_; }

  void add(Kernel k, std::uint64_t n)
  {
    if (enabled_)
      counts_[static_cast<int>(k)] += n;
  }

  std::uint64_t get(Kernel k) const { return counts_[static_cast<int>(k)]; }
  std::uint64_t total() const;
  void reset() { counts_.fill(0); }

  /// Counts keyed by kernel name; kernels with zero count are included.
  std::map<std::string, std::uint64_t> counts() const;

private:
  bool enabled_ = false;
  std::array<std::uint64_t, static_cast<int>(Kernel::n_kernels)> counts_{};
};

inline void count_flops(FlopCounter *counter, Kernel k, std::uint64_t n)
{
  if (counter != nullptr)
    counter->add(k, n);
}

} // namespace tpsmg
