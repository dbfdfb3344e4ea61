#include "tpsmg/smoothers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tpsmg
{

const char *to_string(SmootherKind kind)
{
  switch (kind)
    {
    case SmootherKind::acs:
      return "ACS";
    case SmootherKind::mcs:
      return "MCS";
    case SmootherKind::avs:
      return "AVS";
    case SmootherKind::mvs:
      return "MVS";
    }
  return "?";
}

SmootherKind parse_smoother_kind(std::string_view name)
{
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "acs")
    return SmootherKind::acs;
  if (lower == "mcs")
    return SmootherKind::mcs;
  if (lower == "avs")
    return SmootherKind::avs;
  if (lower == "mvs")
    return SmootherKind::mvs;
  throw std::invalid_argument("unknown smoother '" + std::string(name) + "'");
}

const char *to_string(ColoringChoice choice)
{
  return choice == ColoringChoice::structured ? "structured" : "graph";
}

ColoringChoice parse_coloring(std::string_view name)
{
  if (name == "structured")
    return ColoringChoice::structured;
  if (name == "graph")
    return ColoringChoice::graph;
  throw std::invalid_argument("unknown coloring '" + std::string(name) + "'");
}

bool is_additive(SmootherKind kind)
{
  return kind == SmootherKind::acs || kind == SmootherKind::avs;
}

bool uses_vertex_patches(SmootherKind kind)
{
  return kind == SmootherKind::avs || kind == SmootherKind::mvs;
}

double default_omega(SmootherKind kind, bool distorted, int dim)
{
  switch (kind)
    {
    case SmootherKind::acs:
      return distorted ? 0.5 : 0.7;
    case SmootherKind::mcs:
      return distorted ? 0.75 : 1.;
    case SmootherKind::avs:
      return 1. / static_cast<double>(1 << dim);
    case SmootherKind::mvs:
      return 1.;
    }
  return 1.;
}

void SmootherConfig::validate() const
{
  if (!(omega > 0. && omega <= 1.))
    throw std::invalid_argument("relaxation parameter must lie in (0, 1]");
  if (m_pre < 0 || m_post < 0)
    throw std::invalid_argument("smoothing step counts must be nonnegative");
}

SubdomainMap SubdomainMap::cells(std::size_t n_cells, std::size_t dofs_per_cell)
{
  SubdomainMap map;
  map.contiguous_ = true;
  map.n_blocks_ = n_cells;
  map.block_ = dofs_per_cell;
  map.n_global_ = n_cells * dofs_per_cell;
  return map;
}

SubdomainMap SubdomainMap::explicit_indices(std::vector<std::vector<std::size_t>> indices, std::size_t n_global)
{
  for (const auto &list : indices)
    for (std::size_t i : list)
      if (i >= n_global)
        throw std::out_of_range("subdomain index exceeds the global size");
  SubdomainMap map;
  map.indices_ = std::move(indices);
  map.n_global_ = n_global;
  return map;
}

std::size_t SubdomainMap::local_size(std::size_t j) const
{
  return contiguous_ ? block_ : indices_.at(j).size();
}

void SubdomainMap::gather(std::span<const double> x, std::size_t j, std::span<double> local) const
{
  if (contiguous_)
    {
      std::memcpy(local.data(), x.data() + j * block_, block_ * sizeof(double));
      return;
    }
  const auto &idx = indices_[j];
  for (std::size_t i = 0; i < idx.size(); ++i)
    local[i] = x[idx[i]];
}

void SubdomainMap::scatter_add(std::span<const double> local, std::size_t j, std::span<double> x, double scale) const
{
  if (contiguous_)
    {
      double *dst = x.data() + j * block_;
      for (std::size_t i = 0; i < block_; ++i)
        dst[i] += scale * local[i];
      return;
    }
  const auto &idx = indices_[j];
  for (std::size_t i = 0; i < idx.size(); ++i)
    x[idx[i]] += scale * local[i];
}

std::vector<unsigned> SubdomainMap::multiplicity() const
{
  std::vector<unsigned> count(n_global_, 0);
  if (contiguous_)
    std::fill(count.begin(), count.end(), 1u);
  else
    for (const auto &list : indices_)
      for (std::size_t i : list)
        ++count[i];
  return count;
}

ColorPartition color_subdomains(const Level &level, const std::vector<VertexPatch> &patches,
                                SmootherKind kind, ColoringChoice choice)
{
  if (!uses_vertex_patches(kind))
    return choice == ColoringChoice::structured ? color_cells_redblack(level)
                                                : color_graph_dsatur(cell_conflict_graph(level));
  if (choice == ColoringChoice::structured)
    return color_patches_structured(level);
  const auto conflict = kind == SmootherKind::avs ? PatchConflict::share_cell : PatchConflict::share_cell_or_face;
  return color_graph_dsatur(patch_conflict_graph(level, patches, conflict));
}

void compute_residual(const DGOperator &op, std::span<const double> x, std::span<const double> b,
                      std::span<double> r)
{
  op.vmult(r, x);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = b[i] - r[i];
  count_flops(op.flop_counter(), Kernel::vector_ops, r.size());
}

namespace
{

SubdomainMap make_map(const DGOperator &op, SmootherKind kind, const std::vector<VertexPatch> &patches)
{
  if (!uses_vertex_patches(kind))
    return SubdomainMap::cells(op.n_cells(), op.dofs_per_cell());
  std::vector<std::vector<std::size_t>> indices;
  indices.reserve(patches.size());
  for (const auto &p : patches)
    indices.push_back(patch_dof_indices(op, p));
  return SubdomainMap::explicit_indices(std::move(indices), op.n_dofs());
}

SolverSet make_solvers(const DGOperator &op, SmootherKind kind, const std::vector<VertexPatch> &patches,
                       FlopCounter *setup_counter)
{
  if (uses_vertex_patches(kind))
    return SolverSet::for_patches(op, patches, setup_counter);
  return SolverSet::for_cells(op, setup_counter);
}

} // namespace

SchwarzSmoother::SchwarzSmoother(const DGOperator &op, const SmootherConfig &config, FlopCounter *setup_counter)
  : SchwarzSmoother(op, config, ColorPartition{}, setup_counter)
{}

SchwarzSmoother::SchwarzSmoother(const DGOperator &op, const SmootherConfig &config, ColorPartition colors,
                                 FlopCounter *setup_counter)
  : op_(op), config_(config)
{
  config_.validate();
  if (uses_vertex_patches(config_.kind))
    {
      if (!op.level().is_cartesian())
        throw std::invalid_argument("vertex-patch smoothers require a Cartesian level");
      patches_ = enumerate_vertex_patches(op.level());
    }
  map_ = make_map(op, config_.kind, patches_);
  solvers_ = make_solvers(op, config_.kind, patches_, setup_counter);
  colors_ = colors.colors.empty() ? color_subdomains(op.level(), patches_, config_.kind, config_.coloring)
                                  : std::move(colors);
  std::vector<char> seen(map_.size(), 0);
  for (const auto &color : colors_.colors)
    for (std::size_t j : color)
      {
        if (j >= map_.size() || seen[j])
          throw std::invalid_argument("color partition does not match the subdomains");
        seen[j] = 1;
      }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::invalid_argument("color partition misses a subdomain");
}

void SchwarzSmoother::correct_color(std::size_t color, std::span<const double> r, std::span<double> x,
                                    bool reverse) const
{
  thread_local Vector r_local, x_local;
  FlopCounter *counter = op_.flop_counter();
  const auto &members = colors_.colors[color];
  for (std::size_t s = 0; s < members.size(); ++s)
    {
      const std::size_t j = reverse ? members[members.size() - 1 - s] : members[s];
      const std::size_t n = map_.local_size(j);
      r_local.resize(n);
      x_local.resize(n);
      map_.gather(r, j, r_local);
      solvers_[j].apply_inverse(r_local, x_local, counter);
      map_.scatter_add(x_local, j, x, config_.omega);
      count_flops(counter, Kernel::vector_ops, 2 * n);
    }
}

void SchwarzSmoother::smooth_additive(std::span<double> x, std::span<const double> b, bool reverse,
                                      bool zero_guess) const
{
  Vector r(x.size());
  if (zero_guess)
    std::copy(b.begin(), b.end(), r.begin());
  else
    compute_residual(op_, x, b, r);
  const std::size_t nc = colors_.n_colors();
  for (std::size_t c = 0; c < nc; ++c)
    correct_color(reverse ? nc - 1 - c : c, r, x, reverse);
}

void SchwarzSmoother::smooth_multiplicative(std::span<double> x, std::span<const double> b, bool reverse,
                                            bool zero_guess) const
{
  Vector r(x.size());
  const std::size_t nc = colors_.n_colors();
  for (std::size_t c = 0; c < nc; ++c)
    {
      if (c == 0 && zero_guess)
        std::copy(b.begin(), b.end(), r.begin());
      else
        compute_residual(op_, x, b, r);
      correct_color(reverse ? nc - 1 - c : c, r, x, reverse);
    }
}

void SchwarzSmoother::step(std::span<double> x, std::span<const double> b, bool reverse, bool zero_guess) const
{
  if (x.size() != op_.n_dofs() || b.size() != op_.n_dofs())
    throw std::invalid_argument("smoother vector size mismatch");
  if (is_additive(config_.kind))
    smooth_additive(x, b, reverse, zero_guess);
  else
    smooth_multiplicative(x, b, reverse, zero_guess);
}

void SchwarzSmoother::pre_smooth(std::span<double> x, std::span<const double> b, bool zero_guess) const
{
  for (int i = 0; i < config_.m_pre; ++i)
    step(x, b, false, zero_guess && i == 0);
}

void SchwarzSmoother::post_smooth(std::span<double> x, std::span<const double> b) const
{
  for (int i = 0; i < config_.m_post; ++i)
    step(x, b, config_.symmetrize);
}

} // namespace tpsmg
