#pragma once

#include "tpsmg/fastdiag.hpp"

#include <string_view>

namespace tpsmg
{

enum class SmootherKind
{
  acs, ///< additive, cells
  mcs, ///< multiplicative, cells
  avs, ///< additive, vertex patches
  mvs  ///< multiplicative, vertex patches
};

enum class ColoringChoice
{
  structured,
  graph
};

const char *to_string(SmootherKind kind);
SmootherKind parse_smoother_kind(std::string_view name);
const char *to_string(ColoringChoice choice);
ColoringChoice parse_coloring(std::string_view name);

bool is_additive(SmootherKind kind);
bool uses_vertex_patches(SmootherKind kind);

/// Relaxation defaults: ACS 0.7, MCS 1; on distorted meshes ACS 0.5, MCS 0.75.
/// Vertex-patch smoothers default to 1 (MVS) and 2^{-d} (AVS).
double default_omega(SmootherKind kind, bool distorted, int dim);

struct SmootherConfig
{
  SmootherKind kind = SmootherKind::acs;
  double omega = 0.7;
  int m_pre = 1;
  int m_post = 1;
  ColoringChoice coloring = ColoringChoice::structured;
  /// Post-smoothing visits colors (and subdomains within a color) in reverse.
  bool symmetrize = false;

  /// Throws std::invalid_argument unless 0 < ω ≤ 1 and m_pre, m_post ≥ 0.
  void validate() const;
};

/**
 * Index gather/scatter between a level vector and its subdomain vectors.
 * Cell subdomains are the contiguous DoF blocks of the cells and need no
 * stored indices; patch subdomains store their tensor-ordered index lists.
 */
class SubdomainMap
{
public:
  static SubdomainMap cells(std::size_t n_cells, std::size_t dofs_per_cell);
  static SubdomainMap explicit_indices(std::vector<std::vector<std::size_t>> indices, std::size_t n_global);

  std::size_t size() const { return contiguous_ ? n_blocks_ : indices_.size(); }
  std::size_t n_global() const { return n_global_; }
  std::size_t local_size(std::size_t j) const;

  /// local = R_j x
  void gather(std::span<const double> x, std::size_t j, std::span<double> local) const;
  /// x += scale R_jᵀ local
  void scatter_add(std::span<const double> local, std::size_t j, std::span<double> x, double scale = 1.) const;

  /// Number of subdomains containing each global DoF.
  std::vector<unsigned> multiplicity() const;

private:
  bool contiguous_ = false;
  std::size_t n_blocks_ = 0;
  std::size_t block_ = 0;
  std::size_t n_global_ = 0;
  std::vector<std::vector<std::size_t>> indices_;
};

/**
 * Schwarz smoother of one level: subdomains (cells or vertex patches), their
 * fast-diagonalization solvers, and a color partition. Additive sweeps form
 * the residual once; multiplicative sweeps recompute it before every color.
 */
class SchwarzSmoother
{
public:
  SchwarzSmoother(const DGOperator &op, const SmootherConfig &config, FlopCounter *setup_counter = nullptr);
  /// Uses the given color partition instead of the configured coloring.
  SchwarzSmoother(const DGOperator &op, const SmootherConfig &config, ColorPartition colors,
                  FlopCounter *setup_counter = nullptr);

  const SmootherConfig &config() const { return config_; }
  const DGOperator &level_operator() const { return op_; }
  const SubdomainMap &subdomains() const { return map_; }
  const SolverSet &solvers() const { return solvers_; }
  const ColorPartition &colors() const { return colors_; }

  /// One additive step x += ω Σ_c Σ_{j∈c} R_jᵀ A_j⁻¹ R_j (b − A x).
  /// With zero_guess the caller asserts x = 0, and the first residual is b without an operator apply.
  void smooth_additive(std::span<double> x, std::span<const double> b, bool reverse = false,
                       bool zero_guess = false) const;
  /// One multiplicative step: for each color, r = b − A x, then x += ω Σ_{j∈c} R_jᵀ A_j⁻¹ R_j r.
  void smooth_multiplicative(std::span<double> x, std::span<const double> b, bool reverse = false,
                             bool zero_guess = false) const;

  /// One step of the configured kind.
  void step(std::span<double> x, std::span<const double> b, bool reverse = false, bool zero_guess = false) const;
  /// m_pre steps in forward order.
  void pre_smooth(std::span<double> x, std::span<const double> b, bool zero_guess = false) const;
  /// m_post steps, in reverse order when the configuration symmetrizes.
  void post_smooth(std::span<double> x, std::span<const double> b) const;

private:
  void correct_color(std::size_t color, std::span<const double> r, std::span<double> x, bool reverse) const;

  const DGOperator &op_;
  SmootherConfig config_;
  std::vector<VertexPatch> patches_;
  SubdomainMap map_;
  SolverSet solvers_;
  ColorPartition colors_;
};

/// Colors for the configured smoother: red-black cells or parqueted patches
/// (structured), or DSATUR on the matching conflict graph (graph).
ColorPartition color_subdomains(const Level &level, const std::vector<VertexPatch> &patches,
                                SmootherKind kind, ColoringChoice choice);

/// r = b − A x, counting the subtraction under Kernel::vector_ops.
void compute_residual(const DGOperator &op, std::span<const double> x, std::span<const double> b,
                      std::span<double> r);

} // namespace tpsmg
