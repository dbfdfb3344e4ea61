#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

namespace tpsmg
{

using Point = std::array<double, 3>;
using MultiIndex = std::array<std::size_t, 3>;

/// Marker returned by Level::neighbor for faces on the physical boundary.
inline constexpr std::size_t no_neighbor = std::numeric_limits<std::size_t>::max();

/**
 * One level of a structured mesh of the box [0, extent]^d with n cells per
 * direction. Cells and vertices are numbered lexicographically with
 * direction 0 running fastest. Vertex coordinates are stored explicitly so
 * that distorted levels share the code path of Cartesian ones; each cell is
 * the multilinear image of the reference cube through its 2^d vertices.
 *
 * Faces of a cell are numbered f = 2 τ + s where τ is the normal direction
 * and s = 0 (lower) or 1 (upper).
 */
class Level
{
public:
  Level(int dim, std::size_t cells_per_dim, double extent);

  int dim() const { return dim_; }
  std::size_t cells_per_dim() const { return n_; }
  std::size_t n_cells() const { return n_cells_; }
  std::size_t n_vertices() const { return vertices_.size(); }
  double extent() const { return extent_; }

  /// True while no vertex has been moved off the uniform grid.
  bool is_cartesian() const { return cartesian_; }
  /// Edge length of the uniform grid, extent / n.
  double cartesian_length() const { return extent_ / static_cast<double>(n_); }

  MultiIndex cell_index(std::size_t cell) const;
  std::size_t cell_id(const MultiIndex &index) const;
  MultiIndex vertex_index(std::size_t vertex) const;
  std::size_t vertex_id(const MultiIndex &index) const;

  const Point &vertex(std::size_t v) const { return vertices_[v]; }
  void set_vertex(std::size_t v, const Point &p);

  /// Vertex ids of a cell, lexicographic in the reference cube (2^d used entries).
  std::array<std::size_t, 8> cell_vertex_ids(std::size_t cell) const;
  std::array<Point, 8> cell_vertices(std::size_t cell) const;

  /// Neighbor across face f, or no_neighbor on the boundary.
  std::size_t neighbor(std::size_t cell, int face) const;
  bool at_boundary(std::size_t cell, int face) const { return neighbor(cell, face) == no_neighbor; }

  bool is_interior_vertex(std::size_t vertex) const;

  /// Image of the reference point xhat under the multilinear cell map.
  Point map_point(std::size_t cell, const Point &xhat) const;

private:
  int dim_;
  std::size_t n_;
  std::size_t n_cells_;
  double extent_;
  bool cartesian_ = true;
  std::vector<Point> vertices_;
};

/**
 * Nested levels 0..L. Level ℓ has (coarse · 2^ℓ)^d cells; child c of a cell
 * with index i on level ℓ has index 2 i + c on level ℓ+1.
 */
struct MeshHierarchy
{
  int dim = 2;
  std::size_t coarse_cells_per_dim = 2;
  double extent = 1.;
  double distortion = 0.;
  std::uint64_t seed = 0;
  std::vector<Level> levels;

  std::size_t n_levels() const { return levels.size(); }
  const Level &level(std::size_t l) const { return levels.at(l); }
  const Level &finest() const { return levels.back(); }

  /// Cell on level+1 that is child `child` (lexicographic in {0,1}^d) of `cell` on `level`.
  std::size_t child(std::size_t level, std::size_t cell, unsigned child) const;
  /// Parent on level-1 of a cell on `level` (level ≥ 1).
  std::size_t parent(std::size_t level, std::size_t cell) const;
};

MeshHierarchy build_hierarchy(int dim, std::size_t coarse_cells_per_dim, int max_level,
                              double extent = 1.);

/**
 * Moves every interior vertex of level 0 by factor · h_v in a random
 * direction (h_v: shortest incident edge) and regenerates all finer levels
 * by evaluating the parent cell maps at the reference midpoints. The
 * direction is a normalized vector of independent standard normal draws
 * from mt19937_64(seed), taken in vertex order. Throws std::invalid_argument
 * for factor outside [0, 0.5) and NumericalError when a cell map loses
 * positive orientation.
 */
void distort(MeshHierarchy &hierarchy, double factor, std::uint64_t seed);

/// Jacobian J[a][τ] = ∂x_a/∂x̂_τ of the multilinear map through `vertices` at xhat.
std::array<std::array<double, 3>, 3> multilinear_jacobian(const std::array<Point, 8> &vertices,
                                                          int dim, const Point &xhat);

/// Determinant of the leading dim × dim block.
double determinant(const std::array<std::array<double, 3>, 3> &jac, int dim);

/// Smallest Jacobian determinant of the cell map, sampled on a 4^d point lattice incl. corners.
double min_jacobian_determinant(const Level &level, std::size_t cell);

/// The 2^d cells around an interior vertex, lexicographic in their offset from the vertex.
struct VertexPatch
{
  std::size_t vertex = 0;
  std::array<std::size_t, 8> cells{};
};

/// One patch per interior vertex, in vertex order.
std::vector<VertexPatch> enumerate_vertex_patches(const Level &level);

/// Disjoint subsets of subdomain indices; colors with no members are dropped.
struct ColorPartition
{
  std::vector<std::vector<std::size_t>> colors;

  std::size_t n_colors() const { return colors.size(); }
};

/// Checkerboard coloring of cells by the parity of Σ_τ i_τ.
ColorPartition color_cells_redblack(const Level &level);

/**
 * Coloring of the vertex patches by parqueting (parity of each vertex
 * coordinate, 2^d classes) refined by a checkerboard over the parquet tiles
 * (parity of Σ_τ ⌊v_τ / 2⌋). Patches of one color share neither a cell nor
 * a face.
 */
ColorPartition color_patches_structured(const Level &level);

struct ConflictGraph
{
  std::vector<std::vector<std::size_t>> adjacency;

  std::size_t size() const { return adjacency.size(); }
};

/// Cells conflict when they share a face.
ConflictGraph cell_conflict_graph(const Level &level);

enum class PatchConflict
{
  share_cell,
  share_cell_or_face
};

ConflictGraph patch_conflict_graph(const Level &level, const std::vector<VertexPatch> &patches,
                                   PatchConflict relation);

/// DSATUR: pick the uncolored node of largest saturation, ties by degree then smallest index.
ColorPartition color_graph_dsatur(const ConflictGraph &graph);

/// Coverage, disjointness, and no conflicting pair inside any color.
bool is_proper_coloring(const ColorPartition &partition, const ConflictGraph &graph);

/**
 * Extents of the axis-aligned surrogate box of a cell: per direction the
 * mean of the 2^(d-1) edge lengths parallel to it, with edge length taken
 * as the distance of its end points. Throws on a zero-length edge.
 */
std::array<double, 3> surrogate_lengths(const std::array<Point, 8> &vertices, int dim);

/// Plain-text dump: "vertex <id> <x> <y> <z>" lines followed by "cell <id> <v0> ... <v2^d-1>".
void write_mesh_text(const Level &level, std::ostream &out);

} // namespace tpsmg
