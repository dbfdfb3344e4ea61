#include "tpsmg/mesh.hpp"

#include "tpsmg/dense.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

namespace tpsmg
{

namespace
{

std::size_t power(std::size_t n, int e)
{
  std::size_t r = 1;
  for (int i = 0; i < e; ++i)
    r *= n;
  return r;
}

double distance(const Point &a, const Point &b)
{
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

} // namespace

Level::Level(int dim, std::size_t cells_per_dim, double extent)
  : dim_(dim), n_(cells_per_dim), n_cells_(power(cells_per_dim, dim)), extent_(extent)
{
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("Level: dimension must be 1, 2 or 3");
  if (cells_per_dim < 1)
    throw std::invalid_argument("Level: need at least one cell per direction");
  if (!(extent > 0.))
    throw std::invalid_argument("Level: domain extent must be positive");
  vertices_.resize(power(n_ + 1, dim));
  for (std::size_t v = 0; v < vertices_.size(); ++v)
    {
      const MultiIndex idx = vertex_index(v);
      Point p{0., 0., 0.};
      for (int t = 0; t < dim_; ++t)
        p[t] = extent_ * static_cast<double>(idx[t]) / static_cast<double>(n_);
      vertices_[v] = p;
    }
}

MultiIndex Level::cell_index(std::size_t cell) const
{
  MultiIndex idx{0, 0, 0};
  for (int t = 0; t < dim_; ++t)
    {
      idx[t] = cell % n_;
      cell /= n_;
    }
  return idx;
}

std::size_t Level::cell_id(const MultiIndex &index) const
{
  std::size_t id = 0;
  for (int t = dim_ - 1; t >= 0; --t)
    id = id * n_ + index[t];
  return id;
}

MultiIndex Level::vertex_index(std::size_t vertex) const
{
  MultiIndex idx{0, 0, 0};
  for (int t = 0; t < dim_; ++t)
    {
      idx[t] = vertex % (n_ + 1);
      vertex /= n_ + 1;
    }
  return idx;
}

std::size_t Level::vertex_id(const MultiIndex &index) const
{
  std::size_t id = 0;
  for (int t = dim_ - 1; t >= 0; --t)
    id = id * (n_ + 1) + index[t];
  return id;
}

void Level::set_vertex(std::size_t v, const Point &p)
{
  vertices_.at(v) = p;
  cartesian_ = false;
}

std::array<std::size_t, 8> Level::cell_vertex_ids(std::size_t cell) const
{
  const MultiIndex base = cell_index(cell);
  std::array<std::size_t, 8> ids{};
  for (unsigned c = 0; c < (1u << dim_); ++c)
    {
      MultiIndex idx = base;
      for (int t = 0; t < dim_; ++t)
        idx[t] += (c >> t) & 1u;
      ids[c] = vertex_id(idx);
    }
  return ids;
}

std::array<Point, 8> Level::cell_vertices(std::size_t cell) const
{
  const auto ids = cell_vertex_ids(cell);
  std::array<Point, 8> pts{};
  for (unsigned c = 0; c < (1u << dim_); ++c)
    pts[c] = vertices_[ids[c]];
  return pts;
}

std::size_t Level::neighbor(std::size_t cell, int face) const
{
  const int t = face / 2;
  const MultiIndex idx = cell_index(cell);
  const std::size_t stride = power(n_, t);
  if (face % 2 == 0)
    return idx[t] == 0 ? no_neighbor : cell - stride;
  return idx[t] + 1 == n_ ? no_neighbor : cell + stride;
}

bool Level::is_interior_vertex(std::size_t vertex) const
{
  const MultiIndex idx = vertex_index(vertex);
  for (int t = 0; t < dim_; ++t)
    if (idx[t] == 0 || idx[t] == n_)
      return false;
  return true;
}

Point Level::map_point(std::size_t cell, const Point &xhat) const
{
  const auto pts = cell_vertices(cell);
  Point x{0., 0., 0.};
  for (unsigned c = 0; c < (1u << dim_); ++c)
    {
      double w = 1.;
      for (int t = 0; t < dim_; ++t)
        w *= ((c >> t) & 1u) ? xhat[t] : 1. - xhat[t];
      for (int a = 0; a < 3; ++a)
        x[a] += w * pts[c][a];
    }
  return x;
}

std::size_t MeshHierarchy::child(std::size_t l, std::size_t cell, unsigned c) const
{
  const Level &coarse = levels.at(l);
  const Level &fine = levels.at(l + 1);
  MultiIndex idx = coarse.cell_index(cell);
  for (int t = 0; t < dim; ++t)
    idx[t] = 2 * idx[t] + ((c >> t) & 1u);
  return fine.cell_id(idx);
}

std::size_t MeshHierarchy::parent(std::size_t l, std::size_t cell) const
{
  if (l == 0)
    throw std::invalid_argument("MeshHierarchy::parent: level 0 has no parents");
  MultiIndex idx = levels.at(l).cell_index(cell);
  for (int t = 0; t < dim; ++t)
    idx[t] /= 2;
  return levels.at(l - 1).cell_id(idx);
}

MeshHierarchy build_hierarchy(int dim, std::size_t coarse_cells_per_dim, int max_level,
                              double extent)
{
  if (max_level < 0)
    throw std::invalid_argument("build_hierarchy: number of refinements must be nonnegative");
  MeshHierarchy h;
  h.dim = dim;
  h.coarse_cells_per_dim = coarse_cells_per_dim;
  h.extent = extent;
  for (int l = 0; l <= max_level; ++l)
    h.levels.emplace_back(dim, coarse_cells_per_dim << l, extent);
  return h;
}

std::array<std::array<double, 3>, 3> multilinear_jacobian(const std::array<Point, 8> &vertices,
                                                          int dim, const Point &xhat)
{
  std::array<std::array<double, 3>, 3> jac{};
  for (unsigned c = 0; c < (1u << dim); ++c)
    for (int t = 0; t < dim; ++t)
      {
        double w = 1.;
        for (int s = 0; s < dim; ++s)
          {
            const bool upper = (c >> s) & 1u;
            if (s == t)
              w *= upper ? 1. : -1.;
            else
              w *= upper ? xhat[s] : 1. - xhat[s];
          }
        for (int a = 0; a < dim; ++a)
          jac[a][t] += w * vertices[c][a];
      }
  return jac;
}

double determinant(const std::array<std::array<double, 3>, 3> &j, int dim)
{
  if (dim == 1)
    return j[0][0];
  if (dim == 2)
    return j[0][0] * j[1][1] - j[0][1] * j[1][0];
  return j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
         j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
         j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
}

double min_jacobian_determinant(const Level &level, std::size_t cell)
{
  const int dim = level.dim();
  const auto pts = level.cell_vertices(cell);
  constexpr int m = 4;
  double min_det = std::numeric_limits<double>::max();
  const std::size_t n_samples = power(m, dim);
  for (std::size_t s = 0; s < n_samples; ++s)
    {
      Point xhat{0., 0., 0.};
      std::size_t r = s;
      for (int t = 0; t < dim; ++t)
        {
          xhat[t] = static_cast<double>(r % m) / (m - 1);
          r /= m;
        }
      min_det = std::min(min_det, determinant(multilinear_jacobian(pts, dim, xhat), dim));
    }
  return min_det;
}

void distort(MeshHierarchy &hierarchy, double factor, std::uint64_t seed)
{
  if (!(factor >= 0.) || !(factor < 0.5))
    throw std::invalid_argument("distort: factor must lie in [0, 0.5)");
  if (hierarchy.levels.empty())
    throw std::invalid_argument("distort: empty hierarchy");
  hierarchy.distortion = factor;
  hierarchy.seed = seed;
  if (factor == 0.)
    return;

  const int dim = hierarchy.dim;
  Level &coarse = hierarchy.levels[0];
  const Level original = coarse;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0., 1.);
  for (std::size_t v = 0; v < original.n_vertices(); ++v)
    {
      if (!original.is_interior_vertex(v))
        continue;
      const MultiIndex idx = original.vertex_index(v);
      double h_v = std::numeric_limits<double>::max();
      for (int t = 0; t < dim; ++t)
        for (int s = -1; s <= 1; s += 2)
          {
            MultiIndex nb = idx;
            nb[t] = static_cast<std::size_t>(static_cast<long long>(nb[t]) + s);
            h_v = std::min(h_v, distance(original.vertex(v), original.vertex(original.vertex_id(nb))));
          }
      Point dir{0., 0., 0.};
      double norm = 0.;
      while (norm < 1e-12)
        {
          norm = 0.;
          for (int t = 0; t < dim; ++t)
            {
              dir[t] = normal(rng);
              norm += dir[t] * dir[t];
            }
          norm = std::sqrt(norm);
        }
      Point p = original.vertex(v);
      for (int t = 0; t < dim; ++t)
        p[t] += factor * h_v * dir[t] / norm;
      coarse.set_vertex(v, p);
    }
  for (std::size_t c = 0; c < coarse.n_cells(); ++c)
    if (!(min_jacobian_determinant(coarse, c) > 0.))
      throw NumericalError("distort: cell " + std::to_string(c) +
                           " has a nonpositive Jacobian determinant");

  for (std::size_t l = 1; l < hierarchy.levels.size(); ++l)
    {
      const Level &parent = hierarchy.levels[l - 1];
      Level &fine = hierarchy.levels[l];
      for (std::size_t v = 0; v < fine.n_vertices(); ++v)
        {
          const MultiIndex idx = fine.vertex_index(v);
          MultiIndex pidx{0, 0, 0};
          Point xhat{0., 0., 0.};
          for (int t = 0; t < dim; ++t)
            {
              // the last parent cell owns the upper boundary vertices
              pidx[t] = std::min(idx[t] / 2, parent.cells_per_dim() - 1);
              xhat[t] = 0.5 * static_cast<double>(idx[t] - 2 * pidx[t]);
            }
          fine.set_vertex(v, parent.map_point(parent.cell_id(pidx), xhat));
        }
    }
}

std::vector<VertexPatch> enumerate_vertex_patches(const Level &level)
{
  const int dim = level.dim();
  std::vector<VertexPatch> patches;
  for (std::size_t v = 0; v < level.n_vertices(); ++v)
    {
      if (!level.is_interior_vertex(v))
        continue;
      VertexPatch patch;
      patch.vertex = v;
      const MultiIndex idx = level.vertex_index(v);
      for (unsigned c = 0; c < (1u << dim); ++c)
        {
          MultiIndex ci{0, 0, 0};
          for (int t = 0; t < dim; ++t)
            ci[t] = idx[t] - 1 + ((c >> t) & 1u);
          patch.cells[c] = level.cell_id(ci);
        }
      patches.push_back(patch);
    }
  return patches;
}

namespace
{

ColorPartition compact(std::vector<std::vector<std::size_t>> colors)
{
  ColorPartition partition;
  for (auto &c : colors)
    if (!c.empty())
      partition.colors.push_back(std::move(c));
  return partition;
}

} // namespace

ColorPartition color_cells_redblack(const Level &level)
{
  std::vector<std::vector<std::size_t>> colors(2);
  for (std::size_t c = 0; c < level.n_cells(); ++c)
    {
      const MultiIndex idx = level.cell_index(c);
      std::size_t sum = 0;
      for (int t = 0; t < level.dim(); ++t)
        sum += idx[t];
      colors[sum % 2].push_back(c);
    }
  return compact(std::move(colors));
}

ColorPartition color_patches_structured(const Level &level)
{
  const int dim = level.dim();
  const auto patches = enumerate_vertex_patches(level);
  std::vector<std::vector<std::size_t>> colors(std::size_t{2} << dim);
  for (std::size_t j = 0; j < patches.size(); ++j)
    {
      const MultiIndex idx = level.vertex_index(patches[j].vertex);
      std::size_t parquet = 0, tile = 0;
      for (int t = 0; t < dim; ++t)
        {
          parquet |= (idx[t] % 2) << t;
          tile += idx[t] / 2;
        }
      colors[2 * parquet + tile % 2].push_back(j);
    }
  return compact(std::move(colors));
}

ConflictGraph cell_conflict_graph(const Level &level)
{
  ConflictGraph g;
  g.adjacency.resize(level.n_cells());
  for (std::size_t c = 0; c < level.n_cells(); ++c)
    for (int f = 0; f < 2 * level.dim(); ++f)
      if (const std::size_t nb = level.neighbor(c, f); nb != no_neighbor)
        g.adjacency[c].push_back(nb);
  for (auto &adj : g.adjacency)
    std::sort(adj.begin(), adj.end());
  return g;
}

ConflictGraph patch_conflict_graph(const Level &level, const std::vector<VertexPatch> &patches,
                                   PatchConflict relation)
{
  const unsigned n_cells_per_patch = 1u << level.dim();
  std::vector<std::vector<std::size_t>> patches_of_cell(level.n_cells());
  for (std::size_t j = 0; j < patches.size(); ++j)
    for (unsigned c = 0; c < n_cells_per_patch; ++c)
      patches_of_cell[patches[j].cells[c]].push_back(j);

  ConflictGraph g;
  g.adjacency.resize(patches.size());
  for (std::size_t j = 0; j < patches.size(); ++j)
    {
      auto &adj = g.adjacency[j];
      for (unsigned c = 0; c < n_cells_per_patch; ++c)
        {
          const std::size_t cell = patches[j].cells[c];
          for (std::size_t other : patches_of_cell[cell])
            adj.push_back(other);
          if (relation == PatchConflict::share_cell_or_face)
            for (int f = 0; f < 2 * level.dim(); ++f)
              if (const std::size_t nb = level.neighbor(cell, f); nb != no_neighbor)
                for (std::size_t other : patches_of_cell[nb])
                  adj.push_back(other);
        }
      std::sort(adj.begin(), adj.end());
      adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
      adj.erase(std::remove(adj.begin(), adj.end(), j), adj.end());
    }
  return g;
}

ColorPartition color_graph_dsatur(const ConflictGraph &graph)
{
  const std::size_t n = graph.size();
  std::vector<int> color(n, -1);
  std::vector<std::set<int>> neighbor_colors(n);
  // ordered by (saturation desc, degree desc, index asc)
  using Key = std::tuple<long long, long long, std::size_t>;
  std::set<Key> queue;
  auto key = [&](std::size_t v) {
    return Key{-static_cast<long long>(neighbor_colors[v].size()),
               -static_cast<long long>(graph.adjacency[v].size()), v};
  };
  for (std::size_t v = 0; v < n; ++v)
    queue.insert(key(v));

  int n_colors = 0;
  while (!queue.empty())
    {
      const std::size_t v = std::get<2>(*queue.begin());
      queue.erase(queue.begin());
      int c = 0;
      while (neighbor_colors[v].count(c))
        ++c;
      color[v] = c;
      n_colors = std::max(n_colors, c + 1);
      for (std::size_t w : graph.adjacency[v])
        if (color[w] < 0 && !neighbor_colors[w].count(c))
          {
            queue.erase(key(w));
            neighbor_colors[w].insert(c);
            queue.insert(key(w));
          }
    }
  std::vector<std::vector<std::size_t>> colors(n_colors);
  for (std::size_t v = 0; v < n; ++v)
    colors[color[v]].push_back(v);
  return compact(std::move(colors));
}

bool is_proper_coloring(const ColorPartition &partition, const ConflictGraph &graph)
{
  const std::size_t n = graph.size();
  std::vector<int> color(n, -1);
  for (std::size_t c = 0; c < partition.n_colors(); ++c)
    for (std::size_t v : partition.colors[c])
      {
        if (v >= n || color[v] >= 0)
          return false;
        color[v] = static_cast<int>(c);
      }
  for (std::size_t v = 0; v < n; ++v)
    {
      if (color[v] < 0)
        return false;
      for (std::size_t w : graph.adjacency[v])
        if (w != v && color[w] == color[v])
          return false;
    }
  return true;
}

std::array<double, 3> surrogate_lengths(const std::array<Point, 8> &vertices, int dim)
{
  std::array<double, 3> h{0., 0., 0.};
  const unsigned n_vertices = 1u << dim;
  for (int t = 0; t < dim; ++t)
    {
      double sum = 0.;
      int count = 0;
      for (unsigned a = 0; a < n_vertices; ++a)
        {
          if ((a >> t) & 1u)
            continue;
          const double l = distance(vertices[a], vertices[a | (1u << t)]);
          if (!(l > 0.))
            throw std::invalid_argument("surrogate_lengths: degenerate edge");
          sum += l;
          ++count;
        }
      h[t] = sum / count;
    }
  return h;
}

void write_mesh_text(const Level &level, std::ostream &out)
{
  out.precision(17);
  for (std::size_t v = 0; v < level.n_vertices(); ++v)
    {
      const Point &p = level.vertex(v);
      out << "vertex " << v << ' ' << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    }
  for (std::size_t c = 0; c < level.n_cells(); ++c)
    {
      out << "cell " << c;
      const auto ids = level.cell_vertex_ids(c);
      for (unsigned i = 0; i < (1u << level.dim()); ++i)
        out << ' ' << ids[i];
      out << '\n';
    }
}

} // namespace tpsmg
