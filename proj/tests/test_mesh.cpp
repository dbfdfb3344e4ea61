#include "doctest.h"

#include "tpsmg/mesh.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace tpsmg;

namespace
{

double dist(const Point &a, const Point &b)
{
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

/// Every interior face is shared by exactly two cells whose face vertices coincide.
void check_conformity(const Level &level)
{
  const int d = level.dim();
  for (std::size_t c = 0; c < level.n_cells(); ++c)
    for (int f = 0; f < 2 * d; ++f)
      {
        const std::size_t nb = level.neighbor(c, f);
        if (nb == no_neighbor)
          continue;
        REQUIRE(level.neighbor(nb, f ^ 1) == c);
        const int tau = f / 2;
        const auto own = level.cell_vertex_ids(c);
        const auto other = level.cell_vertex_ids(nb);
        for (unsigned v = 0; v < (1u << d); ++v)
          if (((v >> tau) & 1u) == static_cast<unsigned>(f % 2))
            CHECK(own[v] == other[v ^ (1u << tau)]);
      }
}

/// Child vertices are the images of the reference sub-box corners under the parent map.
void check_nestedness(const MeshHierarchy &h)
{
  for (std::size_t l = 0; l + 1 < h.n_levels(); ++l)
    for (std::size_t c = 0; c < h.level(l).n_cells(); ++c)
      for (unsigned ch = 0; ch < (1u << h.dim); ++ch)
        {
          const std::size_t child = h.child(l, c, ch);
          CHECK(h.parent(l + 1, child) == c);
          const auto pts = h.level(l + 1).cell_vertices(child);
          for (unsigned v = 0; v < (1u << h.dim); ++v)
            {
              Point xhat{0., 0., 0.};
              for (int t = 0; t < h.dim; ++t)
                xhat[t] = 0.5 * (((ch >> t) & 1u) + ((v >> t) & 1u));
              CHECK(dist(pts[v], h.level(l).map_point(c, xhat)) < 1e-14);
            }
        }
}

} // namespace

TEST_CASE("hierarchy sizes")
{
  auto h = build_hierarchy(2, 2, 1);
  CHECK(h.level(0).n_cells() == 4);
  CHECK(enumerate_vertex_patches(h.level(0)).size() == 1);
  CHECK(h.level(1).n_cells() == 16);
  CHECK(enumerate_vertex_patches(h.level(1)).size() == 9);
  auto h3 = build_hierarchy(3, 2, 3);
  CHECK(h3.finest().n_cells() == 4096);
  CHECK(enumerate_vertex_patches(h3.finest()).size() == 3375);
  CHECK(h3.finest().cartesian_length() == doctest::Approx(1. / 16.));
  CHECK_THROWS(build_hierarchy(2, 0, 1));
  CHECK_THROWS(build_hierarchy(4, 2, 1));
  CHECK_THROWS(build_hierarchy(2, 2, -1));
}

TEST_CASE("conformity and nestedness")
{
  for (int d = 1; d <= 3; ++d)
    {
      auto h = build_hierarchy(d, 2, d == 3 ? 2 : 3);
      for (const auto &level : h.levels)
        check_conformity(level);
      check_nestedness(h);
      auto hd = build_hierarchy(d, 4, 2);
      distort(hd, 0.25, 11);
      for (const auto &level : hd.levels)
        {
          check_conformity(level);
          for (std::size_t c = 0; c < level.n_cells(); ++c)
            CHECK(min_jacobian_determinant(level, c) > 0.);
        }
      check_nestedness(hd);
    }
}

TEST_CASE("vertex patches")
{
  auto h = build_hierarchy(2, 2, 1);
  const auto patches = enumerate_vertex_patches(h.level(1));
  for (const auto &p : patches)
    {
      CHECK(h.level(1).is_interior_vertex(p.vertex));
      const MultiIndex v = h.level(1).vertex_index(p.vertex);
      for (unsigned c = 0; c < 4; ++c)
        {
          const MultiIndex ci = h.level(1).cell_index(p.cells[c]);
          CHECK(ci[0] == v[0] - 1 + (c & 1u));
          CHECK(ci[1] == v[1] - 1 + ((c >> 1) & 1u));
        }
    }
}

TEST_CASE("distortion")
{
  auto reference = build_hierarchy(2, 8, 1);
  auto h = build_hierarchy(2, 8, 1);
  distort(h, 0., 1);
  for (std::size_t v = 0; v < h.level(0).n_vertices(); ++v)
    CHECK(h.level(0).vertex(v) == reference.level(0).vertex(v));

  distort(h, 0.25, 1234);
  const Level &l0 = h.level(0);
  const Level &r0 = reference.level(0);
  for (std::size_t v = 0; v < l0.n_vertices(); ++v)
    {
      const double shift = dist(l0.vertex(v), r0.vertex(v));
      if (!l0.is_interior_vertex(v))
        CHECK(shift == 0.);
      else
        CHECK(std::abs(shift - 0.25 * r0.cartesian_length()) < 1e-14);
    }
  CHECK_FALSE(l0.is_cartesian());
  CHECK_FALSE(h.level(1).is_cartesian());

  auto again = build_hierarchy(2, 8, 1);
  distort(again, 0.25, 1234);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t v = 0; v < h.level(l).n_vertices(); ++v)
      CHECK(again.level(l).vertex(v) == h.level(l).vertex(v));

  auto other = build_hierarchy(2, 8, 0);
  distort(other, 0.25, 99);
  bool differs = false;
  for (std::size_t v = 0; v < l0.n_vertices(); ++v)
    differs = differs || other.level(0).vertex(v) != l0.vertex(v);
  CHECK(differs);

  CHECK_THROWS(distort(other, 0.5, 1));
  CHECK_THROWS(distort(other, -0.1, 1));
}

TEST_CASE("red-black cell coloring")
{
  auto h = build_hierarchy(2, 2, 0);
  auto coloring = color_cells_redblack(h.level(0));
  REQUIRE(coloring.n_colors() == 2);
  CHECK(coloring.colors[0] == std::vector<std::size_t>{0, 3});
  CHECK(coloring.colors[1] == std::vector<std::size_t>{1, 2});
  auto h3 = build_hierarchy(3, 2, 2);
  CHECK(color_cells_redblack(h3.level(0)).colors[0].size() == 4);
  for (const auto &level : h3.levels)
    CHECK(is_proper_coloring(color_cells_redblack(level), cell_conflict_graph(level)));
}

TEST_CASE("structured patch coloring")
{
  auto h1 = build_hierarchy(2, 2, 0);
  CHECK(color_patches_structured(h1.level(0)).n_colors() == 1);
  for (int d = 2; d <= 3; ++d)
    {
      auto h = build_hierarchy(d, 2, d == 2 ? 4 : 3);
      const Level &level = h.finest();
      const auto patches = enumerate_vertex_patches(level);
      const auto coloring = color_patches_structured(level);
      CHECK(coloring.n_colors() == (d == 2 ? 8u : 16u));
      CHECK(is_proper_coloring(coloring, patch_conflict_graph(level, patches, PatchConflict::share_cell_or_face)));
    }
}

TEST_CASE("DSATUR")
{
  ConflictGraph empty;
  empty.adjacency.resize(5);
  CHECK(color_graph_dsatur(empty).n_colors() == 1);
  ConflictGraph k4;
  k4.adjacency = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  const auto c4 = color_graph_dsatur(k4);
  CHECK(c4.n_colors() == 4);
  CHECK(is_proper_coloring(c4, k4));
  // a cycle of even length is bipartite
  ConflictGraph ring;
  ring.adjacency = {{1, 5}, {0, 2}, {1, 3}, {2, 4}, {3, 5}, {4, 0}};
  CHECK(color_graph_dsatur(ring).n_colors() == 2);

  auto h = build_hierarchy(2, 2, 4);
  const Level &level = h.finest();
  const auto patches = enumerate_vertex_patches(level);
  const auto graph = patch_conflict_graph(level, patches, PatchConflict::share_cell_or_face);
  const auto coloring = color_graph_dsatur(graph);
  CHECK(is_proper_coloring(coloring, graph));
  CHECK(coloring.n_colors() <= 20);
  MESSAGE("DSATUR colors for 2D multiplicative vertex patches: " << coloring.n_colors());
  const auto additive = patch_conflict_graph(level, patches, PatchConflict::share_cell);
  CHECK(is_proper_coloring(color_graph_dsatur(additive), additive));
  CHECK(is_proper_coloring(color_graph_dsatur(cell_conflict_graph(level)), cell_conflict_graph(level)));
  // determinism
  CHECK(color_graph_dsatur(graph).colors == coloring.colors);
}

TEST_CASE("coloring checks reject improper partitions")
{
  ConflictGraph g;
  g.adjacency = {{1}, {0}, {}};
  CHECK_FALSE(is_proper_coloring(ColorPartition{{{0, 1}, {2}}}, g));
  CHECK_FALSE(is_proper_coloring(ColorPartition{{{0}, {1}}}, g));
  CHECK_FALSE(is_proper_coloring(ColorPartition{{{0, 2}, {1, 2}}}, g));
  CHECK(is_proper_coloring(ColorPartition{{{0, 2}, {1}}}, g));
}

TEST_CASE("surrogate lengths")
{
  auto h = build_hierarchy(2, 4, 0, 2.);
  const auto l = surrogate_lengths(h.level(0).cell_vertices(5), 2);
  CHECK(l[0] == 0.5);
  CHECK(l[1] == 0.5);
  auto h3 = build_hierarchy(3, 3, 0);
  const auto l3 = surrogate_lengths(h3.level(0).cell_vertices(13), 3);
  for (int t = 0; t < 3; ++t)
    CHECK(l3[t] == doctest::Approx(1. / 3.).epsilon(1e-15));

  // unit square with the upper right vertex moved to (1.2, 1.1); edge lengths are vertex distances
  std::array<Point, 8> quad{};
  quad[0] = {0., 0., 0.};
  quad[1] = {1., 0., 0.};
  quad[2] = {0., 1., 0.};
  quad[3] = {1.2, 1.1, 0.};
  const auto s = surrogate_lengths(quad, 2);
  CHECK(s[0] == doctest::Approx((1. + std::sqrt(1.2 * 1.2 + 0.1 * 0.1)) / 2.).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx((1. + std::sqrt(0.2 * 0.2 + 1.1 * 1.1)) / 2.).epsilon(1e-15));
  quad[3] = quad[2];
  CHECK_THROWS(surrogate_lengths(quad, 2));
}

TEST_CASE("mesh text dump")
{
  auto h = build_hierarchy(2, 1, 0);
  std::ostringstream out;
  write_mesh_text(h.level(0), out);
  CHECK(out.str() == "vertex 0 0 0 0\nvertex 1 1 0 0\nvertex 2 0 1 0\nvertex 3 1 1 0\ncell 0 0 1 2 3\n");
}
