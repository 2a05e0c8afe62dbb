#include <doctest.h>

#include <algorithm>
#include <deque>

#include "fkdyn/lattice.hpp"

using namespace fk;

TEST_CASE("vertex and edge counts") {
  auto t = LatticeGeometry::build(2, 3, LatticeKind::Torus);
  CHECK(t.num_vertices() == 9);
  CHECK(t.num_edges() == 18);
  auto b = LatticeGeometry::build(2, 3, LatticeKind::Box);
  CHECK(b.num_vertices() == 9);
  CHECK(b.num_edges() == 12);
  auto t3 = LatticeGeometry::build(3, 4, LatticeKind::Torus);
  CHECK(t3.num_vertices() == 64);
  CHECK(t3.num_edges() == 192);
  for (int d = 1; d <= 3; ++d)
    for (int n = 1; n <= 5; ++n) {
      auto g = LatticeGeometry::build(d, n, LatticeKind::Box);
      std::size_t expect = d;
      for (int i = 0; i < d - 1; ++i) expect *= n;
      expect *= (n - 1);
      CHECK(g.num_edges() == expect);
    }
}

TEST_CASE("torus too small") {
  CHECK_THROWS_AS(LatticeGeometry::build(2, 2, LatticeKind::Torus), TorusTooSmall);
  CHECK_THROWS_AS(LatticeGeometry::build(2, 2, LatticeKind::Box, 1), TorusTooSmall);
  CHECK_THROWS_AS(LatticeGeometry::build(0, 3, LatticeKind::Box), LatticeError);
}

TEST_CASE("edges join l1 neighbours and degrees sum to 2|E|") {
  for (auto kind : {LatticeKind::Torus, LatticeKind::Box})
    for (int d = 1; d <= 3; ++d) {
      auto g = LatticeGeometry::build(d, 4, kind);
      std::size_t deg = 0;
      for (VertexId v = 0; v < g.num_vertices(); ++v) deg += g.degree(v);
      CHECK(deg == 2 * g.num_edges());
      for (const auto& e : g.edges()) CHECK(g.distance(e.u, e.v) == 1);
    }
}

TEST_CASE("numbering is deterministic and coordinates round-trip") {
  auto a = LatticeGeometry::build(3, 4, LatticeKind::Torus);
  auto b = LatticeGeometry::build(3, 4, LatticeKind::Torus);
  for (EdgeId e = 0; e < a.num_edges(); ++e) {
    CHECK(a.edge(e).u == b.edge(e).u);
    CHECK(a.edge(e).v == b.edge(e).v);
  }
  for (VertexId v = 0; v < a.num_vertices(); ++v) CHECK(a.vertex_at(a.coords(v)) == v);
  CHECK(a.edge_between(0, 1).has_value());
  CHECK(!a.edge_between(0, 5).has_value());
}

TEST_CASE("boundary conditions") {
  auto g = LatticeGeometry::build(2, 3, LatticeKind::Box);
  auto free = make_boundary(g, BoundaryKind::Free);
  CHECK(free.classes.size() == 8);
  CHECK(free.is_free());
  auto wired = make_boundary(g, BoundaryKind::Wired);
  CHECK(wired.classes.size() == 1);
  CHECK(wired.classes[0].size() == 8);
  CHECK(wired.is_wired());
  for (unsigned mask = 1; mask < 16; ++mask) {
    auto side = make_boundary(g, BoundaryKind::SideHomogeneous, {mask, false, {}});
    CHECK(free.refines(side));
    CHECK(side.refines(wired));
    validate_boundary(g, side);
  }
  CHECK(!wired.refines(free));
  CHECK_THROWS_AS(make_boundary(g, BoundaryKind::SideHomogeneous, {0, false, {}}), InvalidSideMask);
  CHECK_THROWS_AS(make_boundary(g, BoundaryKind::SideHomogeneous, {1u << 5, false, {}}), InvalidSideMask);
  auto torus = LatticeGeometry::build(2, 3, LatticeKind::Torus);
  CHECK_THROWS_AS(make_boundary(torus, BoundaryKind::Free), LatticeError);
}

TEST_CASE("side-homogeneous wires the selected sides into one class") {
  auto g = LatticeGeometry::build(2, 4, LatticeKind::Box);
  auto bc = make_boundary(g, BoundaryKind::SideHomogeneous, {0b0001, false, {}});  // x = 0 side
  CHECK(bc.classes[0].size() == 4);
  auto two = make_boundary(g, BoundaryKind::SideHomogeneous, {0b0101, false, {}});  // x=0 and y=0
  CHECK(two.classes[0].size() == 7);
  CHECK(bc.refines(two));
}

TEST_CASE("cylinder and explicit boundaries") {
  auto cyl = LatticeGeometry::build(2, 4, LatticeKind::Box, 0b01);
  CHECK(cyl.num_edges() == 4 * 4 + 4 * 3);
  auto bc = make_boundary(cyl, BoundaryKind::Cylindrical, {0, true, {}});
  CHECK(bc.classes.size() == 1);
  CHECK(bc.classes[0].size() == 8);
  auto bcf = make_boundary(cyl, BoundaryKind::Cylindrical, {0, false, {}});
  CHECK(bcf.classes.size() == 8);
  CHECK_THROWS_AS(make_boundary(cyl, BoundaryKind::SideHomogeneous, {0b0001, false, {}}), InvalidSideMask);
  auto box = LatticeGeometry::build(2, 3, LatticeKind::Box);
  CHECK_THROWS_AS(make_boundary(box, BoundaryKind::Cylindrical), LatticeError);
  auto ex = make_boundary(box, BoundaryKind::Explicit, {0, false, {{0, 8}}});
  CHECK(ex.classes.size() == 7);
  CHECK_THROWS_AS(make_boundary(box, BoundaryKind::Explicit, {0, false, {{0, 4}}}), LatticeError);
}

namespace {

std::size_t bfs_ball_size(const LatticeGeometry& g, EdgeId e, int m) {
  std::vector<int> dist(g.num_vertices(), -1);
  std::deque<VertexId> q;
  for (VertexId s : {g.edge(e).u, g.edge(e).v}) {
    dist[s] = 0;
    q.push_back(s);
  }
  std::size_t count = 0;
  while (!q.empty()) {
    auto v = q.front();
    q.pop_front();
    ++count;
    if (dist[v] == m) continue;
    for (const auto& ed : g.edges()) {
      VertexId w;
      if (ed.u == v)
        w = ed.v;
      else if (ed.v == v)
        w = ed.u;
      else
        continue;
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push_back(w);
      }
    }
  }
  return count;
}

}  // namespace

TEST_CASE("edge balls") {
  auto g = LatticeGeometry::build(2, 5, LatticeKind::Torus);
  auto b0 = edge_ball(g, 3, 0);
  CHECK(b0.vertices.size() == 2);
  REQUIRE(b0.edges.size() == 1);
  CHECK(b0.edges[0] == 3);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    auto b1 = edge_ball(g, e, 1);
    auto b2 = edge_ball(g, e, 2);
    CHECK(std::includes(b2.vertices.begin(), b2.vertices.end(), b1.vertices.begin(), b1.vertices.end()));
    CHECK(b2.vertices.size() == bfs_ball_size(g, e, 2));
    for (VertexId v : b2.vertices) CHECK(g.distance_to_edge(v, e) <= 2);
  }
  auto box = LatticeGeometry::build(2, 4, LatticeKind::Box);
  auto clipped = edge_ball(box, 0, 2);
  for (VertexId v : clipped.vertices) CHECK(v < box.num_vertices());
}

TEST_CASE("half boxes") {
  auto box = LatticeGeometry::build(2, 8, LatticeKind::Box);
  auto half = central_half_box(box);
  CHECK(half.vertices.size() == 16);  // coordinates 2..5
  CHECK(half.edges.size() == 24);
  CHECK(half.boundary.size() == 12);
  auto torus = LatticeGeometry::build(2, 12, LatticeKind::Torus);
  auto emb = embedded_half_box_edges(torus, 8, 0);
  CHECK(emb.size() == half.edges.size());
  for (std::size_t i = 0; i < emb.size(); ++i) {
    auto le = box.edge(half.edges[i]);
    auto he = torus.edge(emb[i]);
    CHECK(box.coords(le.u) == torus.coords(he.u));
    CHECK(box.coords(le.v) == torus.coords(he.v));
  }
}

TEST_CASE("descriptor") {
  auto g = LatticeGeometry::build(2, 4, LatticeKind::Torus);
  auto j = g.descriptor();
  CHECK(j["d"] == 2);
  CHECK(j["n"] == 4);
  CHECK(j["kind"] == "torus");
}
