#include <doctest.h>

#include <random>

#include "fkdyn/connectivity.hpp"

using namespace fk;

namespace {

Graph box_graph(int d, int n, BoundaryKind bk) {
  auto g = LatticeGeometry::build(d, n, LatticeKind::Box);
  return graph_of(g, make_boundary(g, bk));
}

Graph torus_graph(int d, int n) { return graph_of(LatticeGeometry::build(d, n, LatticeKind::Torus)); }

void differential_script(const Graph& g, std::size_t ops, std::uint64_t seed, double delete_bias) {
  auto naive = make_engine(EngineKind::Naive, g);
  auto fast = make_engine(EngineKind::FullyDynamic, g);
  auto& dyn = static_cast<DynamicEngine&>(*fast);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<EdgeId> pick(0, static_cast<EdgeId>(g.num_edges() - 1));
  std::uniform_int_distribution<VertexId> vpick(0, static_cast<VertexId>(g.num_vertices - 1));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  CHECK(naive->component_count() == fast->component_count());
  for (std::size_t i = 0; i < ops; ++i) {
    const EdgeId e = pick(rng);
    const double r = unif(rng);
    if (r < 0.15) {
      REQUIRE(naive->is_bridge(e) == fast->is_bridge(e));
    } else if (r < 0.25) {
      const VertexId a = vpick(rng), b = vpick(rng);
      REQUIRE(naive->connected(a, b) == fast->connected(a, b));
      REQUIRE(naive->component_size(a) == fast->component_size(a));
    } else if (naive->is_open(e)) {
      if (unif(rng) < delete_bias) REQUIRE(naive->delete_edge(e) == fast->delete_edge(e));
    } else {
      REQUIRE(naive->insert_edge(e) == fast->insert_edge(e));
    }
    REQUIRE(naive->component_count() == fast->component_count());
    REQUIRE(naive->largest_component() == fast->largest_component());
    if (i % 997 == 0) {
      dyn.check_invariants();
      REQUIRE(fast->component_count() == count_components(g, fast->configuration()));
      REQUIRE(fast->largest_component() == largest_component_size(g, fast->configuration()));
    }
  }
  dyn.check_invariants();
  CHECK(naive->dump_components() == fast->dump_components());
}

}  // namespace

TEST_CASE_TEMPLATE("spec examples", Kind, std::integral_constant<EngineKind, EngineKind::Naive>,
                   std::integral_constant<EngineKind, EngineKind::FullyDynamic>) {
  auto g = box_graph(2, 3, BoundaryKind::Free);
  auto eng = make_engine(Kind::value, g);
  CHECK(eng->component_count() == 9);
  CHECK(eng->largest_component() == 1);
  for (EdgeId e = 0; e < g.num_edges(); ++e) CHECK(eng->is_bridge(e));
  CHECK(eng->insert_edge(0) == -1);
  CHECK_THROWS_AS(eng->insert_edge(0), EdgeAlreadyPresent);
  CHECK(eng->delete_edge(0) == 1);
  CHECK_THROWS_AS(eng->delete_edge(0), EdgeAbsent);

  // 4-cycle around the top-left square: edges (0,1),(0,3),(1,4),(3,4).
  auto geom = LatticeGeometry::build(2, 3, LatticeKind::Box);
  const EdgeId a = *geom.edge_between(0, 1), b = *geom.edge_between(0, 3), c = *geom.edge_between(1, 4),
               d = *geom.edge_between(3, 4);
  CHECK(eng->insert_edge(a) == -1);
  CHECK(eng->insert_edge(b) == -1);
  CHECK(eng->insert_edge(c) == -1);
  CHECK(eng->insert_edge(d) == 0);
  for (EdgeId e : {a, b, c, d}) CHECK(!eng->is_bridge(e));
  CHECK(eng->largest_component() == 4);
  CHECK(eng->delete_edge(b) == 0);
  CHECK(eng->is_bridge(a));
  CHECK(eng->component_count() == 6);

  auto wired = make_engine(Kind::value, box_graph(2, 3, BoundaryKind::Wired));
  CHECK(wired->component_count() == 2);
  CHECK(wired->largest_component() == 8);
  CHECK(!wired->is_bridge(a));  // both endpoints on the boundary
  CHECK(wired->insert_edge(a) == 0);
  CHECK(!wired->is_bridge(a));

  auto torus = make_engine(Kind::value, torus_graph(2, 4));
  CHECK(torus->largest_component() == 1);
  torus->assign(EdgeSet(32, 1));
  CHECK(torus->largest_component() == 16);
  CHECK(torus->component_count() == 1);
}

TEST_CASE("reversibility of insert then delete") {
  auto g = torus_graph(2, 5);
  auto eng = make_engine(EngineKind::FullyDynamic, g);
  std::mt19937 rng(3);
  EdgeSet omega(g.num_edges());
  for (auto& x : omega) x = rng() % 2;
  eng->assign(omega);
  const auto comps = eng->component_count();
  const auto c1 = eng->largest_component();
  const auto dump = eng->dump_components();
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    if (eng->is_open(e)) continue;
    eng->insert_edge(e);
    eng->delete_edge(e);
    CHECK(eng->component_count() == comps);
    CHECK(eng->largest_component() == c1);
  }
  CHECK(eng->dump_components() == dump);
}

TEST_CASE("differential scripts") {
  SUBCASE("2d free box") { differential_script(box_graph(2, 6, BoundaryKind::Free), 20000, 1, 0.7); }
  SUBCASE("2d wired box") { differential_script(box_graph(2, 6, BoundaryKind::Wired), 20000, 2, 0.7); }
  SUBCASE("side homogeneous") {
    auto geom = LatticeGeometry::build(2, 5, LatticeKind::Box);
    differential_script(graph_of(geom, make_boundary(geom, BoundaryKind::SideHomogeneous, {0b0110, false, {}})),
                        20000, 3, 0.6);
  }
  SUBCASE("2d torus deletion heavy") { differential_script(torus_graph(2, 8), 20000, 4, 0.95); }
  SUBCASE("3d torus") { differential_script(torus_graph(3, 4), 20000, 5, 0.5); }
  SUBCASE("path") { differential_script(path_graph(30), 5000, 6, 0.5); }
}
