#include "fkdyn/graph.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace fk {

void DisjointSets::reset(std::size_t n) {
  parent_.resize(n);
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  size_.assign(n, 1);
}

std::size_t DisjointSets::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool DisjointSets::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

std::size_t Graph::num_ghosts() const {
  return static_cast<std::size_t>(
      std::count_if(classes.begin(), classes.end(), [](const auto& c) { return c.size() >= 2; }));
}

void Graph::validate() const {
  for (const auto& e : edges)
    if (e.u >= num_vertices || e.v >= num_vertices || e.u == e.v)
      throw std::invalid_argument("graph edge out of range or a self-loop");
  std::vector<char> seen(num_vertices, 0);
  for (const auto& c : classes)
    for (VertexId v : c) {
      if (v >= num_vertices) throw std::invalid_argument("ghost class vertex out of range");
      if (seen[v]) throw std::invalid_argument("ghost classes overlap");
      seen[v] = 1;
    }
}

Graph graph_of(const LatticeGeometry& geometry) {
  Graph g;
  g.num_vertices = geometry.num_vertices();
  g.edges = geometry.edges();
  return g;
}

Graph graph_of(const LatticeGeometry& geometry, const BoundaryCondition& bc) {
  Graph g = graph_of(geometry);
  validate_boundary(geometry, bc);
  for (const auto& c : bc.classes)
    if (c.size() >= 2) g.classes.push_back(c);
  return g;
}

Graph path_graph(std::size_t vertices) {
  Graph g;
  g.num_vertices = vertices;
  for (std::size_t i = 0; i + 1 < vertices; ++i)
    g.edges.push_back({static_cast<VertexId>(i), static_cast<VertexId>(i + 1)});
  return g;
}

Graph cycle_graph(std::size_t vertices) {
  if (vertices < 3) throw std::invalid_argument("cycle needs at least 3 vertices");
  Graph g = path_graph(vertices);
  g.edges.push_back({static_cast<VertexId>(vertices - 1), 0});
  return g;
}

namespace {

// Union-find over host vertices plus one node per ghost class.
void add_ghosts(const Graph& g, DisjointSets& ds) {
  std::size_t ghost = g.num_vertices;
  for (const auto& c : g.classes) {
    if (c.size() < 2) continue;
    for (VertexId v : c) ds.unite(ghost, v);
    ++ghost;
  }
}

}  // namespace

InducedGraph induced_graph(const Graph& host, const std::vector<VertexId>& vertices,
                           const std::vector<EdgeId>& edges, const EdgeSet& outside) {
  InducedGraph out;
  out.vertices = vertices;
  out.edges = edges;
  std::vector<VertexId> local(host.num_vertices, kNoEdge);
  for (std::size_t i = 0; i < vertices.size(); ++i) local[vertices[i]] = static_cast<VertexId>(i);
  std::vector<char> in_sub(host.num_edges(), 0);
  out.graph.num_vertices = vertices.size();
  for (EdgeId e : edges) {
    in_sub[e] = 1;
    const Edge& he = host.edges[e];
    if (local[he.u] == kNoEdge || local[he.v] == kNoEdge)
      throw std::invalid_argument("induced edge leaves the vertex set");
    out.graph.edges.push_back({local[he.u], local[he.v]});
  }

  DisjointSets ds(host.num_vertices + host.num_ghosts());
  add_ghosts(host, ds);
  for (EdgeId e = 0; e < host.num_edges(); ++e)
    if (!in_sub[e] && outside[e]) ds.unite(host.edges[e].u, host.edges[e].v);

  std::unordered_map<std::size_t, std::vector<VertexId>> groups;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const std::size_t root = ds.find(vertices[i]);
    auto [it, inserted] = groups.try_emplace(root);
    if (inserted) order.push_back(root);
    it->second.push_back(static_cast<VertexId>(i));
  }
  for (std::size_t root : order) {
    auto& members = groups[root];
    if (members.size() >= 2) out.graph.classes.push_back(std::move(members));
  }
  return out;
}

InducedGraph ball_graph(const Graph& host, const EdgeBall& ball, bool wired_outside) {
  EdgeSet outside(host.num_edges(), wired_outside ? 1 : 0);
  return induced_graph(host, ball.vertices, ball.edges, outside);
}

std::size_t count_components(const Graph& g, const EdgeSet& omega) {
  const std::size_t total = g.num_vertices + g.num_ghosts();
  DisjointSets ds(total);
  add_ghosts(g, ds);
  std::size_t comps = total;
  for (const auto& c : g.classes)
    if (c.size() >= 2) comps -= c.size();
  for (EdgeId e = 0; e < g.num_edges(); ++e)
    if (omega[e] && ds.unite(g.edges[e].u, g.edges[e].v)) --comps;
  return comps;
}

std::size_t largest_component_size(const Graph& g, const EdgeSet& omega) {
  DisjointSets ds(g.num_vertices + g.num_ghosts());
  add_ghosts(g, ds);
  for (EdgeId e = 0; e < g.num_edges(); ++e)
    if (omega[e]) ds.unite(g.edges[e].u, g.edges[e].v);
  std::vector<std::size_t> count(g.num_vertices + g.num_ghosts(), 0);
  std::size_t best = 0;
  for (std::size_t v = 0; v < g.num_vertices; ++v) best = std::max(best, ++count[ds.find(v)]);
  return best;
}

std::size_t count_open(const EdgeSet& omega) {
  return static_cast<std::size_t>(std::count(omega.begin(), omega.end(), std::uint8_t{1}));
}

}  // namespace fk
