#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fkdyn/lattice.hpp"

namespace fk {

using EdgeSet = std::vector<std::uint8_t>;  // one byte per edge, 1 = open

// A finite graph together with ghost wirings: every class of size >= 2 is
// identified when counting components. The engines and the oracle work on
// this; lattices are converted with the helpers below.
struct Graph {
  std::size_t num_vertices = 0;
  std::vector<Edge> edges;
  std::vector<std::vector<VertexId>> classes;

  std::size_t num_edges() const { return edges.size(); }
  std::size_t num_ghosts() const;
  void validate() const;
};

Graph graph_of(const LatticeGeometry& geometry);
Graph graph_of(const LatticeGeometry& geometry, const BoundaryCondition& bc);

Graph path_graph(std::size_t vertices);
Graph cycle_graph(std::size_t vertices);

// Subgraph induced by `vertices` (sorted host ids); local vertex i is
// vertices[i] and local edge j is edges[j]. The boundary of the subgraph
// inherits the host ghost classes plus every connection made through host
// edges outside the subgraph that are open in `outside`.
struct InducedGraph {
  Graph graph;
  std::vector<VertexId> vertices;
  std::vector<EdgeId> edges;
};

InducedGraph induced_graph(const Graph& host, const std::vector<VertexId>& vertices,
                           const std::vector<EdgeId>& edges, const EdgeSet& outside);

// B^1 (outside all open) and B^0 (outside all closed) around an edge ball.
InducedGraph ball_graph(const Graph& host, const EdgeBall& ball, bool wired_outside);

// Number of components of (V, omega) with ghost identification, from scratch.
std::size_t count_components(const Graph& g, const EdgeSet& omega);
// Lattice-vertex size of the largest component, from scratch.
std::size_t largest_component_size(const Graph& g, const EdgeSet& omega);

std::size_t count_open(const EdgeSet& omega);

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n = 0) { reset(n); }
  void reset(std::size_t n);
  std::size_t find(std::size_t x);
  bool unite(std::size_t a, std::size_t b);
  std::size_t size(std::size_t x) { return size_[find(x)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace fk
