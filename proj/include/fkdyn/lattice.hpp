#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fk {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr EdgeId kNoEdge = 0xffffffffu;

struct Edge {
  VertexId u;
  VertexId v;
};

class LatticeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TorusTooSmall : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

class InvalidSideMask : public LatticeError {
 public:
  using LatticeError::LatticeError;
};

enum class LatticeKind { Torus, Box };

std::string to_string(LatticeKind kind);
LatticeKind lattice_kind_from_string(const std::string& s);

// Hypercubic lattice with n vertices per side. Torus wraps every axis; a Box
// wraps only the axes in `periodic_mask` (cylinders). Vertex ids are
// row-major in the coordinates (axis 0 fastest); edge ids are ordered by
// (base vertex, axis) where the edge runs from base to base + e_axis.
class LatticeGeometry {
 public:
  static LatticeGeometry build(int d, int n, LatticeKind kind, unsigned periodic_mask = 0);

  int dimension() const { return d_; }
  int side() const { return n_; }
  LatticeKind kind() const { return kind_; }
  unsigned periodic_mask() const { return periodic_mask_; }
  bool periodic(int axis) const { return (periodic_mask_ >> axis) & 1u; }

  std::size_t num_vertices() const { return num_vertices_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  Edge edge(EdgeId e) const { return edges_[e]; }
  int edge_axis(EdgeId e) const { return edge_axis_[e]; }

  std::span<const EdgeId> incident_edges(VertexId v) const;
  std::size_t degree(VertexId v) const { return incident_edges(v).size(); }

  std::vector<int> coords(VertexId v) const;
  VertexId vertex_at(std::span<const int> coords) const;
  // Edge from v in the positive direction of `axis`, if present.
  EdgeId forward_edge(VertexId v, int axis) const { return forward_[v * d_ + axis]; }
  std::optional<EdgeId> edge_between(VertexId a, VertexId b) const;

  // Vertices with a neighbour outside the region along a non-periodic axis.
  bool is_boundary(VertexId v) const;
  std::vector<VertexId> boundary_vertices() const;

  // Graph distance (l1 with wraparound on periodic axes).
  int distance(VertexId a, VertexId b) const;
  int distance_to_edge(VertexId v, EdgeId e) const;

  nlohmann::json descriptor() const;

 private:
  int d_ = 0;
  int n_ = 0;
  LatticeKind kind_ = LatticeKind::Box;
  unsigned periodic_mask_ = 0;
  std::size_t num_vertices_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> edge_axis_;
  std::vector<EdgeId> forward_;
  std::vector<std::uint32_t> incidence_offset_;
  std::vector<EdgeId> incidence_;
};

enum class BoundaryKind { Free, Wired, SideHomogeneous, Cylindrical, InducedByConfiguration, Explicit };

std::string to_string(BoundaryKind kind);

// A partition of the boundary vertices; vertices in one class are identified.
struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::Free;
  unsigned side_mask = 0;
  bool wired_tag = false;
  std::vector<std::vector<VertexId>> classes;

  // True iff this partition refines `other` (xi <= xi').
  bool refines(const BoundaryCondition& other) const;
  bool is_free() const;
  bool is_wired() const { return classes.size() == 1; }
  std::size_t covered_vertices() const;
  nlohmann::json descriptor() const;
};

struct BoundaryParams {
  unsigned side_mask = 0;                    // SideHomogeneous: bit (2*axis + high)
  bool wired = false;                        // Cylindrical: wired remaining faces
  std::vector<std::vector<VertexId>> classes;  // Explicit
};

BoundaryCondition make_boundary(const LatticeGeometry& geometry, BoundaryKind kind,
                                const BoundaryParams& params = {});

// Validates a partition against the geometry's boundary: pairwise disjoint,
// covering exactly the boundary vertices.
void validate_boundary(const LatticeGeometry& geometry, const BoundaryCondition& bc);

struct EdgeBall {
  EdgeId center = kNoEdge;
  int radius = 0;
  std::vector<VertexId> vertices;  // sorted host ids
  std::vector<EdgeId> edges;       // sorted host ids, induced
};

EdgeBall edge_ball(const LatticeGeometry& geometry, EdgeId e, int m);

// Central sub-box used as the "half box" of a Box region: coordinates in
// [n/4, n-1-n/4] on every axis (integer division).
struct SubBox {
  std::vector<VertexId> vertices;
  std::vector<EdgeId> edges;  // induced
  std::vector<VertexId> boundary;  // vertices of the sub-box with a neighbour outside it
};

SubBox central_half_box(const LatticeGeometry& geometry);

// Box of side r placed at coordinates [offset, offset + r) on a host geometry,
// returning host edge ids of its central half box in the same order as
// central_half_box(Box(d, r)).edges.
std::vector<EdgeId> embedded_half_box_edges(const LatticeGeometry& host, int r, int offset = 0);

}  // namespace fk
