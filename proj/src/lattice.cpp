#include "fkdyn/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <numeric>

namespace fk {

std::string to_string(LatticeKind kind) { return kind == LatticeKind::Torus ? "torus" : "box"; }

LatticeKind lattice_kind_from_string(const std::string& s) {
  if (s == "torus") return LatticeKind::Torus;
  if (s == "box") return LatticeKind::Box;
  throw LatticeError("unknown lattice kind '" + s + "'");
}

LatticeGeometry LatticeGeometry::build(int d, int n, LatticeKind kind, unsigned periodic_mask) {
  if (d < 1) throw LatticeError("dimension must be >= 1");
  if (n < 1) throw LatticeError("side must be >= 1");
  if (d > 16) throw LatticeError("dimension too large");
  const unsigned all_axes = (1u << d) - 1u;
  if (kind == LatticeKind::Torus) {
    if (n < 3) throw TorusTooSmall("torus requires n >= 3 (got n=" + std::to_string(n) + ")");
    periodic_mask = all_axes;
  } else {
    if (periodic_mask & ~all_axes) throw LatticeError("periodic axis mask out of range");
    if (periodic_mask != 0 && n < 3) throw TorusTooSmall("periodic axes require n >= 3");
  }

  LatticeGeometry g;
  g.d_ = d;
  g.n_ = n;
  g.kind_ = kind;
  g.periodic_mask_ = periodic_mask;
  std::size_t count = 1;
  for (int i = 0; i < d; ++i) {
    count *= static_cast<std::size_t>(n);
    if (count > (1u << 26)) throw LatticeError("lattice too large");
  }
  g.num_vertices_ = count;
  g.forward_.assign(count * d, kNoEdge);

  std::vector<std::size_t> stride(d, 1);
  for (int i = 1; i < d; ++i) stride[i] = stride[i - 1] * n;

  std::vector<int> x(d, 0);
  for (std::size_t v = 0; v < count; ++v) {
    for (int a = 0; a < d; ++a) {
      const bool wraps = (periodic_mask >> a) & 1u;
      if (x[a] < n - 1 || wraps) {
        const std::size_t w = x[a] < n - 1 ? v + stride[a] : v - stride[a] * (n - 1);
        g.forward_[v * d + a] = static_cast<EdgeId>(g.edges_.size());
        g.edges_.push_back({static_cast<VertexId>(v), static_cast<VertexId>(w)});
        g.edge_axis_.push_back(a);
      }
    }
    for (int a = 0; a < d; ++a) {
      if (++x[a] < n) break;
      x[a] = 0;
    }
  }

  std::vector<std::uint32_t> deg(count, 0);
  for (const auto& e : g.edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  g.incidence_offset_.assign(count + 1, 0);
  for (std::size_t v = 0; v < count; ++v) g.incidence_offset_[v + 1] = g.incidence_offset_[v] + deg[v];
  g.incidence_.resize(g.incidence_offset_.back());
  std::vector<std::uint32_t> fill(g.incidence_offset_.begin(), g.incidence_offset_.end() - 1);
  for (EdgeId e = 0; e < g.edges_.size(); ++e) {
    g.incidence_[fill[g.edges_[e].u]++] = e;
    g.incidence_[fill[g.edges_[e].v]++] = e;
  }
  return g;
}

std::span<const EdgeId> LatticeGeometry::incident_edges(VertexId v) const {
  return {incidence_.data() + incidence_offset_[v], incidence_offset_[v + 1] - incidence_offset_[v]};
}

std::vector<int> LatticeGeometry::coords(VertexId v) const {
  std::vector<int> x(d_);
  for (int a = 0; a < d_; ++a) {
    x[a] = static_cast<int>(v % n_);
    v /= n_;
  }
  return x;
}

VertexId LatticeGeometry::vertex_at(std::span<const int> x) const {
  VertexId v = 0;
  for (int a = d_ - 1; a >= 0; --a) {
    int c = x[a];
    if (periodic(a)) c = ((c % n_) + n_) % n_;
    if (c < 0 || c >= n_) throw LatticeError("coordinate out of range");
    v = v * n_ + c;
  }
  return v;
}

std::optional<EdgeId> LatticeGeometry::edge_between(VertexId a, VertexId b) const {
  for (EdgeId e : incident_edges(a)) {
    const Edge& ed = edges_[e];
    if ((ed.u == a && ed.v == b) || (ed.u == b && ed.v == a)) return e;
  }
  return std::nullopt;
}

bool LatticeGeometry::is_boundary(VertexId v) const {
  for (int a = 0; a < d_; ++a) {
    const int c = static_cast<int>(v % n_);
    v /= n_;
    if (!periodic(a) && (c == 0 || c == n_ - 1)) return true;
  }
  return false;
}

std::vector<VertexId> LatticeGeometry::boundary_vertices() const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < num_vertices_; ++v)
    if (is_boundary(v)) out.push_back(v);
  return out;
}

int LatticeGeometry::distance(VertexId a, VertexId b) const {
  int dist = 0;
  for (int ax = 0; ax < d_; ++ax) {
    const int xa = static_cast<int>(a % n_);
    const int xb = static_cast<int>(b % n_);
    a /= n_;
    b /= n_;
    int delta = std::abs(xa - xb);
    if (periodic(ax)) delta = std::min(delta, n_ - delta);
    dist += delta;
  }
  return dist;
}

int LatticeGeometry::distance_to_edge(VertexId v, EdgeId e) const {
  return std::min(distance(v, edges_[e].u), distance(v, edges_[e].v));
}

nlohmann::json LatticeGeometry::descriptor() const {
  nlohmann::json j;
  j["d"] = d_;
  j["n"] = n_;
  j["kind"] = to_string(kind_);
  if (kind_ == LatticeKind::Box && periodic_mask_ != 0) j["periodic_axes"] = periodic_mask_;
  return j;
}

std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::Free: return "free";
    case BoundaryKind::Wired: return "wired";
    case BoundaryKind::SideHomogeneous: return "side-homogeneous";
    case BoundaryKind::Cylindrical: return "cylindrical";
    case BoundaryKind::InducedByConfiguration: return "induced";
    case BoundaryKind::Explicit: return "explicit";
  }
  return "?";
}

bool BoundaryCondition::refines(const BoundaryCondition& other) const {
  std::vector<std::size_t> owner;
  VertexId max_v = 0;
  for (const auto& c : other.classes)
    for (VertexId v : c) max_v = std::max(max_v, v);
  for (const auto& c : classes)
    for (VertexId v : c) max_v = std::max(max_v, v);
  owner.assign(static_cast<std::size_t>(max_v) + 1, static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < other.classes.size(); ++i)
    for (VertexId v : other.classes[i]) owner[v] = i;
  for (const auto& c : classes) {
    if (c.empty()) continue;
    const std::size_t o = owner[c.front()];
    if (o == static_cast<std::size_t>(-1)) return false;
    for (VertexId v : c)
      if (owner[v] != o) return false;
  }
  return true;
}

bool BoundaryCondition::is_free() const {
  return std::all_of(classes.begin(), classes.end(), [](const auto& c) { return c.size() <= 1; });
}

std::size_t BoundaryCondition::covered_vertices() const {
  std::size_t s = 0;
  for (const auto& c : classes) s += c.size();
  return s;
}

nlohmann::json BoundaryCondition::descriptor() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  if (kind == BoundaryKind::SideHomogeneous) j["side_mask"] = side_mask;
  if (kind == BoundaryKind::Cylindrical) j["wired"] = wired_tag;
  if (kind == BoundaryKind::Explicit || kind == BoundaryKind::InducedByConfiguration) j["classes"] = classes;
  return j;
}

namespace {

std::vector<std::vector<VertexId>> singletons(const std::vector<VertexId>& vs) {
  std::vector<std::vector<VertexId>> out;
  out.reserve(vs.size());
  for (VertexId v : vs) out.push_back({v});
  return out;
}

}  // namespace

BoundaryCondition make_boundary(const LatticeGeometry& geometry, BoundaryKind kind,
                                const BoundaryParams& params) {
  if (geometry.kind() != LatticeKind::Box)
    throw LatticeError("boundary conditions apply to Box geometries only");
  const auto boundary = geometry.boundary_vertices();
  BoundaryCondition bc;
  bc.kind = kind;
  switch (kind) {
    case BoundaryKind::Free:
      bc.classes = singletons(boundary);
      break;
    case BoundaryKind::Wired:
      if (!boundary.empty()) bc.classes = {boundary};
      break;
    case BoundaryKind::SideHomogeneous: {
      const int d = geometry.dimension();
      const unsigned all_sides = (d >= 16) ? 0xffffffffu : ((1u << (2 * d)) - 1u);
      unsigned valid = 0;
      for (int a = 0; a < d; ++a)
        if (!geometry.periodic(a)) valid |= 3u << (2 * a);
      if (params.side_mask == 0 || (params.side_mask & ~all_sides) || (params.side_mask & ~valid))
        throw InvalidSideMask("side mask selects no valid side");
      bc.side_mask = params.side_mask;
      std::vector<VertexId> wired;
      std::vector<VertexId> rest;
      const int n = geometry.side();
      for (VertexId v : boundary) {
        const auto x = geometry.coords(v);
        bool on_selected = false;
        for (int a = 0; a < d && !on_selected; ++a) {
          if ((params.side_mask >> (2 * a)) & 1u && x[a] == 0) on_selected = true;
          if ((params.side_mask >> (2 * a + 1)) & 1u && x[a] == n - 1) on_selected = true;
        }
        (on_selected ? wired : rest).push_back(v);
      }
      if (wired.empty()) throw InvalidSideMask("side mask selects no boundary vertices");
      bc.classes.push_back(wired);
      for (VertexId v : rest) bc.classes.push_back({v});
      break;
    }
    case BoundaryKind::Cylindrical:
      if (geometry.periodic_mask() == 0)
        throw LatticeError("cylindrical boundary needs a geometry with periodic axes");
      bc.wired_tag = params.wired;
      if (params.wired) {
        if (!boundary.empty()) bc.classes = {boundary};
      } else {
        bc.classes = singletons(boundary);
      }
      break;
    case BoundaryKind::InducedByConfiguration:
    case BoundaryKind::Explicit: {
      bc.classes = params.classes;
      for (auto& c : bc.classes) std::sort(c.begin(), c.end());
      // Boundary vertices not mentioned stay singletons.
      std::vector<char> seen(geometry.num_vertices(), 0);
      for (const auto& c : bc.classes)
        for (VertexId v : c) {
          if (v >= geometry.num_vertices()) throw LatticeError("class vertex out of range");
          if (seen[v]) throw LatticeError("boundary classes are not disjoint");
          seen[v] = 1;
        }
      for (VertexId v : boundary)
        if (!seen[v]) bc.classes.push_back({v});
      break;
    }
  }
  validate_boundary(geometry, bc);
  return bc;
}

void validate_boundary(const LatticeGeometry& geometry, const BoundaryCondition& bc) {
  std::vector<char> is_bd(geometry.num_vertices(), 0);
  for (VertexId v : geometry.boundary_vertices()) is_bd[v] = 1;
  std::vector<char> seen(geometry.num_vertices(), 0);
  std::size_t covered = 0;
  for (const auto& c : bc.classes) {
    if (c.empty()) throw LatticeError("empty boundary class");
    for (VertexId v : c) {
      if (v >= geometry.num_vertices() || !is_bd[v]) throw LatticeError("class contains a non-boundary vertex");
      if (seen[v]) throw LatticeError("boundary classes are not disjoint");
      seen[v] = 1;
      ++covered;
    }
  }
  const auto expected = static_cast<std::size_t>(std::count(is_bd.begin(), is_bd.end(), 1));
  if (covered != expected) throw LatticeError("boundary classes do not cover the boundary");
}

EdgeBall edge_ball(const LatticeGeometry& geometry, EdgeId e, int m) {
  if (e >= geometry.num_edges()) throw LatticeError("edge out of range");
  if (m < 0) throw LatticeError("ball radius must be >= 0");
  EdgeBall ball;
  ball.center = e;
  ball.radius = m;
  std::vector<int> dist(geometry.num_vertices(), -1);
  std::deque<VertexId> queue;
  const Edge c = geometry.edge(e);
  dist[c.u] = 0;
  dist[c.v] = 0;
  queue.push_back(c.u);
  queue.push_back(c.v);
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    ball.vertices.push_back(v);
    if (dist[v] == m) continue;
    for (EdgeId f : geometry.incident_edges(v)) {
      const Edge& ed = geometry.edge(f);
      const VertexId w = ed.u == v ? ed.v : ed.u;
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  std::sort(ball.vertices.begin(), ball.vertices.end());
  for (EdgeId f = 0; f < geometry.num_edges(); ++f) {
    const Edge& ed = geometry.edge(f);
    if (dist[ed.u] >= 0 && dist[ed.v] >= 0) ball.edges.push_back(f);
  }
  return ball;
}

SubBox central_half_box(const LatticeGeometry& geometry) {
  const int n = geometry.side();
  const int lo = n / 4;
  const int hi = n - 1 - lo;
  SubBox box;
  std::vector<char> inside(geometry.num_vertices(), 0);
  for (VertexId v = 0; v < geometry.num_vertices(); ++v) {
    const auto x = geometry.coords(v);
    if (std::all_of(x.begin(), x.end(), [&](int c) { return c >= lo && c <= hi; })) {
      inside[v] = 1;
      box.vertices.push_back(v);
    }
  }
  for (EdgeId e = 0; e < geometry.num_edges(); ++e) {
    const Edge& ed = geometry.edge(e);
    if (inside[ed.u] && inside[ed.v]) box.edges.push_back(e);
  }
  for (VertexId v : box.vertices) {
    bool edge_of_box = geometry.is_boundary(v);
    for (EdgeId f : geometry.incident_edges(v)) {
      const Edge& ed = geometry.edge(f);
      if (!inside[ed.u == v ? ed.v : ed.u]) edge_of_box = true;
    }
    if (edge_of_box) box.boundary.push_back(v);
  }
  return box;
}

std::vector<EdgeId> embedded_half_box_edges(const LatticeGeometry& host, int r, int offset) {
  const int d = host.dimension();
  if (r > host.side()) throw LatticeError("embedded box does not fit in host");
  const auto local = LatticeGeometry::build(d, r, LatticeKind::Box);
  const auto half = central_half_box(local);
  std::vector<EdgeId> out;
  out.reserve(half.edges.size());
  for (EdgeId le : half.edges) {
    auto x = local.coords(local.edge(le).u);
    for (int a = 0; a < d; ++a) {
      x[a] += offset;
      if (!host.periodic(a) && offset + r > host.side()) throw LatticeError("embedded box out of range");
    }
    const VertexId hv = host.vertex_at(x);
    const EdgeId he = host.forward_edge(hv, local.edge_axis(le));
    if (he == kNoEdge) throw LatticeError("embedded edge missing in host");
    out.push_back(he);
  }
  return out;
}

}  // namespace fk
