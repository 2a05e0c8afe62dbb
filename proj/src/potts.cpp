#include "fkdyn/potts.hpp"

#include <cmath>

namespace fk {

namespace {

constexpr std::size_t kMaxPottsStates = std::size_t{1} << 24;

// Component label per lattice vertex, with ghost classes merged.
std::vector<std::size_t> component_labels(const Graph& graph, const EdgeSet& omega, std::size_t& count) {
  DisjointSets ds(graph.num_vertices + graph.num_ghosts());
  std::size_t ghost = graph.num_vertices;
  for (const auto& c : graph.classes) {
    if (c.size() < 2) continue;
    for (VertexId v : c) ds.unite(ghost, v);
    ++ghost;
  }
  for (EdgeId e = 0; e < graph.num_edges(); ++e)
    if (omega[e]) ds.unite(graph.edges[e].u, graph.edges[e].v);
  std::vector<std::size_t> label_of_root(graph.num_vertices + graph.num_ghosts(), SIZE_MAX);
  std::vector<std::size_t> label(graph.num_vertices);
  count = 0;
  for (VertexId v = 0; v < graph.num_vertices; ++v) {
    const std::size_t r = ds.find(v);
    if (label_of_root[r] == SIZE_MAX) label_of_root[r] = count++;
    label[v] = label_of_root[r];
  }
  return label;
}

bool class_constant(const Graph& graph, const Spins& sigma) {
  for (const auto& c : graph.classes)
    for (VertexId v : c)
      if (sigma[v] != sigma[c.front()]) return false;
  return true;
}

}  // namespace

std::uint32_t require_integer_q(double q) {
  if (!(q >= 1.0) || std::floor(q) != q || q > 1e6) throw NonIntegerQ("Potts operations need integer q >= 1");
  return static_cast<std::uint32_t>(q);
}

Spins fk_to_potts(const Graph& graph, const EdgeSet& omega, double q, CounterRng& rng) {
  const std::uint32_t colors = require_integer_q(q);
  std::size_t count = 0;
  const auto label = component_labels(graph, omega, count);
  std::vector<std::uint32_t> color(count);
  for (auto& c : color) c = rng.below(colors);
  Spins sigma(graph.num_vertices);
  for (VertexId v = 0; v < graph.num_vertices; ++v) sigma[v] = color[label[v]];
  return sigma;
}

EdgeSet potts_to_fk(const Graph& graph, const Spins& sigma, double p, CounterRng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  EdgeSet omega(graph.num_edges(), 0);
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    const Edge& ed = graph.edges[e];
    // Draw for every edge so the stream position does not depend on sigma.
    const double u = rng.uniform();
    if (sigma[ed.u] == sigma[ed.v] && u < p) omega[e] = 1;
  }
  return omega;
}

Spins swendsen_wang_step(const Graph& graph, const Spins& sigma, double p, double q, CounterRng& rng) {
  require_integer_q(q);
  return fk_to_potts(graph, potts_to_fk(graph, sigma, p, rng), q, rng);
}

std::size_t potts_index(const Spins& sigma, std::uint32_t q) {
  std::size_t idx = 0;
  for (std::size_t i = sigma.size(); i-- > 0;) idx = idx * q + sigma[i];
  return idx;
}

Spins potts_from_index(std::size_t index, std::size_t num_vertices, std::uint32_t q) {
  Spins s(num_vertices);
  for (std::size_t i = 0; i < num_vertices; ++i) {
    s[i] = static_cast<std::uint32_t>(index % q);
    index /= q;
  }
  return s;
}

namespace {

std::size_t potts_state_count(std::size_t vertices, std::uint32_t q) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < vertices; ++i) {
    total *= q;
    if (total > kMaxPottsStates) throw TooLargeToEnumerate("Potts state space too large to enumerate");
  }
  return total;
}

}  // namespace

std::vector<double> exact_potts_gibbs(const Graph& graph, double p, double q) {
  const std::uint32_t colors = require_integer_q(q);
  const std::size_t total = potts_state_count(graph.num_vertices, colors);
  std::vector<double> out(total, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    const Spins s = potts_from_index(i, graph.num_vertices, colors);
    if (!class_constant(graph, s)) continue;
    int cut = 0;
    for (const auto& e : graph.edges) cut += s[e.u] != s[e.v] ? 1 : 0;
    const double w = cut == 0 ? 1.0 : std::pow(1.0 - p, cut);
    out[i] = w;
    z += w;
  }
  for (double& x : out) x /= z;
  return out;
}

std::vector<double> exact_fk_pushforward(const ExactModel& model, double q) {
  const std::uint32_t colors = require_integer_q(q);
  const Graph& g = model.graph;
  const std::size_t total = potts_state_count(g.num_vertices, colors);
  std::vector<double> out(total, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    const Spins s = potts_from_index(i, g.num_vertices, colors);
    if (!class_constant(g, s)) continue;
    // sigma is reachable from omega iff omega only uses equal-spin edges;
    // it then has probability q^{-#components}.
    std::uint32_t allowed = 0;
    for (EdgeId e = 0; e < g.num_edges(); ++e)
      if (s[g.edges[e].u] == s[g.edges[e].v]) allowed |= 1u << e;
    double acc = 0.0;
    for (State w = allowed;; w = (w - 1) & allowed) {
      acc += model.pi[w] * std::pow(static_cast<double>(colors), -static_cast<double>(model.components[w]));
      if (w == 0) break;
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace fk
