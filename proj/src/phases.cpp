#include "fkdyn/phases.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace fk {

PhaseSpec PhaseSpec::make(std::size_t volume, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("phase eps must lie in (0,1)");
  PhaseSpec s;
  s.eps = eps;
  s.volume = volume;
  // Guard against eps * volume landing a hair above an integer.
  s.theta = static_cast<std::size_t>(std::ceil(eps * static_cast<double>(volume) - 1e-9));
  if (s.theta < 1) s.theta = 1;
  return s;
}

std::string to_string(Phase phase) { return phase == Phase::Wired ? "wired" : "free"; }

Phase phase_of(ConnectivityEngine& engine, const PhaseSpec& spec) {
  return phase_of_size(engine.largest_component(), spec);
}

Phase phase_of(const Graph& graph, const EdgeSet& omega, const PhaseSpec& spec) {
  return phase_of_size(largest_component_size(graph, omega), spec);
}

namespace {

bool wired_side_exit(ConnectivityEngine& engine, const PhaseSpec& spec) {
  const Graph& g = engine.graph();
  const std::size_t c1 = engine.largest_component();
  // Find the largest component; a second one of size >= theta would survive any single deletion.
  VertexId rep = kNoEdge;
  std::size_t big = 0;
  for (VertexId v = 0; v < g.num_vertices; ++v) {
    if (engine.component_size(v) < spec.theta) continue;
    if (rep == kNoEdge) {
      rep = v;
      big = 1;
    } else if (!engine.connected(rep, v)) {
      ++big;
      break;
    }
  }
  if (big != 1) return false;
  (void)c1;

  // Open edges with an endpoint in C1 are the only candidates.
  std::vector<EdgeId> candidates;
  for (EdgeId e = 0; e < g.num_edges(); ++e)
    if (engine.is_open(e) && engine.connected(g.edges[e].u, rep)) candidates.push_back(e);
  for (EdgeId e : candidates) {
    const int delta = engine.delete_edge(e);
    const bool exits = delta == 1 && engine.largest_component() < spec.theta;
    engine.insert_edge(e);
    if (exits) return true;
  }
  return false;
}

bool free_side_exit(ConnectivityEngine& engine, const PhaseSpec& spec) {
  const Graph& g = engine.graph();
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    if (engine.is_open(e)) continue;
    const Edge& ed = g.edges[e];
    const std::size_t a = engine.component_size(ed.u);
    const std::size_t b = engine.component_size(ed.v);
    if (a + b < spec.theta) continue;
    if (!engine.connected(ed.u, ed.v)) return true;
  }
  return false;
}

}  // namespace

bool on_phase_boundary(ConnectivityEngine& engine, const PhaseSpec& spec) {
  return phase_of(engine, spec) == Phase::Wired ? wired_side_exit(engine, spec) : free_side_exit(engine, spec);
}

bool on_phase_boundary_bruteforce(const Graph& graph, const EdgeSet& omega, const PhaseSpec& spec) {
  const Phase here = phase_of(graph, omega, spec);
  EdgeSet flipped = omega;
  for (EdgeId e = 0; e < graph.num_edges(); ++e) {
    flipped[e] ^= 1;
    const bool out = phase_of(graph, flipped, spec) != here;
    flipped[e] ^= 1;
    if (out) return true;
  }
  return false;
}

bool PhasePredicate::operator()(ConnectivityEngine& engine) const {
  switch (kind) {
    case Kind::Always: return true;
    case Kind::WiredPhase: return engine.largest_component() >= spec.theta;
    case Kind::FreePhase: return engine.largest_component() < spec.theta;
    case Kind::Custom: return custom(engine);
  }
  return true;
}

bool PhasePredicate::holds(const Graph& graph, const EdgeSet& omega) const {
  switch (kind) {
    case Kind::Always: return true;
    case Kind::WiredPhase: return largest_component_size(graph, omega) >= spec.theta;
    case Kind::FreePhase: return largest_component_size(graph, omega) < spec.theta;
    case Kind::Custom: {
      auto engine = make_engine(EngineKind::Naive, graph);
      engine->assign(omega);
      return custom(*engine);
    }
  }
  return true;
}

std::optional<Phase> PhasePredicate::phase() const {
  if (kind == Kind::WiredPhase) return Phase::Wired;
  if (kind == Kind::FreePhase) return Phase::Free;
  return std::nullopt;
}

std::optional<double> hitting_time_tau(const Graph& graph, const Trajectory& trajectory, const PhaseSpec& spec,
                                       EngineKind kind) {
  auto engine = make_engine(kind, graph);
  engine->assign(trajectory.initial);
  if (on_phase_boundary(*engine, spec)) return 0.0;
  for (const auto& ev : trajectory.events) {
    if (engine->is_open(ev.edge) == ev.open_after) continue;
    if (ev.open_after)
      engine->insert_edge(ev.edge);
    else
      engine->delete_edge(ev.edge);
    if (on_phase_boundary(*engine, spec)) return ev.time;
  }
  return std::nullopt;
}

StabilityReport stability_from_flags(Phase phase, const std::vector<std::uint8_t>& flags) {
  StabilityReport r;
  r.phase = phase;
  r.samples = flags.size();
  for (auto f : flags) r.on_boundary += f ? 1 : 0;
  if (r.samples > 0) {
    r.estimate = static_cast<double>(r.on_boundary) / static_cast<double>(r.samples);
    r.stderr_ = std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(r.samples));
  }
  return r;
}

}  // namespace fk
