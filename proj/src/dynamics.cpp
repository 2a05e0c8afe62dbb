#include "fkdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace fk {

void ModelParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  if (!(q >= 1.0)) throw std::invalid_argument("q must be >= 1");
  if (bridge_q && !(*bridge_q > 0.0)) throw std::invalid_argument("bridge q must be positive");
}

EdgeSet initial_config(std::size_t num_edges, Init init) {
  return EdgeSet(num_edges, init == Init::Full ? 1 : 0);
}

Chain::Chain(std::shared_ptr<const Graph> graph, ModelParams params, EngineKind kind, const EdgeSet& init)
    : graph_(std::move(graph)), params_(params), engine_(make_engine(kind, graph_)) {
  params_.validate();
  engine_->assign(init);
}

Chain::Chain(std::shared_ptr<const Graph> graph, ModelParams params, EngineKind kind, Init init)
    : Chain(graph, params, kind, initial_config(graph->num_edges(), init)) {}

Chain::Chain(const Chain& other)
    : events(other.events),
      time(other.time),
      last_event_time(other.last_event_time),
      graph_(other.graph_),
      params_(other.params_),
      engine_(other.engine_->clone()) {}

Chain& Chain::operator=(const Chain& other) {
  if (this != &other) *this = Chain(other);
  return *this;
}

bool Chain::apply_update(EdgeId e, double u) {
  ConnectivityEngine& eng = *engine_;
  const double hb = params_.open_probability(true);
  const double hn = params_.open_probability(false);
  const double lo = std::min(hb, hn);
  const double hi = std::max(hb, hn);
  const bool open = eng.is_open(e);
  // Outside [lo, hi) the outcome does not depend on the bridge status.
  if (u < lo) {
    if (open) return false;
    eng.insert_edge(e);
    return true;
  }
  if (u >= hi) {
    if (!open) return false;
    eng.delete_edge(e);
    return true;
  }
  if (!open) {
    const Edge& ed = eng.graph().edges[e];
    const bool bridge = !eng.connected(ed.u, ed.v);
    if (u < (bridge ? hb : hn)) {
      eng.insert_edge(e);
      return true;
    }
    return false;
  }
  const bool bridge = eng.delete_edge(e) == 1;
  if (u < (bridge ? hb : hn)) {
    eng.insert_edge(e);
    return false;
  }
  return true;
}

void run_discrete(Chain& chain, std::uint64_t steps, const EventStream& stream) {
  for (std::uint64_t i = 0; i < steps; ++i) {
    const UpdateEvent ev = stream.event(chain.events++);
    chain.apply_update(ev.edge, ev.u);
  }
}

void run_continuous(Chain& chain, double horizon, const EventStream& stream) {
  const double rate = static_cast<double>(chain.num_edges());
  if (rate == 0.0) {
    chain.time = std::max(chain.time, horizon);
    return;
  }
  for (;;) {
    const UpdateEvent ev = stream.event(chain.events);
    const double t = chain.last_event_time + ev.wait / rate;
    if (t > horizon) break;
    chain.apply_update(ev.edge, ev.u);
    chain.last_event_time = t;
    ++chain.events;
  }
  chain.time = std::max(chain.time, horizon);
}

CoupledRun run_coupled(CoupledFamily& family, double horizon, const EventStream& stream,
                       const CoupledOptions& options) {
  CoupledRun out;
  auto& chains = family.chains;
  if (chains.empty()) return out;
  const std::size_t E = chains.front().num_edges();
  for (const auto& c : chains)
    if (c.num_edges() != E) throw std::invalid_argument("coupled chains must share the edge index space");

  std::vector<std::size_t> diff(chains.size(), 0);
  for (std::size_t j = 1; j < chains.size(); ++j)
    for (EdgeId e = 0; e < E; ++e)
      diff[j] += chains[j].engine().is_open(e) != chains[0].engine().is_open(e) ? 1 : 0;
  for (const auto& [a, b] : family.order)
    for (EdgeId e = 0; e < E; ++e)
      if (chains[b].engine().is_open(e) && !chains[a].engine().is_open(e)) ++out.violations;

  const auto all_agree = [&] {
    return std::all_of(diff.begin() + 1, diff.end(), [](std::size_t d) { return d == 0; });
  };
  std::size_t next_sample = 0;
  const auto record_until = [&](double t) {
    while (next_sample < options.sample_times.size() && options.sample_times[next_sample] < t &&
           options.sample_times[next_sample] <= horizon) {
      out.disagreement.emplace_back(options.sample_times[next_sample], chains.size() > 1 ? diff[1] : 0);
      ++next_sample;
    }
  };

  if (all_agree()) {
    out.coupled = true;
    out.coupling_time = family.time;
  }
  const double rate = static_cast<double>(E);
  std::vector<std::uint8_t> before(chains.size());
  while (!(out.coupled && options.stop_when_coupled) && rate > 0.0) {
    const UpdateEvent ev = stream.event(family.events);
    const double t = family.last_event_time + ev.wait / rate;
    if (t > horizon) break;
    record_until(t);
    for (std::size_t j = 0; j < chains.size(); ++j) {
      before[j] = chains[j].engine().is_open(ev.edge);
      chains[j].apply_update(ev.edge, ev.u);
      chains[j].events = family.events + 1;
      chains[j].last_event_time = t;
    }
    const bool ref_before = before[0];
    const bool ref_after = chains[0].engine().is_open(ev.edge);
    for (std::size_t j = 1; j < chains.size(); ++j) {
      const bool was = before[j] != ref_before;
      const bool now = chains[j].engine().is_open(ev.edge) != ref_after;
      if (was && !now) --diff[j];
      if (!was && now) ++diff[j];
    }
    for (const auto& [a, b] : family.order)
      if (chains[b].engine().is_open(ev.edge) && !chains[a].engine().is_open(ev.edge)) ++out.violations;
    family.last_event_time = t;
    ++family.events;
    if (!out.coupled && all_agree()) {
      out.coupled = true;
      out.coupling_time = t;
    }
  }
  family.time = std::max(family.time, horizon);
  if (out.coupled && options.stop_when_coupled) {
    // Coupled chains stay together; the remaining samples are zero.
    while (next_sample < options.sample_times.size() && options.sample_times[next_sample] <= horizon)
      out.disagreement.emplace_back(options.sample_times[next_sample++], 0);
  } else {
    record_until(std::numeric_limits<double>::infinity());
  }
  for (auto& c : chains) c.time = family.time;
  return out;
}

RestrictedRun run_restricted(Chain& chain, const PhasePredicate& predicate, double horizon,
                             const EventStream& stream, const RestrictedOptions& options) {
  RestrictedRun out;
  ConnectivityEngine& eng = chain.engine();
  if (!predicate(eng)) throw InitOutsidePhase("initial state violates the phase predicate");
  const auto phase = predicate.phase();
  const bool track = options.track_boundary && phase.has_value();
  if (track && on_phase_boundary(eng, predicate.spec)) out.hit_boundary_time = chain.last_event_time;
  if (options.record) out.trajectory.initial = eng.configuration();

  const double rate = static_cast<double>(chain.num_edges());
  while (rate > 0.0) {
    const UpdateEvent ev = stream.event(chain.events);
    const double t = chain.last_event_time + ev.wait / rate;
    if (t > horizon) break;
    const bool was_open = eng.is_open(ev.edge);
    if (chain.apply_update(ev.edge, ev.u)) {
      if (!predicate(eng)) {
        ++out.exit_attempts;
        if (was_open)
          eng.insert_edge(ev.edge);
        else
          eng.delete_edge(ev.edge);
      } else {
        if (options.record) out.trajectory.events.push_back({t, ev.edge, !was_open});
        if (track && !out.hit_boundary_time && on_phase_boundary(eng, predicate.spec)) out.hit_boundary_time = t;
      }
    }
    if (!predicate(eng)) ++out.violations;
    chain.last_event_time = t;
    ++chain.events;
  }
  chain.time = std::max(chain.time, horizon);
  return out;
}

}  // namespace fk
