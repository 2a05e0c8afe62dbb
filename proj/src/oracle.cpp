#include "fkdyn/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "fkdyn/heat_bath.hpp"

namespace fk {

EdgeSet state_to_config(State s, std::size_t num_edges) {
  EdgeSet omega(num_edges, 0);
  for (std::size_t e = 0; e < num_edges; ++e) omega[e] = (s >> e) & 1u;
  return omega;
}

State config_to_state(const EdgeSet& omega) {
  if (omega.size() > 32) throw TooLargeToEnumerate("configuration does not fit a state mask");
  State s = 0;
  for (std::size_t e = 0; e < omega.size(); ++e)
    if (omega[e]) s |= State{1} << e;
  return s;
}

double ExactModel::z() const { return std::exp(log_z); }

double ExactModel::log_weight(State s) const {
  const int open = std::popcount(s);
  const int closed = static_cast<int>(num_edges()) - open;
  double lw = components[s] * std::log(q);
  if (open > 0) lw += open * std::log(p);
  if (closed > 0) lw += closed * std::log1p(-p);
  return lw;
}

ExactModel exact_distribution(const Graph& graph, double p, double q) {
  graph.validate();
  if (graph.num_edges() > kMaxEnumerableEdges)
    throw TooLargeToEnumerate("graph has " + std::to_string(graph.num_edges()) + " edges; enumeration cap is " +
                              std::to_string(kMaxEnumerableEdges));
  if (graph.num_vertices + graph.num_ghosts() > 255) throw TooLargeToEnumerate("too many vertices to enumerate");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  if (!(q > 0.0)) throw std::invalid_argument("q must be positive");

  ExactModel m;
  m.graph = graph;
  m.p = p;
  m.q = q;
  const std::size_t E = graph.num_edges();
  const std::size_t S = std::size_t{1} << E;
  m.components.resize(S);
  EdgeSet omega(E);
  for (State s = 0; s < S; ++s) {
    for (std::size_t e = 0; e < E; ++e) omega[e] = (s >> e) & 1u;
    m.components[s] = static_cast<std::uint8_t>(count_components(graph, omega));
  }
  std::vector<double> lw(S);
  double top = -std::numeric_limits<double>::infinity();
  for (State s = 0; s < S; ++s) {
    lw[s] = m.log_weight(s);
    top = std::max(top, lw[s]);
  }
  double total = 0.0;
  m.pi.resize(S);
  for (State s = 0; s < S; ++s) {
    m.pi[s] = std::exp(lw[s] - top);
    total += m.pi[s];
  }
  for (double& x : m.pi) x /= total;
  m.log_z = top + std::log(total);
  return m;
}

std::vector<std::uint32_t> largest_component_table(const ExactModel& model) {
  const std::size_t E = model.num_edges();
  std::vector<std::uint32_t> out(model.num_states());
  for (State s = 0; s < out.size(); ++s)
    out[s] = static_cast<std::uint32_t>(largest_component_size(model.graph, state_to_config(s, E)));
  return out;
}

double ExactChain::open_probability(State s, std::size_t e) const {
  const bool bridge = (bridge_mask[s] >> e) & 1u;
  return heat_bath_probability(model->p, bridge ? bridge_q : model->q, bridge);
}

double ExactChain::flip_probability(State s, std::size_t e) const {
  const State t = s ^ (State{1} << e);
  if (!in_support(t)) return 0.0;
  const double h = open_probability(s, e);
  const bool open = (s >> e) & 1u;
  return (open ? 1.0 - h : h) / static_cast<double>(model->num_edges());
}

double ExactChain::hold_probability(State s) const {
  double out = 1.0;
  for (std::size_t e = 0; e < model->num_edges(); ++e) out -= flip_probability(s, e);
  return out;
}

double ExactChain::transition(State from, State to) const {
  if (from == to) return hold_probability(from);
  const State diff = from ^ to;
  if (std::popcount(diff) != 1) return 0.0;
  return flip_probability(from, static_cast<std::size_t>(std::countr_zero(diff)));
}

std::vector<double> ExactChain::step(const std::vector<double>& mu) const {
  const std::size_t E = model->num_edges();
  const std::size_t S = num_states();
  const double inv = 1.0 / static_cast<double>(E);
  std::vector<double> out(S, 0.0);
  for (State y = 0; y < S; ++y) {
    if (!in_support(y)) continue;
    double acc = 0.0;
    const double my = mu[y];
    for (std::size_t e = 0; e < E; ++e) {
      // Probability that an update at e leaves e in y's state.
      double k;
      if (!keep.empty()) {
        k = keep[y * E + e];
      } else {
        const double h = open_probability(y, e);
        k = ((y >> e) & 1u) ? h : 1.0 - h;
      }
      const State z = y ^ (State{1} << e);
      if (in_support(z))
        acc += k * (my + mu[z]);
      else
        acc += my;
    }
    out[y] = acc * inv;
  }
  return out;
}

namespace {

ExactChain build_chain(const ExactModel& model, double bridge_q, std::vector<std::uint8_t> allowed) {
  ExactChain c;
  c.model = &model;
  c.bridge_q = bridge_q;
  c.allowed = std::move(allowed);
  const std::size_t E = model.num_edges();
  const std::size_t S = model.num_states();
  c.bridge_mask.assign(S, 0);
  for (State s = 0; s < S; ++s) {
    std::uint32_t mask = 0;
    for (std::size_t e = 0; e < E; ++e) {
      const State with = s | (State{1} << e);
      const State without = s & ~(State{1} << e);
      if (model.components[with] != model.components[without]) mask |= 1u << e;
    }
    c.bridge_mask[s] = mask;
  }
  if (S * E <= (std::size_t{1} << 23)) {
    c.keep.resize(S * E);
    for (State s = 0; s < S; ++s)
      for (std::size_t e = 0; e < E; ++e) {
        const double h = c.open_probability(s, e);
        c.keep[s * E + e] = ((s >> e) & 1u) ? h : 1.0 - h;
      }
  }
  if (c.allowed.empty()) {
    c.stationary = model.pi;
  } else {
    if (c.allowed.size() != S) throw std::invalid_argument("restriction mask size mismatch");
    c.stationary = exact_conditional(model, [&](State s) { return c.allowed[s] != 0; });
  }
  return c;
}

}  // namespace

ExactChain exact_transition_matrix(const ExactModel& model) { return build_chain(model, model.q, {}); }

ExactChain exact_transition_matrix_with_bridge_q(const ExactModel& model, double bridge_q) {
  return build_chain(model, bridge_q, {});
}

ExactChain exact_restricted_chain(const ExactModel& model, const std::vector<std::uint8_t>& allowed) {
  return build_chain(model, model.q, allowed);
}

double max_row_sum_error(const ExactChain& chain) {
  double worst = 0.0;
  const std::size_t E = chain.model->num_edges();
  for (State s = 0; s < chain.num_states(); ++s) {
    if (!chain.in_support(s)) continue;
    double row = chain.hold_probability(s);
    for (std::size_t e = 0; e < E; ++e) row += chain.flip_probability(s, e);
    worst = std::max(worst, std::abs(row - 1.0));
    if (chain.hold_probability(s) < -1e-15) worst = std::max(worst, -chain.hold_probability(s));
  }
  return worst;
}

double reversibility_residual(const ExactChain& chain) {
  double worst = 0.0;
  const std::size_t E = chain.model->num_edges();
  for (State s = 0; s < chain.num_states(); ++s) {
    if (!chain.in_support(s)) continue;
    for (std::size_t e = 0; e < E; ++e) {
      const State t = s ^ (State{1} << e);
      if (t < s || !chain.in_support(t)) continue;
      const double lhs = chain.stationary[s] * chain.flip_probability(s, e);
      const double rhs = chain.stationary[t] * chain.flip_probability(t, e);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

double stationarity_residual(const ExactChain& chain) {
  const auto next = chain.step(chain.stationary);
  double worst = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) worst = std::max(worst, std::abs(next[i] - chain.stationary[i]));
  return worst;
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("distribution sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<double> propagate(const ExactChain& chain, State start, std::size_t t) {
  std::vector<double> mu(chain.num_states(), 0.0);
  mu[start] = 1.0;
  for (std::size_t i = 0; i < t; ++i) mu = chain.step(mu);
  return mu;
}

std::size_t exact_mixing_time_from(const ExactChain& chain, State start, double eps, std::size_t max_t) {
  if (eps >= 1.0) return 0;
  if (!chain.in_support(start)) throw std::invalid_argument("start state outside the chain's support");
  std::vector<double> mu(chain.num_states(), 0.0);
  mu[start] = 1.0;
  for (std::size_t t = 0; t <= max_t; ++t) {
    if (tv_distance(mu, chain.stationary) <= eps) return t;
    mu = chain.step(mu);
  }
  throw std::runtime_error("mixing time exceeds the iteration cap");
}

std::size_t exact_mixing_time(const ExactChain& chain, double eps, std::size_t max_t) {
  if (eps >= 1.0) return 0;
  const auto S = static_cast<long long>(chain.num_states());
  std::size_t worst = 0;
  bool overflow = false;
#pragma omp parallel for schedule(dynamic) reduction(max : worst) reduction(|| : overflow)
  for (long long s = 0; s < S; ++s) {
    if (!chain.in_support(static_cast<State>(s))) continue;
    try {
      worst = std::max(worst, exact_mixing_time_from(chain, static_cast<State>(s), eps, max_t));
    } catch (const std::runtime_error&) {
      overflow = true;
    }
  }
  if (overflow) throw std::runtime_error("mixing time exceeds the iteration cap");
  return worst;
}

ConductanceResult exact_conductance(const ExactChain& chain, const std::vector<std::uint8_t>& in_a) {
  const std::size_t S = chain.num_states();
  if (in_a.size() != S) throw std::invalid_argument("cut mask size mismatch");
  const std::size_t E = chain.model->num_edges();
  ConductanceResult r;
  for (State s = 0; s < S; ++s) {
    if (!in_a[s]) continue;
    r.pi_a += chain.stationary[s];
    for (std::size_t e = 0; e < E; ++e)
      if (!in_a[s ^ (State{1} << e)]) r.flow += chain.stationary[s] * chain.flip_probability(s, e);
  }
  const double denom = r.pi_a * (1.0 - r.pi_a);
  if (!(denom > 0.0)) throw DegenerateCut("cut has zero stationary mass on one side");
  r.phi = r.flow / denom;
  r.mixing_lower_bound = 1.0 / (2.0 * r.phi);
  return r;
}

std::vector<double> exact_conditional(const ExactModel& model, const std::function<bool(State)>& predicate) {
  std::vector<double> out(model.num_states(), 0.0);
  double mass = 0.0;
  for (State s = 0; s < out.size(); ++s)
    if (predicate(s)) {
      out[s] = model.pi[s];
      mass += model.pi[s];
    }
  if (!(mass > 0.0)) throw EmptyEvent("conditioning event has zero probability");
  for (double& x : out) x /= mass;
  return out;
}

std::vector<double> edge_marginals(const std::vector<double>& dist, std::size_t num_edges) {
  std::vector<double> out(num_edges, 0.0);
  for (State s = 0; s < dist.size(); ++s) {
    if (dist[s] == 0.0) continue;
    for (std::size_t e = 0; e < num_edges; ++e)
      if ((s >> e) & 1u) out[e] += dist[s];
  }
  return out;
}

nlohmann::json export_json(const ExactModel& model, const ExactChain* chain) {
  nlohmann::json j;
  j["p"] = model.p;
  j["q"] = model.q;
  j["num_edges"] = model.num_edges();
  j["log_Z"] = model.log_z;
  j["Z"] = model.z();
  j["atoms"] = model.pi;
  if (chain) {
    nlohmann::json triplets = nlohmann::json::array();
    for (State s = 0; s < chain->num_states(); ++s) {
      if (!chain->in_support(s)) continue;
      triplets.push_back({s, s, chain->hold_probability(s)});
      for (std::size_t e = 0; e < model.num_edges(); ++e) {
        const double f = chain->flip_probability(s, e);
        if (f > 0.0) triplets.push_back({s, s ^ (State{1} << e), f});
      }
    }
    j["P"] = triplets;
  }
  return j;
}

}  // namespace fk
