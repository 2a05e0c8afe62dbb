#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "fkdyn/graph.hpp"

namespace fk {

class TooLargeToEnumerate : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateCut : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyEvent : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMaxEnumerableEdges = 22;

// Configurations are bitmasks: bit e set <=> edge e open.
using State = std::uint32_t;

EdgeSet state_to_config(State s, std::size_t num_edges);
State config_to_state(const EdgeSet& omega);

struct ExactModel {
  Graph graph;
  double p = 0.5;
  double q = 1.0;
  std::vector<std::uint8_t> components;  // |Comp(omega; xi)| per state
  std::vector<double> pi;
  double log_z = 0.0;

  std::size_t num_edges() const { return graph.num_edges(); }
  std::size_t num_states() const { return pi.size(); }
  double z() const;
  double log_weight(State s) const;
};

ExactModel exact_distribution(const Graph& graph, double p, double q);

// Lattice-vertex size of the largest component for every state.
std::vector<std::uint32_t> largest_component_table(const ExactModel& model);

// Discrete-time heat-bath chain; transitions are kept implicit. A non-empty
// `allowed` mask gives the rejection-restricted chain on that set.
struct ExactChain {
  const ExactModel* model = nullptr;
  double bridge_q = 1.0;  // q used in the bridge case (differs from model q only under fault injection)
  std::vector<std::uint32_t> bridge_mask;  // bit e: e is a bridge of omega with e added
  std::vector<std::uint8_t> allowed;
  std::vector<double> stationary;
  // keep[s * E + e]: probability that an update at e leaves e as in s (cached on small models).
  std::vector<double> keep;

  std::size_t num_states() const { return bridge_mask.size(); }
  bool in_support(State s) const { return allowed.empty() || allowed[s]; }
  double open_probability(State s, std::size_t e) const;
  // P(s -> s with bit e flipped), 0 if the move is rejected.
  double flip_probability(State s, std::size_t e) const;
  double hold_probability(State s) const;
  double transition(State from, State to) const;
  std::vector<double> step(const std::vector<double>& mu) const;
};

ExactChain exact_transition_matrix(const ExactModel& model);
ExactChain exact_restricted_chain(const ExactModel& model, const std::vector<std::uint8_t>& allowed);
ExactChain exact_transition_matrix_with_bridge_q(const ExactModel& model, double bridge_q);

double max_row_sum_error(const ExactChain& chain);
double reversibility_residual(const ExactChain& chain);
double stationarity_residual(const ExactChain& chain);

double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

// Distribution after t steps from a point mass.
std::vector<double> propagate(const ExactChain& chain, State start, std::size_t t);
// Smallest t with TV(P^t(x0, .), stationary) <= eps for one start.
std::size_t exact_mixing_time_from(const ExactChain& chain, State start, double eps, std::size_t max_t = 1000000);
// Worst case over all starts in the support.
std::size_t exact_mixing_time(const ExactChain& chain, double eps, std::size_t max_t = 1000000);

struct ConductanceResult {
  double phi = 0.0;
  double flow = 0.0;
  double pi_a = 0.0;
  double mixing_lower_bound = 0.0;  // 1 / (2 phi)
};

ConductanceResult exact_conductance(const ExactChain& chain, const std::vector<std::uint8_t>& in_a);

std::vector<double> exact_conditional(const ExactModel& model, const std::function<bool(State)>& predicate);

// P(edge e open) for each edge under a distribution on states.
std::vector<double> edge_marginals(const std::vector<double>& dist, std::size_t num_edges);

nlohmann::json export_json(const ExactModel& model, const ExactChain* chain = nullptr);

}  // namespace fk
