#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fkdyn/graph.hpp"
#include "fkdyn/oracle.hpp"
#include "fkdyn/rng.hpp"

namespace fk {

class NonIntegerQ : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Spins = std::vector<std::uint32_t>;  // colors 0..q-1

std::uint32_t require_integer_q(double q);

// Colors each component of omega (ghost classes included) uniformly.
Spins fk_to_potts(const Graph& graph, const EdgeSet& omega, double q, CounterRng& rng);
// Opens each edge joining equal spins independently with probability p.
EdgeSet potts_to_fk(const Graph& graph, const Spins& sigma, double p, CounterRng& rng);
Spins swendsen_wang_step(const Graph& graph, const Spins& sigma, double p, double q, CounterRng& rng);

// Potts configurations are indexed base q with vertex 0 least significant.
std::size_t potts_index(const Spins& sigma, std::uint32_t q);
Spins potts_from_index(std::size_t index, std::size_t num_vertices, std::uint32_t q);

// Gibbs measure proportional to (1-p)^{#disagreeing edges}, spins constant on ghost classes.
std::vector<double> exact_potts_gibbs(const Graph& graph, double p, double q);
// Exact law of fk_to_potts applied to an exact FK sample.
std::vector<double> exact_fk_pushforward(const ExactModel& model, double q);

}  // namespace fk
