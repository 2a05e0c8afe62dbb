#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fkdyn/estimators.hpp"

namespace fk {

class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AnnealDirection { FreeUp, WiredDown };

std::string to_string(AnnealDirection dir);

// Uniform grid from the anchor (0 or 1) to the target with spacing <= 1 / volume.
struct AnnealSchedule {
  AnnealDirection direction = AnnealDirection::FreeUp;
  double target = 0.0;
  std::vector<double> grid;

  std::size_t steps() const { return grid.empty() ? 0 : grid.size() - 1; }
  double max_spacing() const;
};

AnnealSchedule build_schedule(std::size_t volume, double target, AnnealDirection dir);
inline AnnealSchedule build_schedule(int n, int d, double target, AnnealDirection dir) {
  return build_schedule(static_cast<std::size_t>(std::pow(n, d) + 0.5), target, dir);
}

// log Z of the phase at the anchor: only the empty (FreeUp) or full (WiredDown) configuration has weight.
double anchor_partition(const Graph& graph, double q, AnnealDirection dir);

// log of the uniform bound A on W_{p'}(w) / W_p(w) over all configurations.
double log_ratio_bound(double p, double p_next, std::size_t num_edges);

// log (W_{p'}(w) / W_p(w)); the q^{components} factor cancels.
double log_weight_ratio(double p, double p_next, std::size_t open, std::size_t num_edges);

struct WeightsBudget {
  std::size_t replicas = 128;
  std::size_t snapshots = 32;  // per replica, after burn-in
  double spacing = 1.0;
  double t_star_c = 1.0;  // cap on the per-step burn-in: exp(c (log n)^(d-1))
  bool adaptive = true;   // stop the burn-in once the restricted density plateaus
  double fixed_horizon = 0.0;  // > 0: use this burn-in instead
  std::uint64_t max_events = 0;  // 0: unlimited
  double eps = 0.25;
};

struct RatioEstimate {
  std::size_t step = 0;
  double p_prev = 0.0;
  double p_next = 0.0;
  double log_a = 0.0;
  double log_a_stderr = 0.0;
  std::size_t samples = 0;
  double horizon_used = 0.0;
  bool reverse = false;  // anchor step estimated from the far end
  double log_bound = 0.0;
};

enum class Restriction { Phase, None };

struct DirectionResult {
  AnnealSchedule schedule;
  std::vector<RatioEstimate> steps;
  double log_z = 0.0;
  double log_z_stderr = 0.0;
  bool budget_exhausted = false;
  std::uint64_t events = 0;
};

// Telescopes the phase partition function from the anchor to the target.
// FreeUp estimates the free-phase Z, WiredDown the wired-phase Z; with
// Restriction::None both estimate the full Z.
DirectionResult anneal(const Graph& graph, double target, double q, AnnealDirection dir, Restriction restriction,
                       std::size_t volume, int side, int dimension, const WeightsBudget& budget,
                       const RunOptions& run);

struct PhaseWeights {
  DirectionResult wired;  // WiredDown
  DirectionResult free;   // FreeUp
  double log_z_hat = 0.0;
  double log_z_check = 0.0;
  double m_star = 0.0;
  double m_star_stderr = 0.0;
  bool budget_exhausted = false;
  std::uint64_t seed = 0;

  nlohmann::json summary() const;
};

// `side` and `dimension` set t*; `volume` is the vertex count used for spacing and the phase threshold.
PhaseWeights learn_weights(const Graph& graph, double p, double q, std::size_t volume, int side, int dimension,
                           const WeightsBudget& budget, const RunOptions& run);

PhaseWeights learn_weights(const LatticeGeometry& torus, double p, double q, const WeightsBudget& budget,
                           const RunOptions& run);

// 1 with probability m*, else 0.
Init sample_random_phase_init(double m_star, std::uint64_t seed, std::uint32_t replica = 0);

// Planar self-dual point sqrt(q) / (1 + sqrt(q)).
double self_dual_point(double q);

}  // namespace fk
