#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fkdyn/connectivity.hpp"
#include "fkdyn/heat_bath.hpp"
#include "fkdyn/phases.hpp"
#include "fkdyn/rng.hpp"

namespace fk {

class InitOutsidePhase : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelParams {
  double p = 0.5;
  double q = 2.0;
  // q used in the bridge case; equals q except under fault injection.
  std::optional<double> bridge_q;

  double open_probability(bool bridge) const {
    return heat_bath_probability(p, bridge ? bridge_q.value_or(q) : q, bridge);
  }
  void validate() const;
};

enum class Init { Empty, Full };

EdgeSet initial_config(std::size_t num_edges, Init init);

// One FK heat-bath chain: owns its engine (and so omega), tracks the event
// index used to address the shared randomness and the continuous clock.
class Chain {
 public:
  Chain(std::shared_ptr<const Graph> graph, ModelParams params, EngineKind kind, const EdgeSet& init);
  Chain(std::shared_ptr<const Graph> graph, ModelParams params, EngineKind kind, Init init);
  Chain(const Chain& other);
  Chain& operator=(const Chain& other);
  Chain(Chain&&) noexcept = default;
  Chain& operator=(Chain&&) noexcept = default;

  // Heat-bath update at e with uniform u; returns whether omega changed.
  bool apply_update(EdgeId e, double u);

  ConnectivityEngine& engine() { return *engine_; }
  const ConnectivityEngine& engine() const { return *engine_; }
  const EdgeSet& configuration() const { return engine_->configuration(); }
  const ModelParams& params() const { return params_; }
  std::size_t num_edges() const { return engine_->num_edges(); }
  const Graph& graph() const { return engine_->graph(); }
  std::shared_ptr<const Graph> graph_ptr() const { return graph_; }

  std::uint64_t events = 0;       // next event index
  double time = 0.0;              // continuous clock (horizon reached)
  double last_event_time = 0.0;   // time of the last consumed event

 private:
  std::shared_ptr<const Graph> graph_;
  ModelParams params_;
  std::unique_ptr<ConnectivityEngine> engine_;
};

void run_discrete(Chain& chain, std::uint64_t steps, const EventStream& stream);
// Superposed rate-|E| clock: event k arrives wait_k / |E| after event k-1.
void run_continuous(Chain& chain, double horizon, const EventStream& stream);

// Chains driven by the same events; `order` lists pairs (upper, lower) whose
// edgewise order is audited at every event.
struct CoupledFamily {
  std::vector<Chain> chains;
  std::vector<std::pair<std::size_t, std::size_t>> order;
  double time = 0.0;
  double last_event_time = 0.0;
  std::uint64_t events = 0;
};

struct CoupledRun {
  bool coupled = false;
  double coupling_time = 0.0;  // first event time at which all chains agree
  std::uint64_t violations = 0;
  // (time, disagreeing edges between chain 0 and chain 1) at the requested sample times.
  std::vector<std::pair<double, std::size_t>> disagreement;
};

struct CoupledOptions {
  bool stop_when_coupled = true;
  std::vector<double> sample_times;  // sorted
};

CoupledRun run_coupled(CoupledFamily& family, double horizon, const EventStream& stream,
                       const CoupledOptions& options = {});

struct RestrictedRun {
  std::uint64_t exit_attempts = 0;
  std::uint64_t violations = 0;
  std::optional<double> hit_boundary_time;
  Trajectory trajectory;  // filled only when recording
};

struct RestrictedOptions {
  bool track_boundary = false;
  bool record = false;
};

// Moves that would leave the predicate are rejected but still consume their event.
RestrictedRun run_restricted(Chain& chain, const PhasePredicate& predicate, double horizon,
                             const EventStream& stream, const RestrictedOptions& options = {});

}  // namespace fk
