#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fkdyn/connectivity.hpp"

namespace fk {

// Wired phase: |C1| >= theta. Free phase: |C1| < theta. theta = ceil(eps * volume).
struct PhaseSpec {
  double eps = 0.25;
  std::size_t volume = 0;
  std::size_t theta = 0;

  static PhaseSpec make(std::size_t volume, double eps = 0.25);
};

enum class Phase { Wired, Free };

std::string to_string(Phase phase);

inline Phase phase_of_size(std::size_t largest, const PhaseSpec& spec) {
  return largest >= spec.theta ? Phase::Wired : Phase::Free;
}

Phase phase_of(ConnectivityEngine& engine, const PhaseSpec& spec);
Phase phase_of(const Graph& graph, const EdgeSet& omega, const PhaseSpec& spec);

// True iff a single edge flip moves the configuration into the other phase.
// Probes only the edges that can matter, restoring the engine afterwards.
bool on_phase_boundary(ConnectivityEngine& engine, const PhaseSpec& spec);
// Reference: tries every flip and recounts from scratch.
bool on_phase_boundary_bruteforce(const Graph& graph, const EdgeSet& omega, const PhaseSpec& spec);

// Event a restricted chain must stay inside.
struct PhasePredicate {
  enum class Kind { Always, WiredPhase, FreePhase, Custom };
  Kind kind = Kind::Always;
  PhaseSpec spec;
  std::function<bool(ConnectivityEngine&)> custom;

  static PhasePredicate always() { return {}; }
  static PhasePredicate wired(const PhaseSpec& s) { return {Kind::WiredPhase, s, {}}; }
  static PhasePredicate free(const PhaseSpec& s) { return {Kind::FreePhase, s, {}}; }
  static PhasePredicate of(Phase phase, const PhaseSpec& s) { return phase == Phase::Wired ? wired(s) : free(s); }

  bool operator()(ConnectivityEngine& engine) const;
  bool holds(const Graph& graph, const EdgeSet& omega) const;
  // Phase whose boundary the hitting time refers to, if any.
  std::optional<Phase> phase() const;
};

struct TrajectoryEvent {
  double time;
  EdgeId edge;
  bool open_after;
};

// State changes of a chain, starting from `initial` at time 0.
struct Trajectory {
  EdgeSet initial;
  std::vector<TrajectoryEvent> events;
};

// First time the recorded trajectory sits on the phase boundary.
std::optional<double> hitting_time_tau(const Graph& graph, const Trajectory& trajectory, const PhaseSpec& spec,
                                       EngineKind engine = EngineKind::FullyDynamic);

struct StabilityReport {
  Phase phase = Phase::Wired;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t on_boundary = 0;
};

// Fraction of phase samples that are one flip from leaving the phase.
StabilityReport stability_from_flags(Phase phase, const std::vector<std::uint8_t>& on_boundary_flags);

}  // namespace fk
