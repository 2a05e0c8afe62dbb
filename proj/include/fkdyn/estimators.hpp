#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fkdyn/dynamics.hpp"
#include "fkdyn/stats.hpp"

namespace fk {

class HorizonExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BurnInNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RestrictedSamplerNotMixed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Replica r of any estimator draws its events from EventStream(seed, r, .).
struct RunOptions {
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  EngineKind engine = EngineKind::FullyDynamic;
};

// Graph of a lattice region: tori ignore the boundary condition.
Graph host_graph(const LatticeGeometry& geometry, const BoundaryCondition& bc);

// Restricted-chain horizon exp(c (log n)^(d-1)).
double t_star(int n, int d, double c = 1.0);

struct PhiEstimate {
  EdgeId edge = kNoEdge;
  int radius = 0;
  double time = 0.0;
  EstimatorResult value;
  std::uint64_t violations = 0;  // X1(e) < X0(e) seen anywhere in the ball
};

// phi_{m,t}(e): coupled B^1 (wired outside, all open) and B^0 (free outside,
// all closed) chains on the ball around e; one estimate per requested time.
std::vector<PhiEstimate> estimate_phi(const LatticeGeometry& geometry, const BoundaryCondition& bc, EdgeId e, int m,
                                      const std::vector<double>& times, const ModelParams& params,
                                      const RunOptions& run);

struct CouplingOptions {
  double cap = 1e4;                  // horizon; replicas not coupled by then are censored
  std::vector<double> sample_times;  // where the mean disagreement fraction is recorded
  double eps_target = 0.25;
};

struct CouplingSummary {
  std::vector<double> times;  // coupling time per replica, cap if censored
  std::vector<std::uint8_t> censored;
  std::size_t num_censored = 0;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  bool median_censored = false;  // median is then only a lower bound
  std::vector<double> sample_times;
  std::vector<EstimatorResult> disagreement;  // fraction of edges, per sample time
  std::optional<double> t_eps;               // first sample time with mean fraction <= eps_target
  std::uint64_t violations = 0;
};

// Worst-case pair: upper starts all open, lower all closed, one stream per replica.
CouplingSummary measure_coupling_time(const Graph& graph, const ModelParams& params, const CouplingOptions& options,
                                      const RunOptions& run);

// Burn-in by the 1/0 sandwich plateau: run to t0, 2 t0, 4 t0, ... and stop
// once the disagreement fraction on the monitored region changes by at most
// max(tol, 3 combined stderr).
struct BurnInOptions {
  double t0 = 1.0;
  double t_max = 512.0;
  double tol = 0.01;
  bool strict = false;  // throw BurnInNotConverged instead of flagging
};

struct GapRow {
  int size = 0;  // r for WSM, m for SSM
  double burn_in = 0.0;
  bool converged = false;
  EstimatorResult upper;     // P(coupled chains disagree somewhere on the half region)
  EstimatorResult edge_gap;  // max over edges of P(X1(e)=1) - P(X0(e)=1)
  EdgeId worst_edge = kNoEdge;
  std::uint64_t violations = 0;
};

struct SpatialResult {
  std::vector<GapRow> rows;
  DecayFit fit;  // of the upper bound against size
};

// Wired box of side r from 1 against free box from 0, compared on the central half box.
SpatialResult estimate_wsm(int d, const std::vector<int>& r_grid, const ModelParams& params,
                           const BurnInOptions& burn, const RunOptions& run);

// For each m: max over `edges` of the B^1/B^0 disagreement on B_{m/2,e}.
SpatialResult estimate_ssm(const LatticeGeometry& geometry, const BoundaryCondition& bc,
                           const std::vector<int>& m_grid, const std::vector<EdgeId>& edges,
                           const ModelParams& params, const BurnInOptions& burn, const RunOptions& run);

// Per-edge and pairwise open frequencies of one independent unit (replica).
struct MarginalSample {
  std::vector<double> edge;
  std::vector<double> pair;  // (i, j), i < j, row-major over the upper triangle
};

MarginalSample marginal_sample(const std::vector<EdgeSet>& snapshots);

struct MarginalGap {
  EstimatorResult edge_gap;
  EstimatorResult pair_gap;
  std::size_t worst_edge = 0;
};

// max |mean_a - mean_b| over coordinates, stderr from unit-to-unit spread.
MarginalGap compare_marginals(const std::vector<MarginalSample>& a, const std::vector<MarginalSample>& b);

struct WithinPhaseOptions {
  double eps = 0.25;
  double torus_horizon = 0.0;  // 0: t* with c = 1
  double box_horizon = 0.0;    // 0: sandwich burn-in
  std::size_t snapshots = 16;
  double spacing = 2.0;
  double rhat_max = 1.1;
  bool strict = false;  // throw RestrictedSamplerNotMixed instead of flagging
  BurnInOptions burn;
};

struct WithinPhaseRow {
  int r = 0;
  MarginalGap gap;
  double rhat = 0.0;
  bool mixed = true;
  double torus_horizon = 0.0;
  double box_horizon = 0.0;
};

struct WithinPhaseResult {
  std::vector<WithinPhaseRow> rows;
  DecayFit fit;  // of the edge gap against r
};

// Torus restricted to `phase` against the wired (Wired) or free (Free) box of side r.
WithinPhaseResult estimate_wsm_within_phase(const std::vector<int>& r_grid, int n, int d, const ModelParams& params,
                                            Phase phase, const WithinPhaseOptions& options, const RunOptions& run);

enum class CrossingKind { Ord, Dis };

std::string to_string(CrossingKind kind);
CrossingKind crossing_kind_from_string(const std::string& s);

// Annulus crossing between the central half box and the outer boundary of a
// box: ord by open lattice paths, dis by closed edges chained through shared
// plaquettes (closed edges touching the inner boundary to closed edges lying
// in the outer boundary).
class CrossingDetector {
 public:
  CrossingDetector(const LatticeGeometry& box, CrossingKind kind);
  bool operator()(const EdgeSet& omega) const;

 private:
  const LatticeGeometry* geometry_;
  CrossingKind kind_;
  std::vector<std::uint8_t> inner_, outer_;
  std::vector<std::array<EdgeId, 4>> plaquettes_;
  std::vector<std::uint8_t> source_edge_, target_edge_;
};

struct CrossingOptions {
  double horizon = 50.0;
  std::size_t snapshots = 1;
  double spacing = 1.0;
};

// Crossing probability in the box of side m under wired (ord) or free (dis) boundary.
SpatialResult estimate_connectivity_decay(CrossingKind kind, int d, const std::vector<int>& m_grid,
                                          const ModelParams& params, const CrossingOptions& options,
                                          const RunOptions& run);

struct PhaseSampling {
  double horizon = 20.0;
  std::size_t snapshots = 8;
  double spacing = 1.0;
};

// Fraction of restricted-chain samples one flip from leaving the phase.
StabilityReport estimate_stability(const Graph& graph, const PhaseSpec& spec, const ModelParams& params, Phase phase,
                                   const PhaseSampling& sampling, const RunOptions& run);

// Mean one-step probability that the discrete chain leaves `phase`, under the restricted samples.
EstimatorResult estimate_exit_flow(const Graph& graph, const PhaseSpec& spec, const ModelParams& params, Phase phase,
                                   const PhaseSampling& sampling, const RunOptions& run);

struct PlateauResult {
  std::vector<double> times;
  std::vector<EstimatorResult> density;  // open-edge fraction across replicas
  std::optional<double> plateau_time;   // first time after which all values sit within 3 stderr of the last
};

PlateauResult restricted_plateau(const Graph& graph, const ModelParams& params, const PhasePredicate& predicate,
                                 Init init, const std::vector<double>& times, const RunOptions& run);

}  // namespace fk
