#include "fkdyn/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fkdyn/parallel.hpp"

namespace fk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t step_seed(std::uint64_t seed, AnnealDirection dir, std::size_t step) {
  const std::uint64_t offset = dir == AnnealDirection::FreeUp ? 0 : (std::uint64_t{1} << 32);
  return mix64(seed + 0x9e3779b97f4a7c15ull * (offset + step + 1));
}

// Restricted replicas at one p, burnt in and then sampled.
struct StepSamples {
  std::vector<std::vector<std::size_t>> open;  // per replica, open-edge count per snapshot
  double horizon = 0.0;
  std::uint64_t events = 0;
};

StepSamples sample_step(std::shared_ptr<const Graph> g, double p, double q, const PhasePredicate& predicate, Init init,
                        double cap, const WeightsBudget& budget, const RunOptions& run, std::uint64_t seed) {
  const ModelParams params{p, q, std::nullopt};
  const auto E = static_cast<std::uint32_t>(g->num_edges());
  const std::size_t R = budget.replicas;
  std::vector<Chain> chains;
  chains.reserve(R);
  for (std::size_t r = 0; r < R; ++r) chains.emplace_back(g, params, run.engine, init);
  const auto advance = [&](double t) {
    return summarize(map_replicas(R, run.threads, [&](std::size_t r) {
      run_restricted(chains[r], predicate, t, EventStream(seed, static_cast<std::uint32_t>(r), E));
      return static_cast<double>(chains[r].engine().num_open()) / std::max<std::uint32_t>(E, 1);
    }));
  };
  StepSamples out;
  if (budget.fixed_horizon > 0.0) {
    advance(budget.fixed_horizon);
    out.horizon = budget.fixed_horizon;
  } else if (!budget.adaptive) {
    advance(cap);
    out.horizon = cap;
  } else {
    double t = std::min(1.0, cap);
    auto prev = advance(t);
    while (t < cap) {
      const double next = std::min(2.0 * t, cap);
      auto cur = advance(next);
      t = next;
      const double se = std::sqrt(cur.stderr_ * cur.stderr_ + prev.stderr_ * prev.stderr_);
      const bool flat = std::abs(cur.mean - prev.mean) <= 3.0 * se;
      prev = cur;
      if (flat) break;
    }
    out.horizon = t;
  }
  out.open = map_replicas(R, run.threads, [&](std::size_t r) {
    Chain& c = chains[r];
    const EventStream stream(seed, static_cast<std::uint32_t>(r), E);
    std::vector<std::size_t> counts;
    for (std::size_t k = 0; k < budget.snapshots; ++k) {
      if (k > 0) run_restricted(c, predicate, c.time + budget.spacing, stream);
      counts.push_back(c.engine().num_open());
    }
    return counts;
  });
  for (const auto& c : chains) out.events += c.events;
  return out;
}

}  // namespace

std::string to_string(AnnealDirection dir) { return dir == AnnealDirection::FreeUp ? "free_up" : "wired_down"; }

double AnnealSchedule::max_spacing() const {
  double s = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) s = std::max(s, std::abs(grid[i] - grid[i - 1]));
  return s;
}

AnnealSchedule build_schedule(std::size_t volume, double target, AnnealDirection dir) {
  if (!(target >= 0.0 && target <= 1.0)) throw std::invalid_argument("anneal target must lie in [0,1]");
  if (volume == 0) throw std::invalid_argument("anneal volume must be positive");
  AnnealSchedule s;
  s.direction = dir;
  s.target = target;
  const double anchor = dir == AnnealDirection::FreeUp ? 0.0 : 1.0;
  const double span = std::abs(target - anchor);
  const auto K = static_cast<std::size_t>(std::ceil(span * static_cast<double>(volume) - 1e-9));
  s.grid.push_back(anchor);
  for (std::size_t i = 1; i < K; ++i) {
    const double step = span * static_cast<double>(i) / static_cast<double>(K);
    s.grid.push_back(dir == AnnealDirection::FreeUp ? step : 1.0 - step);
  }
  if (K > 0) s.grid.push_back(target);
  return s;
}

double anchor_partition(const Graph& graph, double q, AnnealDirection dir) {
  const EdgeSet omega(graph.num_edges(), dir == AnnealDirection::FreeUp ? 0 : 1);
  return static_cast<double>(count_components(graph, omega)) * std::log(q);
}

double log_weight_ratio(double p, double p_next, std::size_t open, std::size_t num_edges) {
  const std::size_t closed = num_edges - open;
  double out = 0.0;
  if (open > 0) out += static_cast<double>(open) * (std::log(p_next) - std::log(p));
  if (closed > 0) out += static_cast<double>(closed) * (std::log1p(-p_next) - std::log1p(-p));
  return out;
}

double log_ratio_bound(double p, double p_next, std::size_t num_edges) {
  return std::max(log_weight_ratio(p, p_next, num_edges, num_edges), log_weight_ratio(p, p_next, 0, num_edges));
}

DirectionResult anneal(const Graph& graph, double target, double q, AnnealDirection dir, Restriction restriction,
                       std::size_t volume, int side, int dimension, const WeightsBudget& budget,
                       const RunOptions& run) {
  DirectionResult res;
  res.schedule = build_schedule(volume, target, dir);
  auto g = std::make_shared<const Graph>(graph);
  const std::size_t E = graph.num_edges();
  const auto spec = PhaseSpec::make(volume, budget.eps);
  const Phase phase = dir == AnnealDirection::FreeUp ? Phase::Free : Phase::Wired;
  const PhasePredicate predicate =
      restriction == Restriction::Phase ? PhasePredicate::of(phase, spec) : PhasePredicate::always();
  const Init init = dir == AnnealDirection::FreeUp ? Init::Empty : Init::Full;
  const std::size_t anchor_open = dir == AnnealDirection::FreeUp ? 0 : E;
  if (!predicate.holds(graph, EdgeSet(E, init == Init::Full ? 1 : 0)))
    throw std::invalid_argument("anchor configuration lies outside the annealed phase");
  const double cap = t_star(side, dimension, budget.t_star_c);

  res.log_z = anchor_partition(graph, q, dir);
  double var = 0.0;
  const auto& grid = res.schedule.grid;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    RatioEstimate est;
    est.step = i;
    est.p_prev = grid[i - 1];
    est.p_next = grid[i];
    est.log_bound = log_ratio_bound(est.p_prev, est.p_next, E);
    // At p = 0 or 1 the phase measure is a point mass whose support misses
    // every other configuration, so the first ratio is taken from the far end:
    // Z_{p1} / Z_anchor = [W_{p1}(anchor) / W_anchor(anchor)] / pi_{p1}(anchor).
    est.reverse = i == 1;
    const double p_sample = est.reverse ? est.p_next : est.p_prev;
    auto samples = sample_step(g, p_sample, q, predicate, init, cap, budget, run, step_seed(run.seed, dir, i));
    est.horizon_used = samples.horizon;
    res.events += samples.events;
    const std::size_t R = samples.open.size();
    std::vector<double> unit(R, 0.0);
    if (est.reverse) {
      for (std::size_t r = 0; r < R; ++r) {
        for (auto k : samples.open[r]) unit[r] += k == anchor_open;
        unit[r] /= static_cast<double>(samples.open[r].size());
      }
      const auto s = summarize(unit);
      if (s.mean <= 0.0)
        throw std::runtime_error("anchor configuration never sampled at p = " + std::to_string(p_sample) +
                                 "; raise the replica budget");
      est.log_a = log_weight_ratio(est.p_prev, est.p_next, anchor_open, E) - std::log(s.mean);
      est.log_a_stderr = s.stderr_ / s.mean;
      est.samples = R * budget.snapshots;
    } else {
      double shift = -kInf;
      for (const auto& v : samples.open)
        for (auto k : v) shift = std::max(shift, log_weight_ratio(est.p_prev, est.p_next, k, E));
      if (shift == -kInf) {
        est.log_a = -kInf;
      } else {
        for (std::size_t r = 0; r < R; ++r) {
          for (auto k : samples.open[r]) unit[r] += std::exp(log_weight_ratio(est.p_prev, est.p_next, k, E) - shift);
          unit[r] /= static_cast<double>(samples.open[r].size());
        }
        const auto s = summarize(unit);
        est.log_a = std::log(s.mean) + shift;
        est.log_a_stderr = s.stderr_ / s.mean;
      }
      est.samples = R * budget.snapshots;
    }
    res.log_z += est.log_a;
    var += est.log_a_stderr * est.log_a_stderr;
    res.steps.push_back(est);
    if (budget.max_events > 0 && res.events > budget.max_events && i + 1 < grid.size()) {
      res.budget_exhausted = true;
      break;
    }
  }
  res.log_z_stderr = std::sqrt(var);
  return res;
}

PhaseWeights learn_weights(const Graph& graph, double p, double q, std::size_t volume, int side, int dimension,
                           const WeightsBudget& budget, const RunOptions& run) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  PhaseWeights w;
  w.seed = run.seed;
  if (p >= 1.0 || p <= 0.0) {
    const bool wired = p >= 1.0;
    w.m_star = wired ? 1.0 : 0.0;
    w.log_z_hat = wired ? anchor_partition(graph, q, AnnealDirection::WiredDown) : -kInf;
    w.log_z_check = wired ? -kInf : anchor_partition(graph, q, AnnealDirection::FreeUp);
    return w;
  }
  w.wired = anneal(graph, p, q, AnnealDirection::WiredDown, Restriction::Phase, volume, side, dimension, budget, run);
  w.free = anneal(graph, p, q, AnnealDirection::FreeUp, Restriction::Phase, volume, side, dimension, budget, run);
  w.log_z_hat = w.wired.log_z;
  w.log_z_check = w.free.log_z;
  w.budget_exhausted = w.wired.budget_exhausted || w.free.budget_exhausted;
  w.m_star = 1.0 / (1.0 + std::exp(w.log_z_check - w.log_z_hat));
  const double se = std::hypot(w.wired.log_z_stderr, w.free.log_z_stderr);
  w.m_star_stderr = w.m_star * (1.0 - w.m_star) * se;
  return w;
}

PhaseWeights learn_weights(const LatticeGeometry& torus, double p, double q, const WeightsBudget& budget,
                           const RunOptions& run) {
  return learn_weights(graph_of(torus), p, q, torus.num_vertices(), torus.side(), torus.dimension(), budget, run);
}

nlohmann::json PhaseWeights::summary() const {
  return {{"log_Zhat", log_z_hat},
          {"log_Zcheck", log_z_check},
          {"m_star", m_star},
          {"stderr", m_star_stderr},
          {"seed", seed},
          {"budget_exhausted", budget_exhausted}};
}

Init sample_random_phase_init(double m_star, std::uint64_t seed, std::uint32_t replica) {
  if (!(m_star >= 0.0 && m_star <= 1.0)) throw std::invalid_argument("m* must lie in [0,1]");
  CounterRng rng(seed, replica, Purpose::Init);
  return rng.uniform() < m_star ? Init::Full : Init::Empty;
}

double self_dual_point(double q) { return std::sqrt(q) / (1.0 + std::sqrt(q)); }

}  // namespace fk
