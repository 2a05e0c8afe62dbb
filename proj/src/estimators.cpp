#include "fkdyn/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fkdyn/parallel.hpp"

namespace fk {

namespace {

constexpr std::uint64_t kSubstreamSalt = 0x9e3779b97f4a7c15ull;

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + kSubstreamSalt * (index + 1));
}

std::shared_ptr<const Graph> share(Graph g) { return std::make_shared<const Graph>(std::move(g)); }

EdgeId local_index(const std::vector<EdgeId>& sorted_edges, EdgeId e) {
  auto it = std::lower_bound(sorted_edges.begin(), sorted_edges.end(), e);
  if (it == sorted_edges.end() || *it != e) throw std::invalid_argument("edge not in region");
  return static_cast<EdgeId>(it - sorted_edges.begin());
}

double combined_se(const EstimatorResult& a, const EstimatorResult& b) {
  return std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
}

// Coupled pair driven to doubling times until the monitored indicator plateaus.
struct SandwichRun {
  std::vector<CoupledFamily> families;
  double time = 0.0;
  bool converged = false;
  std::uint64_t violations = 0;
};

template <class Measure>
SandwichRun sandwich_burn_in(std::shared_ptr<const Graph> upper, std::shared_ptr<const Graph> lower,
                             const ModelParams& params, const BurnInOptions& burn, const RunOptions& run,
                             std::uint64_t seed, Measure&& measure) {
  SandwichRun out;
  out.families.resize(run.replicas);
  for (auto& f : out.families) {
    f.chains.emplace_back(upper, params, run.engine, Init::Full);
    f.chains.emplace_back(lower, params, run.engine, Init::Empty);
    f.order.emplace_back(0, 1);
  }
  const auto E = static_cast<std::uint32_t>(upper->num_edges());
  std::vector<std::uint64_t> viol(run.replicas, 0);
  CoupledOptions opt;
  opt.stop_when_coupled = false;
  const auto advance = [&](double t) {
    return summarize(map_replicas(run.replicas, run.threads, [&](std::size_t r) {
      auto res = run_coupled(out.families[r], t, EventStream(seed, static_cast<std::uint32_t>(r), E), opt);
      viol[r] += res.violations;
      return measure(out.families[r]);
    }));
  };
  double t = burn.t0;
  EstimatorResult prev = advance(t);
  for (;;) {
    const double next = 2.0 * t;
    if (next > burn.t_max) break;
    EstimatorResult cur = advance(next);
    t = next;
    const bool flat = std::abs(cur.mean - prev.mean) <= std::max(burn.tol, 3.0 * combined_se(cur, prev));
    prev = cur;
    if (flat) {
      out.converged = true;
      break;
    }
  }
  out.time = t;
  for (auto v : viol) out.violations += v;
  if (!out.converged && burn.strict)
    throw BurnInNotConverged("sandwich gap still moving at t = " + std::to_string(t));
  return out;
}

// Burn-in monitor: fraction of `region` where the two sandwich chains differ.
auto disagreement_fraction(const std::vector<EdgeId>& region) {
  return [&region](const CoupledFamily& f) {
    const auto& a = f.chains[0].configuration();
    const auto& b = f.chains[1].configuration();
    std::size_t diff = 0;
    for (EdgeId e : region) diff += a[e] != b[e];
    return region.empty() ? 0.0 : static_cast<double>(diff) / static_cast<double>(region.size());
  };
}

// Upper bound and edge gap over a list of local edge ids after burn-in.
void fill_gap_row(GapRow& row, const SandwichRun& sr, const std::vector<EdgeId>& region, std::uint64_t seed) {
  const std::size_t R = sr.families.size();
  std::vector<double> any(R, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    const auto& a = sr.families[r].chains[0].configuration();
    const auto& b = sr.families[r].chains[1].configuration();
    for (EdgeId e : region)
      if (a[e] != b[e]) {
        any[r] = 1.0;
        break;
      }
  }
  row.upper = summarize(any, seed);
  row.edge_gap = EstimatorResult{0.0, 0.0, R, seed};
  std::vector<double> diff(R);
  for (EdgeId e : region) {
    for (std::size_t r = 0; r < R; ++r)
      diff[r] = static_cast<double>(sr.families[r].chains[0].configuration()[e]) -
                static_cast<double>(sr.families[r].chains[1].configuration()[e]);
    auto s = summarize(diff, seed);
    if (row.worst_edge == kNoEdge || s.mean > row.edge_gap.mean) {
      row.edge_gap = s;
      row.worst_edge = e;
    }
  }
  row.burn_in = sr.time;
  row.converged = sr.converged;
  row.violations = sr.violations;
}

DecayFit fit_rows(const std::vector<GapRow>& rows) {
  std::vector<double> k, v, se;
  for (const auto& r : rows) {
    k.push_back(r.size);
    v.push_back(r.upper.mean);
    se.push_back(r.upper.stderr_);
  }
  return fit_decay(k, v, se);
}

}  // namespace

Graph host_graph(const LatticeGeometry& geometry, const BoundaryCondition& bc) {
  if (geometry.kind() == LatticeKind::Torus) return graph_of(geometry);
  return graph_of(geometry, bc);
}

double t_star(int n, int d, double c) { return std::exp(c * std::pow(std::log(static_cast<double>(n)), d - 1)); }

std::vector<PhiEstimate> estimate_phi(const LatticeGeometry& geometry, const BoundaryCondition& bc, EdgeId e, int m,
                                      const std::vector<double>& times, const ModelParams& params,
                                      const RunOptions& run) {
  const Graph host = host_graph(geometry, bc);
  const EdgeBall ball = edge_ball(geometry, e, m);
  auto g1 = share(ball_graph(host, ball, true).graph);
  auto g0 = share(ball_graph(host, ball, false).graph);
  const EdgeId local = local_index(ball.edges, e);
  const auto E = static_cast<std::uint32_t>(ball.edges.size());
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });

  struct Rep {
    std::vector<std::uint8_t> disagree;
    std::uint64_t violations = 0;
  };
  auto reps = map_replicas(run.replicas, run.threads, [&](std::size_t r) {
    Rep rep;
    rep.disagree.assign(times.size(), 0);
    CoupledFamily f;
    f.chains.emplace_back(g1, params, run.engine, Init::Full);
    f.chains.emplace_back(g0, params, run.engine, Init::Empty);
    f.order.emplace_back(0, 1);
    CoupledOptions opt;
    opt.stop_when_coupled = false;
    const EventStream stream(run.seed, static_cast<std::uint32_t>(r), E);
    for (std::size_t i : order) {
      rep.violations += run_coupled(f, times[i], stream, opt).violations;
      rep.disagree[i] = f.chains[0].engine().is_open(local) != f.chains[1].engine().is_open(local);
    }
    return rep;
  });

  std::vector<PhiEstimate> out(times.size());
  std::uint64_t violations = 0;
  for (const auto& rep : reps) violations += rep.violations;
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::size_t hits = 0;
    for (const auto& rep : reps) hits += rep.disagree[i];
    out[i].edge = e;
    out[i].radius = m;
    out[i].time = times[i];
    out[i].value = summarize_bernoulli(hits, run.replicas, run.seed);
    out[i].violations = violations;
  }
  return out;
}

CouplingSummary measure_coupling_time(const Graph& graph, const ModelParams& params, const CouplingOptions& options,
                                      const RunOptions& run) {
  auto g = share(graph);
  const auto E = static_cast<std::uint32_t>(graph.num_edges());
  std::vector<double> samples = options.sample_times;
  std::sort(samples.begin(), samples.end());
  auto reps = map_replicas(run.replicas, run.threads, [&](std::size_t r) {
    CoupledFamily f;
    f.chains.emplace_back(g, params, run.engine, Init::Full);
    f.chains.emplace_back(g, params, run.engine, Init::Empty);
    f.order.emplace_back(0, 1);
    CoupledOptions opt;
    opt.sample_times = samples;
    return run_coupled(f, options.cap, EventStream(run.seed, static_cast<std::uint32_t>(r), E), opt);
  });

  CouplingSummary s;
  s.sample_times = samples;
  for (const auto& res : reps) {
    s.times.push_back(res.coupled ? res.coupling_time : options.cap);
    s.censored.push_back(!res.coupled);
    s.num_censored += !res.coupled;
    s.violations += res.violations;
  }
  s.median = quantile(s.times, 0.5);
  s.q10 = quantile(s.times, 0.1);
  s.q90 = quantile(s.times, 0.9);
  s.median_censored = s.median >= options.cap;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::vector<double> frac;
    frac.reserve(reps.size());
    for (const auto& res : reps) {
      const double d = i < res.disagreement.size() ? static_cast<double>(res.disagreement[i].second) : 0.0;
      frac.push_back(E > 0 ? d / E : 0.0);
    }
    s.disagreement.push_back(summarize(frac, run.seed));
    if (!s.t_eps && s.disagreement.back().mean <= options.eps_target) s.t_eps = samples[i];
  }
  return s;
}

SpatialResult estimate_wsm(int d, const std::vector<int>& r_grid, const ModelParams& params,
                           const BurnInOptions& burn, const RunOptions& run) {
  SpatialResult out;
  for (std::size_t j = 0; j < r_grid.size(); ++j) {
    const int r = r_grid[j];
    if (r < 4 || r % 2 != 0) throw std::invalid_argument("WSM needs an even box side r >= 4");
    const auto geom = LatticeGeometry::build(d, r, LatticeKind::Box);
    auto wired = share(graph_of(geom, make_boundary(geom, BoundaryKind::Wired)));
    auto free = share(graph_of(geom, make_boundary(geom, BoundaryKind::Free)));
    const auto half = central_half_box(geom).edges;
    const auto seed = substream_seed(run.seed, j);
    auto sr = sandwich_burn_in(wired, free, params, burn, run, seed, disagreement_fraction(half));
    GapRow row;
    row.size = r;
    fill_gap_row(row, sr, half, run.seed);
    out.rows.push_back(row);
  }
  out.fit = fit_rows(out.rows);
  return out;
}

SpatialResult estimate_ssm(const LatticeGeometry& geometry, const BoundaryCondition& bc,
                           const std::vector<int>& m_grid, const std::vector<EdgeId>& edges,
                           const ModelParams& params, const BurnInOptions& burn, const RunOptions& run) {
  const Graph host = host_graph(geometry, bc);
  SpatialResult out;
  std::uint64_t sub = 0;
  for (int m : m_grid) {
    if (m < 0 || 2 * m > geometry.side()) throw std::invalid_argument("SSM needs 0 <= m <= n/2");
    GapRow best;
    best.size = m;
    bool first = true;
    for (EdgeId e : edges) {
      const EdgeBall ball = edge_ball(geometry, e, m);
      const EdgeBall inner = edge_ball(geometry, e, m / 2);
      std::vector<EdgeId> region;
      for (EdgeId f : inner.edges) region.push_back(local_index(ball.edges, f));
      auto g1 = share(ball_graph(host, ball, true).graph);
      auto g0 = share(ball_graph(host, ball, false).graph);
      auto sr = sandwich_burn_in(g1, g0, params, burn, run, substream_seed(run.seed, sub++),
                                 disagreement_fraction(region));
      GapRow row;
      row.size = m;
      fill_gap_row(row, sr, region, run.seed);
      if (row.worst_edge != kNoEdge) row.worst_edge = ball.edges[row.worst_edge];
      if (first || row.upper.mean > best.upper.mean) best = row;
      first = false;
    }
    out.rows.push_back(best);
  }
  out.fit = fit_rows(out.rows);
  return out;
}

MarginalSample marginal_sample(const std::vector<EdgeSet>& snapshots) {
  MarginalSample s;
  if (snapshots.empty()) return s;
  const std::size_t h = snapshots.front().size();
  s.edge.assign(h, 0.0);
  s.pair.assign(h * (h - 1) / 2, 0.0);
  for (const auto& w : snapshots) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < h; ++i) {
      s.edge[i] += w[i];
      for (std::size_t j = i + 1; j < h; ++j, ++k) s.pair[k] += w[i] & w[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(snapshots.size());
  for (double& x : s.edge) x *= inv;
  for (double& x : s.pair) x *= inv;
  return s;
}

namespace {

EstimatorResult max_coordinate_gap(const std::vector<MarginalSample>& a, const std::vector<MarginalSample>& b,
                                   std::vector<double> MarginalSample::*field, std::size_t* where) {
  EstimatorResult best;
  if (a.empty() || b.empty()) return best;
  const std::size_t dim = (a.front().*field).size();
  std::vector<double> xa(a.size()), xb(b.size());
  bool first = true;
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < a.size(); ++i) xa[i] = (a[i].*field)[c];
    for (std::size_t i = 0; i < b.size(); ++i) xb[i] = (b[i].*field)[c];
    const auto sa = summarize(xa), sb = summarize(xb);
    const double gap = std::abs(sa.mean - sb.mean);
    if (first || gap > best.mean) {
      best.mean = gap;
      best.stderr_ = combined_se(sa, sb);
      best.samples = a.size() + b.size();
      if (where) *where = c;
      first = false;
    }
  }
  return best;
}

}  // namespace

MarginalGap compare_marginals(const std::vector<MarginalSample>& a, const std::vector<MarginalSample>& b) {
  MarginalGap g;
  g.edge_gap = max_coordinate_gap(a, b, &MarginalSample::edge, &g.worst_edge);
  g.pair_gap = max_coordinate_gap(a, b, &MarginalSample::pair, nullptr);
  return g;
}

WithinPhaseResult estimate_wsm_within_phase(const std::vector<int>& r_grid, int n, int d, const ModelParams& params,
                                            Phase phase, const WithinPhaseOptions& options, const RunOptions& run) {
  const auto torus = LatticeGeometry::build(d, n, LatticeKind::Torus);
  auto tg = share(graph_of(torus));
  const auto spec = PhaseSpec::make(torus.num_vertices(), options.eps);
  const auto predicate = PhasePredicate::of(phase, spec);
  const Init init = phase == Phase::Wired ? Init::Full : Init::Empty;
  const double t_torus = options.torus_horizon > 0.0 ? options.torus_horizon : t_star(n, d, 1.0);
  const auto TE = static_cast<std::uint32_t>(tg->num_edges());

  struct TorusRep {
    std::vector<EdgeSet> snapshots;
    std::vector<double> density;
  };
  auto torus_reps = map_replicas(run.replicas, run.threads, [&](std::size_t r) {
    TorusRep rep;
    Chain c(tg, params, run.engine, init);
    const EventStream stream(run.seed, static_cast<std::uint32_t>(r), TE);
    run_restricted(c, predicate, t_torus, stream);
    for (std::size_t k = 0; k < options.snapshots; ++k) {
      if (k > 0) run_restricted(c, predicate, c.time + options.spacing, stream);
      rep.snapshots.push_back(c.configuration());
      rep.density.push_back(static_cast<double>(c.engine().num_open()) / TE);
    }
    return rep;
  });
  double rhat = std::numeric_limits<double>::quiet_NaN();
  if (options.snapshots >= 4 && run.replicas >= 2) {
    std::vector<std::vector<double>> traces;
    for (const auto& rep : torus_reps) traces.push_back(rep.density);
    rhat = split_rhat(traces);
  }
  const bool mixed = !(rhat > options.rhat_max);
  if (!mixed && options.strict)
    throw RestrictedSamplerNotMixed("restricted torus chains disagree across seeds (split R-hat " +
                                    std::to_string(rhat) + ")");

  WithinPhaseResult out;
  for (std::size_t j = 0; j < r_grid.size(); ++j) {
    const int r = r_grid[j];
    if (r < 2 || r > n) throw std::invalid_argument("within-phase box side must satisfy 2 <= r <= n");
    const auto box = LatticeGeometry::build(d, r, LatticeKind::Box);
    const auto half = central_half_box(box).edges;
    std::vector<std::vector<EdgeId>> placements;
    for (int o = 0; o < n; ++o) placements.push_back(embedded_half_box_edges(torus, r, o));

    std::vector<MarginalSample> torus_units;
    for (const auto& rep : torus_reps) {
      std::vector<EdgeSet> views;
      for (const auto& w : rep.snapshots)
        for (const auto& place : placements) {
          EdgeSet v(place.size());
          for (std::size_t i = 0; i < place.size(); ++i) v[i] = w[place[i]];
          views.push_back(std::move(v));
        }
      torus_units.push_back(marginal_sample(views));
    }

    auto bg = share(graph_of(box, make_boundary(box, phase == Phase::Wired ? BoundaryKind::Wired : BoundaryKind::Free)));
    const auto BE = static_cast<std::uint32_t>(bg->num_edges());
    const auto seed = substream_seed(run.seed, j);
    std::vector<Chain> box_chains;
    double t_box = options.box_horizon;
    if (t_box <= 0.0) {
      // Burn in by the sandwich on the same box measure; the chain started
      // from the phase's extreme configuration is the sampler.
      auto sr = sandwich_burn_in(bg, bg, params, options.burn, run, seed, disagreement_fraction(half));
      t_box = sr.time;
      for (auto& f : sr.families) {
        Chain c = std::move(f.chains[phase == Phase::Wired ? 0 : 1]);
        c.events = f.events;
        c.last_event_time = f.last_event_time;
        c.time = f.time;
        box_chains.push_back(std::move(c));
      }
    } else {
      for (std::size_t r2 = 0; r2 < run.replicas; ++r2) box_chains.emplace_back(bg, params, run.engine, init);
    }
    auto box_units = map_replicas(run.replicas, run.threads, [&](std::size_t rr) {
      Chain& c = box_chains[rr];
      const EventStream stream(seed, static_cast<std::uint32_t>(rr), BE);
      run_continuous(c, t_box, stream);
      std::vector<EdgeSet> views;
      for (std::size_t k = 0; k < options.snapshots; ++k) {
        if (k > 0) run_continuous(c, c.time + options.spacing, stream);
        EdgeSet v(half.size());
        for (std::size_t i = 0; i < half.size(); ++i) v[i] = c.configuration()[half[i]];
        views.push_back(std::move(v));
      }
      return marginal_sample(views);
    });

    WithinPhaseRow row;
    row.r = r;
    row.gap = compare_marginals(torus_units, box_units);
    row.rhat = rhat;
    row.mixed = mixed;
    row.torus_horizon = t_torus;
    row.box_horizon = t_box;
    out.rows.push_back(row);
  }
  std::vector<double> k, v, se;
  for (const auto& row : out.rows) {
    k.push_back(row.r);
    v.push_back(row.gap.edge_gap.mean);
    se.push_back(row.gap.edge_gap.stderr_);
  }
  out.fit = fit_decay(k, v, se);
  return out;
}

std::string to_string(CrossingKind kind) { return kind == CrossingKind::Ord ? "ord" : "dis"; }

CrossingKind crossing_kind_from_string(const std::string& s) {
  if (s == "ord") return CrossingKind::Ord;
  if (s == "dis") return CrossingKind::Dis;
  throw std::invalid_argument("unknown crossing kind '" + s + "'");
}

CrossingDetector::CrossingDetector(const LatticeGeometry& box, CrossingKind kind) : geometry_(&box), kind_(kind) {
  if (box.kind() != LatticeKind::Box) throw std::invalid_argument("crossings are defined on boxes");
  const auto half = central_half_box(box);
  inner_.assign(box.num_vertices(), 0);
  outer_.assign(box.num_vertices(), 0);
  for (VertexId v : half.boundary) inner_[v] = 1;
  for (VertexId v : box.boundary_vertices()) outer_[v] = 1;
  if (kind == CrossingKind::Dis) {
    const int d = box.dimension();
    for (VertexId v = 0; v < box.num_vertices(); ++v)
      for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
          const EdgeId ea = box.forward_edge(v, a), eb = box.forward_edge(v, b);
          if (ea == kNoEdge || eb == kNoEdge) continue;
          const EdgeId fa = box.forward_edge(box.edge(eb).v, a), fb = box.forward_edge(box.edge(ea).v, b);
          if (fa == kNoEdge || fb == kNoEdge) continue;
          plaquettes_.push_back({ea, eb, fa, fb});
        }
    source_edge_.assign(box.num_edges(), 0);
    target_edge_.assign(box.num_edges(), 0);
    for (EdgeId e = 0; e < box.num_edges(); ++e) {
      const Edge& ed = box.edge(e);
      source_edge_[e] = inner_[ed.u] || inner_[ed.v];
      target_edge_[e] = outer_[ed.u] && outer_[ed.v];
    }
  }
}

bool CrossingDetector::operator()(const EdgeSet& omega) const {
  const auto& g = *geometry_;
  if (kind_ == CrossingKind::Ord) {
    DisjointSets ds(g.num_vertices());
    for (EdgeId e = 0; e < g.num_edges(); ++e)
      if (omega[e]) ds.unite(g.edge(e).u, g.edge(e).v);
    std::vector<std::uint8_t> hit(g.num_vertices(), 0);
    for (VertexId v = 0; v < g.num_vertices(); ++v)
      if (inner_[v]) hit[ds.find(v)] = 1;
    for (VertexId v = 0; v < g.num_vertices(); ++v)
      if (outer_[v] && hit[ds.find(v)]) return true;
    return false;
  }
  DisjointSets ds(g.num_edges());
  for (const auto& pl : plaquettes_) {
    EdgeId first = kNoEdge;
    for (EdgeId e : pl) {
      if (omega[e]) continue;
      if (first == kNoEdge)
        first = e;
      else
        ds.unite(first, e);
    }
  }
  std::vector<std::uint8_t> hit(g.num_edges(), 0);
  for (EdgeId e = 0; e < g.num_edges(); ++e)
    if (!omega[e] && source_edge_[e]) hit[ds.find(e)] = 1;
  for (EdgeId e = 0; e < g.num_edges(); ++e)
    if (!omega[e] && target_edge_[e] && hit[ds.find(e)]) return true;
  return false;
}

SpatialResult estimate_connectivity_decay(CrossingKind kind, int d, const std::vector<int>& m_grid,
                                          const ModelParams& params, const CrossingOptions& options,
                                          const RunOptions& run) {
  SpatialResult out;
  for (std::size_t j = 0; j < m_grid.size(); ++j) {
    const int m = m_grid[j];
    const auto box = LatticeGeometry::build(d, m, LatticeKind::Box);
    const bool ord = kind == CrossingKind::Ord;
    auto g = share(graph_of(box, make_boundary(box, ord ? BoundaryKind::Wired : BoundaryKind::Free)));
    const CrossingDetector crossing(box, kind);
    const auto E = static_cast<std::uint32_t>(g->num_edges());
    const auto seed = substream_seed(run.seed, j);
    auto fractions = map_replicas(run.replicas, run.threads, [&](std::size_t r) {
      Chain c(g, params, run.engine, ord ? Init::Full : Init::Empty);
      const EventStream stream(seed, static_cast<std::uint32_t>(r), E);
      run_continuous(c, options.horizon, stream);
      std::size_t hits = 0;
      for (std::size_t k = 0; k < options.snapshots; ++k) {
        if (k > 0) run_continuous(c, c.time + options.spacing, stream);
        hits += crossing(c.configuration());
      }
      return static_cast<double>(hits) / static_cast<double>(options.snapshots);
    });
    GapRow row;
    row.size = m;
    row.burn_in = options.horizon;
    row.converged = true;
    row.upper = summarize(fractions, run.seed);
    out.rows.push_back(row);
  }
  out.fit = fit_rows(out.rows);
  return out;
}

StabilityReport estimate_stability(const Graph& graph, const PhaseSpec& spec, const ModelParams& params, Phase phase,
                                   const PhaseSampling& sampling, const RunOptions& run) {
  auto g = share(graph);
  const auto predicate = PhasePredicate::of(phase, spec);
  const auto E = static_cast<std::uint32_t>(graph.num_edges());
  auto per_rep = map_replicas(run.replicas, run.threads, [&](std::size_t r) {
    Chain c(g, params, run.engine, phase == Phase::Wired ? Init::Full : Init::Empty);
    const EventStream stream(run.seed, static_cast<std::uint32_t>(r), E);
    run_restricted(c, predicate, sampling.horizon, stream);
    std::vector<std::uint8_t> flags;
    for (std::size_t k = 0; k < sampling.snapshots; ++k) {
      if (k > 0) run_restricted(c, predicate, c.time + sampling.spacing, stream);
      flags.push_back(on_phase_boundary(c.engine(), spec));
    }
    return flags;
  });
  std::vector<std::uint8_t> all;
  for (const auto& f : per_rep) all.insert(all.end(), f.begin(), f.end());
  return stability_from_flags(phase, all);
}

EstimatorResult estimate_exit_flow(const Graph& graph, const PhaseSpec& spec, const ModelParams& params, Phase phase,
                                   const PhaseSampling& sampling, const RunOptions& run) {
  auto g = share(graph);
  const auto predicate = PhasePredicate::of(phase, spec);
  const auto E = static_cast<std::uint32_t>(graph.num_edges());
  auto per_rep = map_replicas(run.replicas, run.threads, [&](std::size_t r) {
    Chain c(g, params, run.engine, phase == Phase::Wired ? Init::Full : Init::Empty);
    const EventStream stream(run.seed, static_cast<std::uint32_t>(r), E);
    run_restricted(c, predicate, sampling.horizon, stream);
    double acc = 0.0;
    for (std::size_t k = 0; k < sampling.snapshots; ++k) {
      if (k > 0) run_restricted(c, predicate, c.time + sampling.spacing, stream);
      auto& eng = c.engine();
      double flow = 0.0;
      for (EdgeId e = 0; e < E; ++e) {
        // Leaving the wired phase needs a deletion, leaving the free phase an insertion.
        if (eng.is_open(e) != (phase == Phase::Wired)) continue;
        if (eng.is_open(e)) {
          const bool bridge = eng.delete_edge(e) == 1;
          if (!predicate(eng)) flow += 1.0 - params.open_probability(bridge);
          eng.insert_edge(e);
        } else {
          const Edge& ed = graph.edges[e];
          const bool bridge = !eng.connected(ed.u, ed.v);
          eng.insert_edge(e);
          if (!predicate(eng)) flow += params.open_probability(bridge);
          eng.delete_edge(e);
        }
      }
      acc += E > 0 ? flow / E : 0.0;
    }
    return acc / static_cast<double>(sampling.snapshots);
  });
  return summarize(per_rep, run.seed);
}

PlateauResult restricted_plateau(const Graph& graph, const ModelParams& params, const PhasePredicate& predicate,
                                 Init init, const std::vector<double>& times, const RunOptions& run) {
  auto g = share(graph);
  const auto E = static_cast<std::uint32_t>(graph.num_edges());
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  auto per_rep = map_replicas(run.replicas, run.threads, [&](std::size_t r) {
    Chain c(g, params, run.engine, init);
    const EventStream stream(run.seed, static_cast<std::uint32_t>(r), E);
    std::vector<double> dens;
    for (double t : sorted) {
      run_restricted(c, predicate, t, stream);
      dens.push_back(static_cast<double>(c.engine().num_open()) / E);
    }
    return dens;
  });
  PlateauResult out;
  out.times = sorted;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    std::vector<double> col;
    for (const auto& d : per_rep) col.push_back(d[i]);
    out.density.push_back(summarize(col, run.seed));
  }
  if (!sorted.empty()) {
    const auto& last = out.density.back();
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      bool settled = true;
      for (std::size_t j = i; j < sorted.size(); ++j)
        if (std::abs(out.density[j].mean - last.mean) > 3.0 * combined_se(out.density[j], last) + 1e-12) settled = false;
      if (settled) {
        out.plateau_time = sorted[i];
        break;
      }
    }
  }
  return out;
}

}  // namespace fk
