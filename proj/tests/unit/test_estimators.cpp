#include <doctest.h>

#include <cmath>
#include <map>

#include "fkdyn/estimators.hpp"
#include "fkdyn/oracle.hpp"

using namespace fk;

namespace {

LatticeGeometry box2(int n) { return LatticeGeometry::build(2, n, LatticeKind::Box); }

Graph free_box(int n) {
  auto g = box2(n);
  return graph_of(g, make_boundary(g, BoundaryKind::Free));
}

RunOptions runs(std::size_t replicas, std::uint64_t seed = 1, int threads = 1) {
  RunOptions r;
  r.replicas = replicas;
  r.seed = seed;
  r.threads = threads;
  return r;
}

// Reference crossing tests built from coordinates only.
struct ReferenceCrossing {
  int n;
  std::map<std::pair<int, int>, int> edge_of;  // (vertex, vertex) -> edge
  std::vector<std::pair<int, int>> ends;
  std::vector<std::array<int, 4>> squares;

  explicit ReferenceCrossing(int side) : n(side) {
    const auto id = [&](int x, int y) { return x + n * y; };
    int e = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        if (x + 1 < n) add(id(x, y), id(x + 1, y), e++);
        if (y + 1 < n) add(id(x, y), id(x, y + 1), e++);
      }
    for (int y = 0; y + 1 < n; ++y)
      for (int x = 0; x + 1 < n; ++x)
        squares.push_back({edge(id(x, y), id(x + 1, y)), edge(id(x, y), id(x, y + 1)),
                           edge(id(x + 1, y), id(x + 1, y + 1)), edge(id(x, y + 1), id(x + 1, y + 1))});
  }
  void add(int a, int b, int e) {
    edge_of[{a, b}] = e;
    ends.push_back({a, b});
  }
  int edge(int a, int b) const { return edge_of.at({a, b}); }
  bool inner_boundary(int v) const {
    const int x = v % n, y = v / n, lo = n / 4, hi = n - 1 - n / 4;
    const bool in = x >= lo && x <= hi && y >= lo && y <= hi;
    return in && (x == lo || x == hi || y == lo || y == hi);
  }
  bool outer(int v) const {
    const int x = v % n, y = v / n;
    return x == 0 || y == 0 || x == n - 1 || y == n - 1;
  }
  static int root(std::vector<int>& p, int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  bool ord(std::uint32_t mask) const {
    std::vector<int> p(n * n);
    for (int i = 0; i < n * n; ++i) p[i] = i;
    for (std::size_t e = 0; e < ends.size(); ++e)
      if ((mask >> e) & 1u) p[root(p, ends[e].first)] = root(p, ends[e].second);
    std::vector<char> hit(n * n, 0);
    for (int a = 0; a < n * n; ++a)
      if (inner_boundary(a)) hit[root(p, a)] = 1;
    for (int b = 0; b < n * n; ++b)
      if (outer(b) && hit[root(p, b)]) return true;
    return false;
  }
  bool dis(std::uint32_t mask) const {
    const int E = static_cast<int>(ends.size());
    std::vector<int> p(E);
    for (int i = 0; i < E; ++i) p[i] = i;
    for (const auto& sq : squares)
      for (int a : sq)
        for (int b : sq)
          if (!((mask >> a) & 1u) && !((mask >> b) & 1u)) p[root(p, a)] = root(p, b);
    for (int a = 0; a < E; ++a) {
      if ((mask >> a) & 1u) continue;
      if (!inner_boundary(ends[a].first) && !inner_boundary(ends[a].second)) continue;
      for (int b = 0; b < E; ++b)
        if (!((mask >> b) & 1u) && outer(ends[b].first) && outer(ends[b].second) && root(p, a) == root(p, b))
          return true;
    }
    return false;
  }
};

// Exact crossing probability on the side-4 box by summing all 2^24 weights.
double exact_crossing(bool wired, bool ord, double p, double q) {
  const ReferenceCrossing ref(4);
  const int V = 16, E = 24;
  std::vector<int> boundary;
  for (int v = 0; v < V; ++v)
    if (ref.outer(v)) boundary.push_back(v);
  std::vector<double> pw(E + 1);
  for (int k = 0; k <= E; ++k) pw[k] = std::pow(p, k) * std::pow(1 - p, E - k);
  double z = 0.0, hit = 0.0;
  std::vector<int> par(V + 1);
  for (std::uint32_t mask = 0; mask < (1u << E); ++mask) {
    for (int i = 0; i <= V; ++i) par[i] = i;
    int comps = V;
    const auto join = [&](int a, int b) {
      a = ReferenceCrossing::root(par, a);
      b = ReferenceCrossing::root(par, b);
      if (a != b) {
        par[a] = b;
        --comps;
      }
    };
    if (wired)
      for (std::size_t i = 1; i < boundary.size(); ++i) join(boundary[0], boundary[i]);
    for (int e = 0; e < E; ++e)
      if ((mask >> e) & 1u) join(ref.ends[e].first, ref.ends[e].second);
    const double w = pw[__builtin_popcount(mask)] * std::pow(q, comps);
    z += w;
    if (ord ? ref.ord(mask) : ref.dis(mask)) hit += w;
  }
  return hit / z;
}

}  // namespace

TEST_CASE("crossing detector agrees with the coordinate reference") {
  for (int n : {4, 6}) {
    const auto g = box2(n);
    const ReferenceCrossing ref(n);
    REQUIRE(ref.ends.size() == g.num_edges());
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      CHECK(static_cast<int>(g.edge(static_cast<EdgeId>(e)).u) == ref.ends[e].first);
      CHECK(static_cast<int>(g.edge(static_cast<EdgeId>(e)).v) == ref.ends[e].second);
    }
    if (g.num_edges() > 32) continue;
    const CrossingDetector ord(g, CrossingKind::Ord), dis(g, CrossingKind::Dis);
    std::uint64_t x = 88172645463325252ull;
    for (int trial = 0; trial < 20000; ++trial) {
      x ^= x << 13;
      x ^= x >> 7;
      x ^= x << 17;
      const auto mask = static_cast<std::uint32_t>(x);
      EdgeSet w(g.num_edges());
      for (std::size_t e = 0; e < w.size(); ++e) w[e] = (mask >> e) & 1u;
      CHECK(ord(w) == ref.ord(mask));
      CHECK(dis(w) == ref.dis(mask));
    }
  }
  const auto g = box2(4);
  const CrossingDetector ord(g, CrossingKind::Ord), dis(g, CrossingKind::Dis);
  CHECK_FALSE(ord(EdgeSet(24, 0)));
  CHECK(ord(EdgeSet(24, 1)));
  CHECK(dis(EdgeSet(24, 0)));
  CHECK_FALSE(dis(EdgeSet(24, 1)));
  CHECK(crossing_kind_from_string("dis") == CrossingKind::Dis);
  CHECK(to_string(CrossingKind::Ord) == "ord");
  CHECK_THROWS_AS(crossing_kind_from_string("x"), std::invalid_argument);
}

TEST_CASE("crossing probabilities on the side-4 box against full enumeration") {
  const ModelParams params{0.5, 2.0, std::nullopt};
  CrossingOptions opt;
  opt.horizon = 20;
  opt.snapshots = 20;
  opt.spacing = 1.0;
  for (auto kind : {CrossingKind::Ord, CrossingKind::Dis}) {
    const bool ord = kind == CrossingKind::Ord;
    const double exact = exact_crossing(ord, ord, 0.5, 2.0);
    auto res = estimate_connectivity_decay(kind, 2, {4}, params, opt, runs(1500, 5));
    const auto& row = res.rows.front();
    CHECK(row.upper.stderr_ > 0.0);
    CHECK(std::abs(row.upper.mean - exact) < 4 * row.upper.stderr_);
  }
}

TEST_CASE("phi at q = 1 equals exp(-t)") {
  const auto torus = LatticeGeometry::build(2, 8, LatticeKind::Torus);
  const ModelParams params{0.4, 1.0, std::nullopt};
  const std::vector<double> times = {2.0, 0.5, 4.0, 1.0};
  auto est = estimate_phi(torus, BoundaryCondition{}, 5, 2, times, params, runs(6000, 3, 4));
  REQUIRE(est.size() == 4);
  for (const auto& e : est) {
    CHECK(e.violations == 0);
    CHECK(std::abs(e.value.mean - std::exp(-e.time)) < 3.5 * std::max(e.value.stderr_, 1e-3));
  }
}

TEST_CASE("phi is monotone in the radius and does not depend on the thread count") {
  const auto box = box2(10);
  const auto bc = make_boundary(box, BoundaryKind::Wired);
  const ModelParams params{0.6, 2.0, std::nullopt};
  const EdgeId e = box.forward_edge(box.vertex_at(std::vector<int>{5, 5}), 0);
  auto a = estimate_phi(box, bc, e, 2, {1.0, 3.0}, params, runs(800, 9, 1));
  auto b = estimate_phi(box, bc, e, 2, {1.0, 3.0}, params, runs(800, 9, 4));
  CHECK(a[0].value.mean == b[0].value.mean);
  CHECK(a[1].value.mean == b[1].value.mean);
  auto c = estimate_phi(box, bc, e, 4, {1.0, 3.0}, params, runs(800, 9, 1));
  for (int i = 0; i < 2; ++i) {
    CHECK(a[i].violations == 0);
    const double se = std::hypot(a[i].value.stderr_, c[i].value.stderr_);
    CHECK(c[i].value.mean <= a[i].value.mean + 3 * se);
  }
  CHECK(a[1].value.mean <= a[0].value.mean + 3 * std::hypot(a[0].value.stderr_, a[1].value.stderr_));
}

TEST_CASE("coupling time") {
  const auto torus = LatticeGeometry::build(2, 6, LatticeKind::Torus);
  const auto g = graph_of(torus);
  CouplingOptions opt;
  opt.cap = 200;
  opt.sample_times = {4.0, 1.0, 8.0};
  auto s = measure_coupling_time(g, ModelParams{0.3, 2.0, std::nullopt}, opt, runs(200, 2, 4));
  CHECK(s.violations == 0);
  CHECK(s.num_censored == 0);
  CHECK_FALSE(s.median_censored);
  CHECK(s.q10 <= s.median);
  CHECK(s.median <= s.q90);
  CHECK(s.sample_times == std::vector<double>{1.0, 4.0, 8.0});
  CHECK(s.disagreement[0].mean >= s.disagreement[2].mean);
  REQUIRE(s.t_eps.has_value());
  // q = 1: coupled once every edge has rung, a coupon collector over 72 edges.
  auto s1 = measure_coupling_time(g, ModelParams{0.3, 1.0, std::nullopt}, opt, runs(2000, 4));
  double mean = 0.0;
  for (double t : s1.times) mean += t / s1.times.size();
  double harmonic = 0.0;
  for (int k = 1; k <= 72; ++k) harmonic += 1.0 / k;
  CHECK(mean == doctest::Approx(harmonic).epsilon(0.03));
  opt.cap = 0.05;
  auto s2 = measure_coupling_time(g, ModelParams{0.3, 2.0, std::nullopt}, opt, runs(50, 2));
  CHECK(s2.num_censored == 50);
  CHECK(s2.median_censored);
  CHECK(s2.median == 0.05);
}

TEST_CASE("spatial mixing collapses at q = 1") {
  const ModelParams params{0.5, 1.0, std::nullopt};
  BurnInOptions burn;
  burn.t_max = 64;
  auto wsm = estimate_wsm(2, {4, 6}, params, burn, runs(100, 1, 4));
  for (const auto& row : wsm.rows) {
    CHECK(row.converged);
    CHECK(row.upper.mean == 0.0);
    CHECK(row.edge_gap.mean == 0.0);
    CHECK(row.violations == 0);
  }
  const auto torus = LatticeGeometry::build(2, 8, LatticeKind::Torus);
  auto ssm = estimate_ssm(torus, BoundaryCondition{}, {2, 4}, {0, 17}, params, burn, runs(100, 1, 4));
  for (const auto& row : ssm.rows) CHECK(row.upper.mean == 0.0);
  CHECK_THROWS_AS(estimate_wsm(2, {5}, params, burn, runs(4)), std::invalid_argument);
  CHECK_THROWS_AS(estimate_ssm(torus, BoundaryCondition{}, {5}, {0}, params, burn, runs(4)), std::invalid_argument);
}

TEST_CASE("spatial mixing in the ordered regime shows a gap and respects the order") {
  const ModelParams params{0.8, 2.0, std::nullopt};
  BurnInOptions burn;
  burn.t_max = 64;
  auto wsm = estimate_wsm(2, {4}, params, burn, runs(200, 7));
  const auto& row = wsm.rows.front();
  CHECK(row.violations == 0);
  CHECK(row.edge_gap.mean >= -3 * row.edge_gap.stderr_);
  CHECK(row.upper.mean >= row.edge_gap.mean);
  burn.strict = true;
  burn.t_max = 1.5;
  burn.tol = 0.0;
  CHECK_THROWS_AS(estimate_wsm(2, {8}, ModelParams{0.59, 2.0, std::nullopt}, burn, runs(200, 7)),
                  BurnInNotConverged);
}

TEST_CASE("marginal comparison") {
  std::vector<EdgeSet> snaps = {{1, 0, 1}, {1, 1, 0}};
  auto m = marginal_sample(snaps);
  CHECK(m.edge == std::vector<double>{1.0, 0.5, 0.5});
  CHECK(m.pair == std::vector<double>{0.5, 0.5, 0.0});
  std::vector<MarginalSample> a = {m, m}, b = {marginal_sample({{0, 0, 1}}), marginal_sample({{0, 0, 1}})};
  auto gap = compare_marginals(a, b);
  CHECK(gap.edge_gap.mean == 1.0);
  CHECK(gap.worst_edge == 0);
  CHECK(gap.pair_gap.mean == 0.5);
  CHECK(compare_marginals(a, a).edge_gap.mean == 0.0);
}

TEST_CASE("within-phase comparison at q = 1 sees no gap") {
  const ModelParams params{0.6, 1.0, std::nullopt};
  WithinPhaseOptions opt;
  opt.torus_horizon = 10;
  opt.box_horizon = 10;
  auto res = estimate_wsm_within_phase({4}, 8, 2, params, Phase::Wired, opt, runs(300, 2, 4));
  const auto& row = res.rows.front();
  CHECK(row.mixed);
  CHECK(row.gap.edge_gap.mean < 5 * row.gap.edge_gap.stderr_ + 0.01);
  CHECK_THROWS_AS(estimate_wsm_within_phase({10}, 8, 2, params, Phase::Wired, opt, runs(4)), std::invalid_argument);
}

TEST_CASE("stability and exit flow against the oracle") {
  const auto g = free_box(3);
  const double p = 0.6, q = 3.0;
  const auto spec = PhaseSpec::make(9, 0.25);
  auto model = exact_distribution(g, p, q);
  auto chain = exact_transition_matrix(model);
  auto largest = largest_component_table(model);
  const std::size_t E = g.num_edges();
  for (Phase phase : {Phase::Wired, Phase::Free}) {
    double mass = 0.0, boundary = 0.0, exit = 0.0;
    for (State s = 0; s < model.num_states(); ++s) {
      if (phase_of_size(largest[s], spec) != phase) continue;
      mass += model.pi[s];
      if (on_phase_boundary_bruteforce(g, state_to_config(s, E), spec)) boundary += model.pi[s];
      for (std::size_t e = 0; e < E; ++e) {
        const State t = s ^ (State{1} << e);
        if (phase_of_size(largest[t], spec) != phase) exit += model.pi[s] * chain.flip_probability(s, e);
      }
    }
    PhaseSampling sampling;
    sampling.horizon = 10;
    sampling.snapshots = 20;
    auto st = estimate_stability(g, spec, ModelParams{p, q, std::nullopt}, phase, sampling, runs(1000, 3));
    CHECK(st.phase == phase);
    // Snapshots within a replica are correlated; the binomial stderr is widened accordingly.
    CHECK(std::abs(st.estimate - boundary / mass) < 5 * st.stderr_ * std::sqrt(5.0) + 0.005);
    auto fl = estimate_exit_flow(g, spec, ModelParams{p, q, std::nullopt}, phase, sampling, runs(1000, 4));
    CHECK(std::abs(fl.mean - exit / mass) < 4 * fl.stderr_);
  }
}

TEST_CASE("restricted plateau and horizon helper") {
  const auto g = free_box(4);
  const auto spec = PhaseSpec::make(16, 0.25);
  auto res = restricted_plateau(g, ModelParams{0.5, 2.0, std::nullopt}, PhasePredicate::free(spec), Init::Empty,
                                {1, 2, 4, 8, 16, 32}, runs(200, 2));
  CHECK(res.times.front() == 1.0);
  REQUIRE(res.plateau_time.has_value());
  CHECK(*res.plateau_time <= 16.0);
  CHECK(t_star(1, 2) == doctest::Approx(1.0));
  CHECK(t_star(16, 2) == doctest::Approx(16.0));
  CHECK(t_star(8, 3, 0.5) == doctest::Approx(std::exp(0.5 * std::pow(std::log(8.0), 2))));
}
