#include <doctest.h>

#include <cmath>
#include <map>

#include "fkdyn/dynamics.hpp"
#include "fkdyn/oracle.hpp"
#include "fkdyn/stats.hpp"

using namespace fk;

namespace {

std::shared_ptr<const Graph> share(Graph g) { return std::make_shared<const Graph>(std::move(g)); }

std::shared_ptr<const Graph> torus(int d, int n) {
  return share(graph_of(LatticeGeometry::build(d, n, LatticeKind::Torus)));
}

std::shared_ptr<const Graph> box(int n, BoundaryKind bk) {
  auto g = LatticeGeometry::build(2, n, LatticeKind::Box);
  return share(graph_of(g, make_boundary(g, bk)));
}

std::vector<double> histogram(const std::vector<State>& states, std::size_t size) {
  std::vector<double> h(size, 0.0);
  for (State s : states) h[s] += 1.0;
  for (double& x : h) x /= static_cast<double>(states.size());
  return h;
}

}  // namespace

TEST_CASE("heat bath probability") {
  CHECK(heat_bath_probability(0.5, 2.0, true) == doctest::Approx(1.0 / 3));
  CHECK(heat_bath_probability(0.5, 2.0, false) == 0.5);
  CHECK(heat_bath_probability(0.37, 1.0, true) == doctest::Approx(0.37));
  CHECK(heat_bath_probability(0.0, 5.0, true) == 0.0);
  CHECK(heat_bath_probability(0.0, 5.0, false) == 0.0);
  CHECK(heat_bath_probability(1.0, 5.0, false) == 1.0);
  CHECK(heat_bath_probability(1.0, 5.0, true) == 1.0);
}

TEST_CASE("apply_update examples") {
  Chain c(share(path_graph(2)), {0.5, 2.0}, EngineKind::FullyDynamic, Init::Empty);
  CHECK(!c.apply_update(0, 0.9));
  CHECK(!c.engine().is_open(0));
  CHECK(c.apply_update(0, 0.0));
  CHECK(c.engine().is_open(0));
  // bridge: threshold 1/3
  CHECK(!c.apply_update(0, 0.2));
  CHECK(c.apply_update(0, 0.34));
  CHECK(!c.engine().is_open(0));

  // cycle edge (non-bridge) opens below p
  Chain cyc(share(cycle_graph(3)), {0.5, 2.0}, EngineKind::Naive, Init::Full);
  CHECK(!cyc.apply_update(0, 0.45));
  CHECK(cyc.apply_update(0, 0.55));
  CHECK(!cyc.engine().is_open(0));
  CHECK(cyc.apply_update(1, 0.45));  // now a bridge: 0.45 >= 1/3 -> close
  CHECK(cyc.engine().is_open(1) == false);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(Chain(share(path_graph(2)), {0.5, 0.5}, EngineKind::Naive, Init::Empty), std::invalid_argument);
  CHECK_THROWS_AS(Chain(share(path_graph(2)), {1.5, 2.0}, EngineKind::Naive, Init::Empty), std::invalid_argument);
}

TEST_CASE("shared-u monotonicity of single updates") {
  auto g = torus(2, 4);
  EventStream stream(99, 0, static_cast<std::uint32_t>(g->num_edges()));
  CounterRng rng(5, 0, Purpose::Init);
  for (int trial = 0; trial < 200; ++trial) {
    EdgeSet lo(g->num_edges()), hi(g->num_edges());
    for (std::size_t e = 0; e < lo.size(); ++e) {
      lo[e] = rng.uniform() < 0.3;
      hi[e] = lo[e] || rng.uniform() < 0.4;
    }
    Chain a(g, {0.6, 3.0}, EngineKind::FullyDynamic, hi);
    Chain b(g, {0.6, 3.0}, EngineKind::Naive, lo);
    for (int k = 0; k < 50; ++k) {
      const auto ev = stream.event(static_cast<std::uint64_t>(trial * 50 + k));
      a.apply_update(ev.edge, ev.u);
      b.apply_update(ev.edge, ev.u);
      for (std::size_t e = 0; e < lo.size(); ++e) REQUIRE(a.configuration()[e] >= b.configuration()[e]);
    }
  }
}

TEST_CASE("run_discrete determinism and engine agreement") {
  auto g = box(4, BoundaryKind::Wired);
  EventStream stream(7, 3, static_cast<std::uint32_t>(g->num_edges()));
  Chain a(g, {0.55, 2.5}, EngineKind::FullyDynamic, Init::Empty);
  Chain b(g, {0.55, 2.5}, EngineKind::Naive, Init::Empty);
  run_discrete(a, 0, stream);
  CHECK(count_open(a.configuration()) == 0);
  run_discrete(a, 5000, stream);
  run_discrete(b, 5000, stream);
  CHECK(a.configuration() == b.configuration());
  Chain c(g, {0.55, 2.5}, EngineKind::FullyDynamic, Init::Empty);
  run_discrete(c, 2500, stream);
  Chain d = c;
  run_discrete(c, 2500, stream);
  run_discrete(d, 2500, stream);
  CHECK(c.configuration() == a.configuration());
  CHECK(d.configuration() == a.configuration());
  CHECK(a.engine().component_count() == count_components(*g, a.configuration()));
  CHECK(a.engine().largest_component() == largest_component_size(*g, a.configuration()));
}

TEST_CASE("q = 1 marginal is p") {
  auto g = torus(2, 4);
  const double p = 0.3;
  const std::size_t reps = 2000;
  std::size_t open = 0, total = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    Chain c(g, {p, 1.0}, EngineKind::FullyDynamic, Init::Full);
    run_discrete(c, 400, EventStream(11, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(g->num_edges())));
    open += c.configuration()[r % g->num_edges()];
    ++total;
  }
  auto s = summarize_bernoulli(open, total);
  CHECK(std::abs(s.mean - p) < 3 * s.stderr_ + 1e-12);
}

TEST_CASE("path graph discrete chain matches oracle") {
  auto g = share(path_graph(3));
  auto m = exact_distribution(*g, 0.5, 2.0);
  const std::size_t reps = 20000;
  std::vector<State> finals(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    Chain c(g, {0.5, 2.0}, EngineKind::FullyDynamic, Init::Empty);
    run_discrete(c, 200, EventStream(21, static_cast<std::uint32_t>(r), 2));
    finals[r] = config_to_state(c.configuration());
  }
  CHECK(tv_distance(histogram(finals, 4), m.pi) < 0.02);
}

TEST_CASE("continuous time event counts and distribution") {
  auto g = box(3, BoundaryKind::Free);
  const double T = 2.0;
  std::vector<double> counts;
  std::vector<State> finals;
  auto m = exact_distribution(*g, 0.4, 2.0);
  for (std::uint32_t r = 0; r < 4000; ++r) {
    Chain c(g, {0.4, 2.0}, EngineKind::FullyDynamic, Init::Empty);
    EventStream s(5, r, static_cast<std::uint32_t>(g->num_edges()));
    run_continuous(c, 0.0, s);
    REQUIRE(c.events == 0);
    run_continuous(c, T, s);
    counts.push_back(static_cast<double>(c.events));
    run_continuous(c, 30.0, s);
    finals.push_back(config_to_state(c.configuration()));
  }
  auto sum = summarize(counts);
  CHECK(std::abs(sum.mean - 12.0 * T) < 3 * sum.stderr_);
  // 4096 atoms from 4000 draws is too noisy for TV; compare edge marginals.
  auto emp = edge_marginals(histogram(finals, m.num_states()), 12);
  auto exact = edge_marginals(m.pi, 12);
  for (std::size_t e = 0; e < 12; ++e) {
    const double se = std::sqrt(exact[e] * (1 - exact[e]) / 4000.0);
    CHECK(std::abs(emp[e] - exact[e]) < 4 * se);
  }
}

TEST_CASE("resumed continuous runs equal one long run") {
  auto g = torus(2, 5);
  EventStream s(8, 0, static_cast<std::uint32_t>(g->num_edges()));
  Chain a(g, {0.5, 2.0}, EngineKind::FullyDynamic, Init::Empty);
  Chain b = a;
  run_continuous(a, 3.0, s);
  for (double t : {0.5, 1.25, 2.0, 3.0}) run_continuous(b, t, s);
  CHECK(a.events == b.events);
  CHECK(a.configuration() == b.configuration());
}

TEST_CASE("coupled runs") {
  auto g = torus(2, 8);
  const auto E = static_cast<std::uint32_t>(g->num_edges());
  SUBCASE("identical inits couple at time 0") {
    CoupledFamily f;
    f.chains.emplace_back(g, ModelParams{0.5, 2.0}, EngineKind::FullyDynamic, Init::Full);
    f.chains.emplace_back(g, ModelParams{0.5, 2.0}, EngineKind::FullyDynamic, Init::Full);
    auto r = run_coupled(f, 10.0, EventStream(1, 0, E));
    CHECK(r.coupled);
    CHECK(r.coupling_time == 0.0);
  }
  SUBCASE("p = 0 couples when every edge has rung") {
    for (std::uint32_t rep = 0; rep < 20; ++rep) {
      CoupledFamily f;
      f.chains.emplace_back(g, ModelParams{0.0, 2.0}, EngineKind::FullyDynamic, Init::Full);
      f.chains.emplace_back(g, ModelParams{0.0, 2.0}, EngineKind::FullyDynamic, Init::Empty);
      EventStream s(2, rep, E);
      auto r = run_coupled(f, 1e9, s);
      REQUIRE(r.coupled);
      std::vector<std::uint8_t> rung(E, 0);
      std::size_t left = E;
      double t = 0.0;
      for (std::uint64_t k = 0; left > 0; ++k) {
        const auto ev = s.event(k);
        t += ev.wait / E;
        if (!rung[ev.edge]) {
          rung[ev.edge] = 1;
          --left;
        }
      }
      CHECK(r.coupling_time == doctest::Approx(t).epsilon(1e-12));
    }
  }
  SUBCASE("monotone sandwich audit") {
    std::uint64_t violations = 0;
    for (std::uint32_t rep = 0; rep < 100; ++rep) {
      CoupledFamily f;
      f.chains.emplace_back(g, ModelParams{0.4, 2.0}, EngineKind::FullyDynamic, Init::Full);
      f.chains.emplace_back(g, ModelParams{0.4, 2.0}, EngineKind::FullyDynamic, Init::Empty);
      f.order.emplace_back(0, 1);
      CoupledOptions opt;
      opt.sample_times = {0.5, 1.0, 2.0};
      auto r = run_coupled(f, 2.0, EventStream(3, rep, E), opt);
      violations += r.violations;
      REQUIRE(r.disagreement.size() == 3);
    }
    CHECK(violations == 0);
  }
  SUBCASE("disagreement samples track the diff count") {
    CoupledFamily f;
    f.chains.emplace_back(g, ModelParams{0.5, 2.0}, EngineKind::FullyDynamic, Init::Full);
    f.chains.emplace_back(g, ModelParams{0.5, 2.0}, EngineKind::Naive, Init::Empty);
    CoupledOptions opt;
    opt.stop_when_coupled = false;
    opt.sample_times = {0.0, 0.1, 0.3};
    EventStream s(4, 0, E);
    auto r = run_coupled(f, 0.3, s, opt);
    REQUIRE(r.disagreement.size() == 3);
    CHECK(r.disagreement[0].second == E);
    std::size_t diff = 0;
    for (EdgeId e = 0; e < E; ++e) diff += f.chains[0].configuration()[e] != f.chains[1].configuration()[e];
    CHECK(r.disagreement[2].second == diff);
  }
}

TEST_CASE("restricted runs") {
  auto g = torus(2, 4);
  const auto E = static_cast<std::uint32_t>(g->num_edges());
  const auto spec = PhaseSpec::make(16, 0.25);
  SUBCASE("always-true predicate equals the unrestricted chain") {
    Chain a(g, {0.5, 2.0}, EngineKind::FullyDynamic, Init::Empty);
    Chain b(g, {0.5, 2.0}, EngineKind::FullyDynamic, Init::Empty);
    EventStream s(6, 0, E);
    run_continuous(a, 5.0, s);
    auto r = run_restricted(b, PhasePredicate::always(), 5.0, s);
    CHECK(r.exit_attempts == 0);
    CHECK(a.configuration() == b.configuration());
    CHECK(a.events == b.events);
  }
  SUBCASE("init outside phase") {
    Chain a(g, {0.5, 2.0}, EngineKind::FullyDynamic, Init::Empty);
    CHECK_THROWS_AS(run_restricted(a, PhasePredicate::wired(spec), 1.0, EventStream(1, 0, E)), InitOutsidePhase);
  }
  SUBCASE("restricted chains never leave their phase") {
    for (Phase ph : {Phase::Wired, Phase::Free}) {
      std::uint64_t violations = 0, attempts = 0;
      for (std::uint32_t rep = 0; rep < 50; ++rep) {
        Chain c(g, {0.45, 3.0}, EngineKind::FullyDynamic, ph == Phase::Wired ? Init::Full : Init::Empty);
        RestrictedOptions opt;
        opt.record = true;
        auto r = run_restricted(c, PhasePredicate::of(ph, spec), 20.0, EventStream(9, rep, E), opt);
        violations += r.violations;
        attempts += r.exit_attempts;
        // replay audit
        auto eng = make_engine(EngineKind::Naive, g);
        eng->assign(r.trajectory.initial);
        for (const auto& ev : r.trajectory.events) {
          if (ev.open_after)
            eng->insert_edge(ev.edge);
          else
            eng->delete_edge(ev.edge);
          REQUIRE(phase_of(*eng, spec) == ph);
        }
        CHECK(eng->configuration() == c.configuration());
      }
      CHECK(violations == 0);
      CHECK(attempts > 0);
    }
  }
  SUBCASE("restricted chain matches the exact conditional") {
    auto small = box(3, BoundaryKind::Free);
    auto m = exact_distribution(*small, 0.5, 2.0);
    const auto sspec = PhaseSpec::make(9, 0.4);  // theta = 4
    auto largest = largest_component_table(m);
    auto cond = exact_conditional(m, [&](State s) { return largest[s] >= sspec.theta; });
    // Only 12 edge marginals are compared; the full 4096-atom law is covered by the acceptance run.
    std::vector<State> finals;
    for (std::uint32_t rep = 0; rep < 4000; ++rep) {
      Chain c(small, {0.5, 2.0}, EngineKind::FullyDynamic, Init::Full);
      run_restricted(c, PhasePredicate::wired(sspec), 40.0, EventStream(10, rep, 12));
      finals.push_back(config_to_state(c.configuration()));
    }
    auto emp = edge_marginals(histogram(finals, m.num_states()), 12);
    auto exact = edge_marginals(cond, 12);
    for (std::size_t e = 0; e < 12; ++e) {
      const double se = std::sqrt(exact[e] * (1 - exact[e]) / 4000.0);
      CHECK(std::abs(emp[e] - exact[e]) < 4 * se);
    }
  }
}

TEST_CASE("one-step kernel matches the oracle rows") {
  auto g = share(path_graph(3));
  auto m = exact_distribution(*g, 0.3, 4.0);
  auto ch = exact_transition_matrix(m);
  const std::size_t draws = 40000;
  for (State s = 0; s < 4; ++s) {
    std::vector<double> freq(4, 0.0);
    EventStream stream(12, s, 2);
    for (std::size_t k = 0; k < draws; ++k) {
      Chain c(g, {0.3, 4.0}, EngineKind::Naive, state_to_config(s, 2));
      const auto ev = stream.event(k);
      c.apply_update(ev.edge, ev.u);
      freq[config_to_state(c.configuration())] += 1.0;
    }
    for (State t = 0; t < 4; ++t) {
      const double pr = ch.transition(s, t);
      const double se = std::sqrt(pr * (1 - pr) / draws);
      CHECK(std::abs(freq[t] / draws - pr) <= 3 * se + 1e-12);
    }
  }
}
