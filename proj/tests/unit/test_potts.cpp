#include <doctest.h>

#include <cmath>

#include "fkdyn/potts.hpp"

using namespace fk;

namespace {

Graph box(int n, BoundaryKind bk, unsigned mask = 0) {
  auto g = LatticeGeometry::build(2, n, LatticeKind::Box);
  return graph_of(g, make_boundary(g, bk, {mask, false, {}}));
}

}  // namespace

TEST_CASE("integer q guard") {
  CounterRng rng(1, 0, Purpose::Coloring);
  auto g = path_graph(3);
  CHECK_THROWS_AS(fk_to_potts(g, EdgeSet(2, 0), 2.5, rng), NonIntegerQ);
  CHECK_THROWS_AS(swendsen_wang_step(g, Spins(3, 0), 0.5, 1.5, rng), NonIntegerQ);
  CHECK(require_integer_q(3.0) == 3);
}

TEST_CASE("index round trip") {
  for (std::size_t i = 0; i < 81; ++i) CHECK(potts_index(potts_from_index(i, 4, 3), 3) == i);
  CHECK(potts_from_index(5, 3, 2) == Spins{1, 0, 1});
}

TEST_CASE("trivial Edwards-Sokal cases") {
  auto g = cycle_graph(4);
  CounterRng rng(2, 0, Purpose::Coloring);
  std::vector<std::size_t> colors(3, 0);
  for (int i = 0; i < 3000; ++i) {
    auto s = fk_to_potts(g, EdgeSet(4, 1), 3.0, rng);
    for (auto x : s) REQUIRE(x == s[0]);
    ++colors[s[0]];
  }
  for (auto c : colors) CHECK(std::abs(static_cast<double>(c) - 1000.0) < 3 * std::sqrt(3000 * (1.0 / 3) * (2.0 / 3)));
  auto omega = potts_to_fk(g, Spins(4, 1), 1.0, rng);
  CHECK(count_open(omega) == 4);
  Spins mixed = {0, 1, 1, 0};
  for (int i = 0; i < 100; ++i) {
    auto w = potts_to_fk(g, mixed, 0.7, rng);
    for (EdgeId e = 0; e < 4; ++e)
      if (w[e]) REQUIRE(mixed[g.edges[e].u] == mixed[g.edges[e].v]);
  }
}

TEST_CASE("p = 0 Swendsen-Wang is uniform; p = 1 keeps constant configs constant") {
  auto g = path_graph(2);
  CounterRng rng(3, 0, Purpose::Sampling);
  std::vector<double> hist(4, 0.0);
  Spins s = {0, 0};
  const int n = 8000;
  for (int i = 0; i < n; ++i) {
    s = swendsen_wang_step(g, s, 0.0, 2.0, rng);
    hist[potts_index(s, 2)] += 1.0 / n;
  }
  for (double h : hist) CHECK(std::abs(h - 0.25) < 3 * std::sqrt(0.25 * 0.75 / n));
  for (int i = 0; i < 50; ++i) {
    s = swendsen_wang_step(g, Spins{1, 1}, 1.0, 3.0, rng);
    CHECK(s[0] == s[1]);
  }
}

TEST_CASE("pushforward of the exact FK law is the Potts Gibbs measure") {
  struct Case {
    Graph g;
    double p;
    double q;
  };
  std::vector<Case> cases = {{path_graph(2), 0.5, 2.0},          {path_graph(4), 0.3, 3.0},
                             {cycle_graph(5), 0.6, 2.0},         {box(3, BoundaryKind::Free), 0.4, 2.0},
                             {box(3, BoundaryKind::Wired), 0.7, 3.0}, {box(3, BoundaryKind::SideHomogeneous, 0b0101), 0.5, 2.0}};
  for (const auto& c : cases) {
    auto m = exact_distribution(c.g, c.p, c.q);
    auto push = exact_fk_pushforward(m, c.q);
    auto gibbs = exact_potts_gibbs(c.g, c.p, c.q);
    REQUIRE(push.size() == gibbs.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < push.size(); ++i) worst = std::max(worst, std::abs(push[i] - gibbs[i]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("two-site Swendsen-Wang chain") {
  // Hand enumeration for q = 2, p = 0.5: from an equal pair the edge opens
  // w.p. 1/2 (then colors are equal w.p. 1), else colors are equal w.p. 1/2;
  // from an unequal pair colors are independent.
  auto g = path_graph(2);
  const double stay_equal = 0.5 + 0.5 * 0.5;
  auto gibbs = exact_potts_gibbs(g, 0.5, 2.0);
  CHECK(gibbs[0] + gibbs[3] == doctest::Approx(2.0 / 3));
  for (Spins start : {Spins{0, 0}, Spins{0, 1}}) {
    CounterRng rng(4, start[1], Purpose::Sampling);
    const int n = 20000;
    int equal = 0;
    for (int i = 0; i < n; ++i) {
      auto s = swendsen_wang_step(g, start, 0.5, 2.0, rng);
      equal += s[0] == s[1];
    }
    const double expect = start[0] == start[1] ? stay_equal : 0.5;
    CHECK(std::abs(equal / double(n) - expect) < 3 * std::sqrt(expect * (1 - expect) / n));
  }
  CounterRng rng(5, 0, Purpose::Sampling);
  Spins s = {0, 1};
  std::vector<double> hist(4, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    s = swendsen_wang_step(g, s, 0.5, 2.0, rng);
    hist[potts_index(s, 2)] += 1.0 / n;
  }
  CHECK(tv_distance(hist, gibbs) < 0.02);
}

TEST_CASE("round trip preserves the FK law") {
  auto g = path_graph(3);
  auto m = exact_distribution(g, 0.5, 2.0);
  CounterRng draw(6, 0, Purpose::Init);
  CounterRng rng(6, 0, Purpose::Coloring);
  std::vector<double> hist(4, 0.0);
  const int n = 100000;
  std::vector<double> cdf(4);
  double acc = 0.0;
  for (State s = 0; s < 4; ++s) cdf[s] = acc += m.pi[s];
  for (int i = 0; i < n; ++i) {
    const double u = draw.uniform();
    State s = 0;
    while (s < 3 && u >= cdf[s]) ++s;
    auto sigma = fk_to_potts(g, state_to_config(s, 2), 2.0, rng);
    auto omega = potts_to_fk(g, sigma, 0.5, rng);
    hist[config_to_state(omega)] += 1.0 / n;
  }
  CHECK(tv_distance(hist, m.pi) < 0.02);
}
