#include "fkdyn/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <variant>

#include <CLI11.hpp>

#include "fkdyn/checkpoint.hpp"
#include "fkdyn/estimators.hpp"
#include "fkdyn/oracle.hpp"
#include "fkdyn/parallel.hpp"
#include "fkdyn/potts.hpp"
#include "fkdyn/weights.hpp"

namespace fk {

namespace {

using nlohmann::json;

struct Column {
  std::string name;
  std::string doc;
};

struct CsvSpec {
  std::string file;
  std::string command;
  std::vector<Column> columns;  // after the leading seed and config_hash
};

const std::vector<CsvSpec>& csv_specs() {
  static const std::vector<CsvSpec> specs = {
      {"sample.csv",
       "sample",
       {{"replica", "replica index"},
        {"init", "initial configuration"},
        {"events", "updates consumed"},
        {"open_edges", "open edges at the end"},
        {"components", "components (boundary classes wired)"},
        {"largest_component", "lattice vertices in the largest component"},
        {"phase", "wired or free"}}},
      {"edges.csv",
       "sample",
       {{"edge", "edge id"}, {"open_frequency", "fraction of replicas with the edge open"}, {"stderr", "binomial standard error"}}},
      {"potts.csv", "sample", {{"replica", "replica index"}, {"vertex", "vertex id"}, {"color", "Potts color in 0..q-1"}}},
      {"mix.csv",
       "mix",
       {{"n", "torus side"},
        {"init", "worst or random_phase"},
        {"phase", "all (worst) or the starting phase"},
        {"replicas", "replicas in the row"},
        {"median", "median coupling time (worst) or empty"},
        {"q10", "10% quantile of the coupling time"},
        {"q90", "90% quantile of the coupling time"},
        {"censored", "replicas not coupled by the cap"},
        {"median_censored", "1 if the median is only a lower bound"},
        {"t_eps", "first sample time with mean disagreement fraction <= eps_target"},
        {"plateau_time", "random_phase: first time the density stays within 3 stderr of its final value"},
        {"t_star", "exp((log n)^(d-1))"},
        {"violations", "edgewise order violations seen"}}},
      {"mix_curve.csv",
       "mix",
       {{"n", "torus side"},
        {"phase", "all (worst) or the starting phase"},
        {"t", "sample time"},
        {"value", "worst: disagreement fraction; random_phase: open-edge density"},
        {"stderr", "standard error across replicas"}}},
      {"spatial_wsm.csv",
       "spatial",
       {{"size", "box side r"},
        {"burn_in", "sandwich burn-in time"},
        {"converged", "1 if the burn-in plateaued"},
        {"upper", "P(coupled wired/free chains differ on the half box)"},
        {"upper_stderr", "standard error"},
        {"edge_gap", "max edge marginal gap on the half box"},
        {"edge_gap_stderr", "standard error"},
        {"worst_edge", "edge attaining edge_gap"},
        {"violations", "order violations"}}},
      {"spatial_ssm.csv",
       "spatial",
       {{"size", "ball radius m"},
        {"burn_in", "sandwich burn-in time"},
        {"converged", "1 if the burn-in plateaued"},
        {"upper", "max over edges of P(B1/B0 chains differ on the inner ball)"},
        {"upper_stderr", "standard error"},
        {"edge_gap", "max edge marginal gap"},
        {"edge_gap_stderr", "standard error"},
        {"worst_edge", "host edge attaining edge_gap"},
        {"violations", "order violations"}}},
      {"spatial_within.csv",
       "spatial",
       {{"size", "box side r"},
        {"phase", "phase of the restricted torus chain"},
        {"edge_gap", "max edge marginal gap torus vs box"},
        {"edge_gap_stderr", "standard error"},
        {"pair_gap", "max pair marginal gap"},
        {"pair_gap_stderr", "standard error"},
        {"worst_edge", "half-box edge attaining edge_gap"},
        {"rhat", "split R-hat of the torus density traces"},
        {"mixed", "1 if rhat <= 1.1"},
        {"torus_horizon", "restricted torus burn-in"},
        {"box_horizon", "box burn-in"}}},
      {"spatial_ord.csv",
       "spatial",
       {{"size", "box side m"}, {"probability", "P(open crossing), wired box"}, {"stderr", "standard error"}}},
      {"spatial_dis.csv",
       "spatial",
       {{"size", "box side m"}, {"probability", "P(closed dual crossing), free box"}, {"stderr", "standard error"}}},
      {"spatial_fit.csv",
       "spatial",
       {{"estimator", "wsm, ssm, within, ord or dis"},
        {"rate", "fitted 1/C in value ~ A exp(-size/C)"},
        {"intercept", "fitted log A"},
        {"r2", "coefficient of determination"},
        {"fitted", "1 if at least two points were above the noise floor"}}},
      {"weights_ledger.csv",
       "weights",
       {{"p", "target p"},
        {"direction", "free_up or wired_down"},
        {"i", "step index"},
        {"p_prev", "grid point the step starts from"},
        {"p_next", "grid point the step ends at"},
        {"a_i", "estimated ratio Z(p_next)/Z(p_prev)"},
        {"log_a", "log a_i"},
        {"stderr", "standard error of log a_i"},
        {"samples", "samples used"},
        {"horizon_used", "burn-in time of the step"},
        {"reverse", "1 for the anchor step, estimated from samples at p_next"},
        {"log_bound", "log of the uniform ratio bound A"}}},
      {"weights.csv",
       "weights",
       {{"p", "target p"},
        {"log_Zhat", "log wired-phase partition function"},
        {"log_Zhat_stderr", "standard error"},
        {"log_Zcheck", "log free-phase partition function"},
        {"log_Zcheck_stderr", "standard error"},
        {"m_star", "Zhat / (Zhat + Zcheck)"},
        {"stderr", "delta-method standard error of m_star"},
        {"budget_exhausted", "1 if the event budget cut the anneal short"}}},
      {"bottleneck_exact.csv",
       "bottleneck",
       {{"q", "cluster weight"},
        {"p", "edge parameter"},
        {"pi_free", "stationary mass of the free phase"},
        {"flow", "Q(free, wired)"},
        {"phi", "flow / (pi_free (1 - pi_free))"},
        {"lower_bound", "1 / (2 phi)"},
        {"t_mix", "exact discrete-time mixing time at bottleneck.t_mix_eps"},
        {"holds", "1 if t_mix >= lower_bound"}}},
      {"bottleneck_sampled.csv",
       "bottleneck",
       {{"q", "cluster weight"},
        {"p", "edge parameter"},
        {"exit_flow", "mean one-step probability of leaving the free phase"},
        {"exit_flow_stderr", "standard error"},
        {"m_star", "pi(wired phase) used, empty if unset"},
        {"phi", "exit_flow / m_star"},
        {"phi_stderr", "standard error"},
        {"lower_bound", "1 / (2 phi)"}}},
      {"oracle_diff.csv",
       "oracle-diff",
       {{"check", "kernel, stationary, restricted_wired, restricted_free or exit_flow"},
        {"instance", "graph used"},
        {"statistic", "what was compared"},
        {"value", "worst |z| or gap observed"},
        {"tolerance", "pass threshold"},
        {"pass", "1 if value <= tolerance"}}},
  };
  return specs;
}

std::string fmt(double x) {
  if (x == 0.0) x = 0.0;
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using Cell = std::variant<std::monostate, long long, unsigned long long, double, std::string>;

Cell cell(double x) { return x; }
Cell cell(int x) { return static_cast<long long>(x); }
Cell cell(std::size_t x) { return static_cast<unsigned long long>(x); }
Cell cell(std::uint64_t x, int) { return static_cast<unsigned long long>(x); }
Cell cell(bool x) { return static_cast<long long>(x ? 1 : 0); }
Cell cell(const std::string& s) { return s; }
Cell cell(const char* s) { return std::string(s); }
Cell cell(std::optional<double> x) { return x ? Cell(*x) : Cell(); }

// CSV with the leading seed and config_hash columns; columns come from csv_specs().
class Csv {
 public:
  Csv(const std::filesystem::path& dir, const std::string& file, std::uint64_t seed, const std::string& hash)
      : out_(dir / file), prefix_(std::to_string(seed) + "," + hash) {
    const CsvSpec* spec = nullptr;
    for (const auto& s : csv_specs())
      if (s.file == file) spec = &s;
    if (!spec) throw std::logic_error("undocumented csv " + file);
    width_ = spec->columns.size();
    if (!out_) throw std::runtime_error("cannot write " + (dir / file).string());
    out_ << "seed,config_hash";
    for (const auto& c : spec->columns) out_ << ',' << c.name;
    out_ << '\n';
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
    out_ << prefix_;
    for (const auto& c : cells) {
      out_ << ',';
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>)
              out_ << fmt(v);
            else if constexpr (std::is_same_v<V, std::string>)
              out_ << v;
            else if constexpr (!std::is_same_v<V, std::monostate>)
              out_ << v;
          },
          c);
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::string prefix_;
  std::size_t width_ = 0;
};

std::uint64_t substream(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + 0x9e3779b97f4a7c15ull * (index + 1));
}

// Everything a command needs from the resolved configuration.
struct Context {
  const Config& cfg;
  std::filesystem::path out;
  std::uint64_t seed;
  std::string hash;
  int threads;
  std::size_t replicas;
  EngineKind engine;
  std::vector<std::string> files;
  json summary = json::object();
  std::uint64_t events = 0;

  Csv csv(const std::string& file) {
    files.push_back(file);
    return Csv(out, file, seed, hash);
  }
  RunOptions run(std::uint64_t s) const {
    RunOptions r;
    r.replicas = replicas;
    r.seed = s;
    r.threads = threads;
    r.engine = engine;
    return r;
  }
};

double number(const Config& cfg, const std::string& key, double lo, double hi, bool open_lo = false) {
  const double v = cfg.get<double>(key);
  if (v < lo || v > hi || (open_lo && v == lo)) {
    std::ostringstream msg;
    msg << "must lie in " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
    cfg.fail(key, msg.str());
  }
  return v;
}

double p_c_of(const Config& cfg) {
  if (cfg.has("model.p_c")) return number(cfg, "model.p_c", 0.0, 1.0);
  return self_dual_point(number(cfg, "model.q", 0.0, 1e300, true));
}

ModelParams model_params(const Config& cfg) {
  ModelParams m;
  m.q = number(cfg, "model.q", 0.0, 1e300, true);
  m.p = cfg.has("model.p") ? number(cfg, "model.p", 0.0, 1.0) : p_c_of(cfg);
  if (cfg.has("model.bridge_q")) m.bridge_q = number(cfg, "model.bridge_q", 0.0, 1e300, true);
  return m;
}

LatticeGeometry geometry_of(const Config& cfg, int n) {
  const int d = cfg.get<int>("lattice.d");
  if (d < 1 || d > 6) cfg.fail("lattice.d", "must lie in [1, 6]");
  if (n < 1) cfg.fail("lattice.n", "must be positive");
  const auto kind = lattice_kind_from_string(cfg.get<std::string>("lattice.kind"));
  return LatticeGeometry::build(d, n, kind, cfg.get<unsigned>("lattice.periodic_mask"));
}

BoundaryCondition boundary_of(const Config& cfg, const LatticeGeometry& g) {
  if (g.kind() == LatticeKind::Torus) return BoundaryCondition{};
  const auto b = cfg.get<std::string>("lattice.boundary");
  BoundaryParams bp;
  bp.side_mask = cfg.get<unsigned>("lattice.side_mask");
  bp.wired = cfg.get<bool>("lattice.cylinder_wired");
  const BoundaryKind kind = b == "wired" ? BoundaryKind::Wired
                            : b == "side" ? BoundaryKind::SideHomogeneous
                            : b == "cylindrical" ? BoundaryKind::Cylindrical
                                                 : BoundaryKind::Free;
  return make_boundary(g, kind, bp);
}

PhaseSpec phase_spec(const Config& cfg, std::size_t volume) {
  return PhaseSpec::make(volume, number(cfg, "model.eps", 0.0, 1.0, true));
}

// ---------------------------------------------------------------- sample

void cmd_sample(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto geom = geometry_of(cfg, cfg.get<int>("lattice.n"));
  auto g = std::make_shared<const Graph>(host_graph(geom, boundary_of(cfg, geom)));
  const ModelParams params = model_params(cfg);
  const auto spec = phase_spec(cfg, geom.num_vertices());
  const auto init_name = cfg.get<std::string>("sample.init");
  const double m_star = number(cfg, "sample.m_star", 0.0, 1.0);
  const double horizon = number(cfg, "sample.horizon", 0.0, 1e12);
  const auto steps = cfg.get<std::uint64_t>("sample.discrete_steps");
  const bool potts = cfg.get<bool>("sample.potts");
  const std::uint32_t qi = potts ? require_integer_q(params.q) : 0;
  const auto E = static_cast<std::uint32_t>(g->num_edges());

  struct Rep {
    Init init;
    EdgeSet omega;
    std::uint64_t events;
    std::size_t components, largest;
    Spins colors;
  };
  auto reps = map_replicas(ctx.replicas, ctx.threads, [&](std::size_t r) {
    const auto rr = static_cast<std::uint32_t>(r);
    const Init init = init_name == "full"           ? Init::Full
                      : init_name == "random_phase" ? sample_random_phase_init(m_star, ctx.seed, rr)
                                                    : Init::Empty;
    Chain c(g, params, ctx.engine, init);
    const EventStream stream(ctx.seed, rr, E);
    if (steps > 0)
      run_discrete(c, steps, stream);
    else
      run_continuous(c, horizon, stream);
    Rep rep{init, c.configuration(), c.events, c.engine().component_count(), c.engine().largest_component(), {}};
    if (potts) {
      CounterRng rng(ctx.seed, rr, Purpose::Coloring);
      rep.colors = fk_to_potts(*g, rep.omega, qi, rng);
    }
    return rep;
  });

  auto sample = ctx.csv("sample.csv");
  std::vector<Checkpoint> records;
  std::vector<std::size_t> open_count(E, 0);
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto& rep = reps[r];
    ctx.events += rep.events;
    sample.row({cell(r), cell(rep.init == Init::Full ? "full" : "empty"), cell(rep.events, 0),
                cell(count_open(rep.omega)), cell(rep.components), cell(rep.largest),
                cell(to_string(phase_of_size(rep.largest, spec)))});
    for (std::size_t e = 0; e < E; ++e) open_count[e] += rep.omega[e];
    Checkpoint cp;
    cp.header = {static_cast<std::uint32_t>(geom.dimension()),
                 static_cast<std::uint32_t>(geom.side()),
                 encode_kind(geom),
                 params.p,
                 params.q,
                 ctx.seed,
                 rep.events};
    cp.omega = rep.omega;
    records.push_back(std::move(cp));
  }
  auto edges = ctx.csv("edges.csv");
  double mean_density = 0.0;
  for (std::size_t e = 0; e < E; ++e) {
    const auto s = summarize_bernoulli(open_count[e], reps.size(), ctx.seed);
    edges.row({cell(e), cell(s.mean), cell(s.stderr_)});
    mean_density += s.mean / E;
  }
  if (cfg.get<bool>("sample.write_samples")) {
    write_checkpoints(ctx.out / "samples.bin", records);
    ctx.files.push_back("samples.bin");
  }
  if (potts) {
    auto pc = ctx.csv("potts.csv");
    for (std::size_t r = 0; r < reps.size(); ++r)
      for (std::size_t v = 0; v < reps[r].colors.size(); ++v)
        pc.row({cell(r), cell(v), cell(static_cast<std::size_t>(reps[r].colors[v]))});
  }
  ctx.summary = {{"p", params.p}, {"q", params.q}, {"mean_density", mean_density}, {"replicas", reps.size()}};
}

// ---------------------------------------------------------------- mix

void cmd_mix(Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto n_grid = cfg.get<std::vector<int>>("mix.n_grid");
  if (n_grid.empty()) n_grid.push_back(cfg.get<int>("lattice.n"));
  const ModelParams params = model_params(cfg);
  const auto init = cfg.get<std::string>("mix.init");
  auto times = cfg.get<std::vector<double>>("mix.sample_times");
  std::sort(times.begin(), times.end());
  auto table = ctx.csv("mix.csv");
  auto curve = ctx.csv("mix_curve.csv");
  json rows = json::array();
  for (std::size_t j = 0; j < n_grid.size(); ++j) {
    const int n = n_grid[j];
    const auto geom = geometry_of(cfg, n);
    const Graph g = host_graph(geom, boundary_of(cfg, geom));
    const double ts = t_star(n, geom.dimension());
    const auto seed = substream(ctx.seed, j);
    if (init == "worst") {
      CouplingOptions opt;
      opt.cap = number(cfg, "mix.cap", 0.0, 1e15, true);
      opt.sample_times = times;
      opt.eps_target = cfg.get<double>("mix.eps_target");
      auto s = measure_coupling_time(g, params, opt, ctx.run(seed));
      table.row({cell(n), cell("worst"), cell("all"), cell(ctx.replicas), cell(s.median), cell(s.q10), cell(s.q90),
                 cell(s.num_censored), cell(s.median_censored), cell(s.t_eps), Cell(), cell(ts),
                 cell(s.violations, 0)});
      for (std::size_t i = 0; i < s.sample_times.size(); ++i)
        curve.row({cell(n), cell("all"), cell(s.sample_times[i]), cell(s.disagreement[i].mean),
                   cell(s.disagreement[i].stderr_)});
      rows.push_back({{"n", n}, {"median", s.median}, {"median_censored", s.median_censored}});
      continue;
    }
    const double m_star = number(cfg, "mix.m_star", 0.0, 1.0);
    std::size_t wired = 0;
    for (std::size_t r = 0; r < ctx.replicas; ++r)
      wired += sample_random_phase_init(m_star, seed, static_cast<std::uint32_t>(r)) == Init::Full;
    const auto spec = phase_spec(cfg, geom.num_vertices());
    for (Phase phase : {Phase::Wired, Phase::Free}) {
      const std::size_t count = phase == Phase::Wired ? wired : ctx.replicas - wired;
      if (count == 0) continue;
      auto run = ctx.run(substream(seed, phase == Phase::Wired ? 1 : 2));
      run.replicas = count;
      const auto predicate = cfg.get<bool>("mix.restrict") ? PhasePredicate::of(phase, spec) : PhasePredicate::always();
      auto res = restricted_plateau(g, params, predicate, phase == Phase::Wired ? Init::Full : Init::Empty, times, run);
      table.row({cell(n), cell("random_phase"), cell(to_string(phase)), cell(count), Cell(), Cell(), Cell(), Cell(),
                 Cell(), Cell(), cell(res.plateau_time), cell(ts), cell(std::size_t{0})});
      for (std::size_t i = 0; i < res.times.size(); ++i)
        curve.row({cell(n), cell(to_string(phase)), cell(res.times[i]), cell(res.density[i].mean),
                   cell(res.density[i].stderr_)});
      rows.push_back({{"n", n}, {"phase", to_string(phase)}, {"plateau_time", res.plateau_time.value_or(-1.0)}});
    }
  }
  ctx.summary = {{"init", init}, {"rows", rows}};
}

// ---------------------------------------------------------------- spatial

BurnInOptions burn_of(const Config& cfg) {
  BurnInOptions b;
  b.t0 = number(cfg, "spatial.burn_t0", 0.0, 1e12, true);
  b.t_max = number(cfg, "spatial.burn_t_max", 0.0, 1e12, true);
  b.tol = number(cfg, "spatial.burn_tol", 0.0, 1.0);
  b.strict = cfg.get<bool>("spatial.strict");
  return b;
}

void gap_rows(Csv& csv, const SpatialResult& res) {
  for (const auto& r : res.rows)
    csv.row({cell(r.size), cell(r.burn_in), cell(r.converged), cell(r.upper.mean), cell(r.upper.stderr_),
             cell(r.edge_gap.mean), cell(r.edge_gap.stderr_),
             r.worst_edge == kNoEdge ? Cell() : cell(static_cast<std::size_t>(r.worst_edge)),
             cell(r.violations, 0)});
}

void cmd_spatial(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const ModelParams params = model_params(cfg);
  const int n = cfg.get<int>("lattice.n");
  const auto geom = geometry_of(cfg, n);
  const int d = geom.dimension();
  const auto burn = burn_of(cfg);
  const auto wanted = cfg.get<std::vector<std::string>>("spatial.estimators");
  const auto want = [&](const std::string& s) { return std::find(wanted.begin(), wanted.end(), s) != wanted.end(); };
  std::vector<std::tuple<std::string, DecayFit>> fits;
  if (want("wsm")) {
    auto res = estimate_wsm(d, cfg.get<std::vector<int>>("spatial.r_grid"), params, burn, ctx.run(substream(ctx.seed, 0)));
    auto csv = ctx.csv("spatial_wsm.csv");
    gap_rows(csv, res);
    fits.emplace_back("wsm", res.fit);
  }
  if (want("ssm")) {
    std::vector<EdgeId> edges;
    for (auto e : cfg.get<std::vector<std::uint64_t>>("spatial.ssm_edges")) {
      if (e >= geom.num_edges()) cfg.fail("spatial.ssm_edges", "edge id out of range");
      edges.push_back(static_cast<EdgeId>(e));
    }
    if (edges.empty()) cfg.fail("spatial.ssm_edges", "needs at least one edge");
    auto res = estimate_ssm(geom, boundary_of(cfg, geom), cfg.get<std::vector<int>>("spatial.m_grid"), edges, params,
                            burn, ctx.run(substream(ctx.seed, 1)));
    auto csv = ctx.csv("spatial_ssm.csv");
    gap_rows(csv, res);
    fits.emplace_back("ssm", res.fit);
  }
  if (want("within")) {
    WithinPhaseOptions opt;
    opt.eps = number(cfg, "model.eps", 0.0, 1.0, true);
    opt.torus_horizon = cfg.get<double>("spatial.within_torus_horizon");
    opt.box_horizon = cfg.get<double>("spatial.within_box_horizon");
    opt.snapshots = cfg.get<std::size_t>("spatial.snapshots");
    opt.spacing = number(cfg, "spatial.spacing", 0.0, 1e12, true);
    opt.strict = burn.strict;
    opt.burn = burn;
    const Phase phase = cfg.get<std::string>("spatial.within_phase") == "wired" ? Phase::Wired : Phase::Free;
    std::vector<int> r_grid;
    for (int r : cfg.get<std::vector<int>>("spatial.r_grid"))
      if (r <= n) r_grid.push_back(r);
    auto res = estimate_wsm_within_phase(r_grid, n, d, params, phase, opt, ctx.run(substream(ctx.seed, 2)));
    auto csv = ctx.csv("spatial_within.csv");
    for (const auto& r : res.rows)
      csv.row({cell(r.r), cell(to_string(phase)), cell(r.gap.edge_gap.mean), cell(r.gap.edge_gap.stderr_),
               cell(r.gap.pair_gap.mean), cell(r.gap.pair_gap.stderr_), cell(r.gap.worst_edge), cell(r.rhat),
               cell(r.mixed), cell(r.torus_horizon), cell(r.box_horizon)});
    fits.emplace_back("within", res.fit);
  }
  for (auto kind : {CrossingKind::Ord, CrossingKind::Dis}) {
    const auto name = to_string(kind);
    if (!want(name)) continue;
    CrossingOptions opt;
    opt.horizon = number(cfg, "spatial.crossing_horizon", 0.0, 1e12);
    opt.snapshots = std::max<std::size_t>(1, cfg.get<std::size_t>("spatial.crossing_snapshots"));
    opt.spacing = number(cfg, "spatial.spacing", 0.0, 1e12, true);
    auto res = estimate_connectivity_decay(kind, d, cfg.get<std::vector<int>>("spatial.crossing_m_grid"), params, opt,
                                           ctx.run(substream(ctx.seed, kind == CrossingKind::Ord ? 3 : 4)));
    auto csv = ctx.csv("spatial_" + name + ".csv");
    for (const auto& r : res.rows) csv.row({cell(r.size), cell(r.upper.mean), cell(r.upper.stderr_)});
    fits.emplace_back(name, res.fit);
  }
  auto fit_csv = ctx.csv("spatial_fit.csv");
  for (const auto& [name, fit] : fits)
    fit_csv.row({cell(name), cell(fit.rate), cell(fit.intercept), cell(fit.r2), cell(fit.fitted)});
}

// ---------------------------------------------------------------- weights

void cmd_weights(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto geom = geometry_of(cfg, cfg.get<int>("lattice.n"));
  const Graph g = host_graph(geom, boundary_of(cfg, geom));
  const ModelParams params = model_params(cfg);
  auto p_grid = cfg.get<std::vector<double>>("weights.p_grid");
  if (p_grid.empty()) p_grid.push_back(params.p);
  for (double p : p_grid)
    if (!(p >= 0.0 && p <= 1.0)) cfg.fail("weights.p_grid", "values must lie in [0, 1]");
  WeightsBudget budget;
  budget.replicas = cfg.get<std::size_t>("weights.replicas");
  budget.snapshots = std::max<std::size_t>(1, cfg.get<std::size_t>("weights.snapshots"));
  budget.spacing = number(cfg, "weights.spacing", 0.0, 1e12, true);
  budget.t_star_c = number(cfg, "weights.t_star_c", 0.0, 1e6);
  budget.adaptive = cfg.get<bool>("weights.adaptive");
  budget.fixed_horizon = cfg.get<double>("weights.fixed_horizon");
  budget.max_events = cfg.get<std::uint64_t>("weights.max_events");
  budget.eps = number(cfg, "model.eps", 0.0, 1.0, true);
  if (budget.replicas < 2) cfg.fail("weights.replicas", "needs at least 2 replicas for a standard error");

  auto ledger = ctx.csv("weights_ledger.csv");
  auto table = ctx.csv("weights.csv");
  json summaries = json::array();
  for (std::size_t j = 0; j < p_grid.size(); ++j) {
    auto w = learn_weights(g, p_grid[j], params.q, geom.num_vertices(), geom.side(), geom.dimension(), budget,
                           ctx.run(substream(ctx.seed, j)));
    for (const auto* dir : {&w.wired, &w.free}) {
      ctx.events += dir->events;
      for (const auto& s : dir->steps)
        ledger.row({cell(p_grid[j]), cell(to_string(dir->schedule.direction)), cell(s.step), cell(s.p_prev),
                    cell(s.p_next), cell(std::exp(s.log_a)), cell(s.log_a), cell(s.log_a_stderr), cell(s.samples),
                    cell(s.horizon_used), cell(s.reverse), cell(s.log_bound)});
    }
    table.row({cell(p_grid[j]), cell(w.log_z_hat), cell(w.wired.log_z_stderr), cell(w.log_z_check),
               cell(w.free.log_z_stderr), cell(w.m_star), cell(w.m_star_stderr), cell(w.budget_exhausted)});
    auto s = w.summary();
    s["p"] = p_grid[j];
    summaries.push_back(s);
  }
  std::ofstream(ctx.out / "weights_summary.json") << summaries.dump(2) << '\n';
  ctx.files.push_back("weights_summary.json");
  ctx.summary = {{"weights", summaries}};
}

// ---------------------------------------------------------------- bottleneck

inline constexpr std::size_t kMaxExactBottleneckEdges = 16;

std::vector<std::uint8_t> free_phase_mask(const ExactModel& model, const PhaseSpec& spec) {
  auto largest = largest_component_table(model);
  std::vector<std::uint8_t> mask(model.num_states());
  for (State s = 0; s < mask.size(); ++s) mask[s] = phase_of_size(largest[s], spec) == Phase::Free;
  return mask;
}

void cmd_bottleneck(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto geom = geometry_of(cfg, cfg.get<int>("lattice.n"));
  const Graph g = host_graph(geom, boundary_of(cfg, geom));
  const ModelParams params = model_params(cfg);
  const auto spec = phase_spec(cfg, geom.num_vertices());
  if (g.num_edges() <= kMaxExactBottleneckEdges) {
    auto csv = ctx.csv("bottleneck_exact.csv");
    const double eps = number(cfg, "bottleneck.t_mix_eps", 0.0, 1.0, true);
    json rows = json::array();
    for (double q : cfg.get<std::vector<double>>("bottleneck.q_grid")) {
      if (!(q > 0.0)) cfg.fail("bottleneck.q_grid", "values must be positive");
      auto model = exact_distribution(g, params.p, q);
      auto chain = params.bridge_q ? exact_transition_matrix_with_bridge_q(model, *params.bridge_q)
                                   : exact_transition_matrix(model);
      auto c = exact_conductance(chain, free_phase_mask(model, spec));
      const auto t = exact_mixing_time(chain, eps);
      const bool holds = static_cast<double>(t) >= c.mixing_lower_bound;
      csv.row({cell(q), cell(params.p), cell(c.pi_a), cell(c.flow), cell(c.phi), cell(c.mixing_lower_bound), cell(t),
               cell(holds)});
      rows.push_back({{"q", q}, {"phi", c.phi}, {"t_mix", t}, {"holds", holds}});
    }
    ctx.summary = {{"exact", rows}};
    return;
  }
  PhaseSampling sampling;
  sampling.horizon = number(cfg, "bottleneck.horizon", 0.0, 1e12);
  sampling.snapshots = std::max<std::size_t>(1, cfg.get<std::size_t>("bottleneck.snapshots"));
  auto flow = estimate_exit_flow(g, spec, params, Phase::Free, sampling, ctx.run(ctx.seed));
  auto csv = ctx.csv("bottleneck_sampled.csv");
  if (cfg.has("bottleneck.m_star")) {
    const double m = number(cfg, "bottleneck.m_star", 0.0, 1.0, true);
    const double phi = flow.mean / m;
    csv.row({cell(params.q), cell(params.p), cell(flow.mean), cell(flow.stderr_), cell(m), cell(phi),
             cell(flow.stderr_ / m), cell(phi > 0.0 ? 1.0 / (2.0 * phi) : INFINITY)});
  } else {
    csv.row({cell(params.q), cell(params.p), cell(flow.mean), cell(flow.stderr_), Cell(), Cell(), Cell(), Cell()});
  }
  ctx.summary = {{"exit_flow", flow.mean}, {"exit_flow_stderr", flow.stderr_}};
}

// ---------------------------------------------------------------- oracle-diff

struct DiffRow {
  std::string check, instance, statistic;
  double value, tolerance;
};

// Largest |empirical - exact| / binomial stderr over the states.
double worst_z(const std::vector<std::size_t>& counts, std::size_t n, const std::vector<double>& exact) {
  double worst = 0.0;
  for (std::size_t s = 0; s < exact.size(); ++s) {
    const double f = static_cast<double>(counts[s]) / static_cast<double>(n);
    const double se = std::sqrt(std::max(exact[s] * (1.0 - exact[s]), 1e-12) / static_cast<double>(n));
    worst = std::max(worst, std::abs(f - exact[s]) / se);
  }
  return worst;
}

std::vector<DiffRow> oracle_battery(const Context& ctx, const ModelParams& sim) {
  const auto& cfg = ctx.cfg;
  constexpr double kZ = 5.0;
  const std::size_t draws = cfg.get<std::size_t>("oracle.draws");
  const std::size_t samples = cfg.get<std::size_t>("oracle.samples");
  if (draws < 100) cfg.fail("oracle.draws", "needs at least 100 draws");
  if (samples < 100) cfg.fail("oracle.samples", "needs at least 100 samples");
  if (!(sim.p > 0.0 && sim.p < 1.0)) cfg.fail("model.p", "oracle-diff needs 0 < p < 1");
  std::vector<DiffRow> rows;

  const auto tiny_geom = LatticeGeometry::build(2, 2, LatticeKind::Box);
  auto tiny = std::make_shared<const Graph>(graph_of(tiny_geom, make_boundary(tiny_geom, BoundaryKind::Free)));
  const auto small_geom = LatticeGeometry::build(2, 3, LatticeKind::Box);
  auto small = std::make_shared<const Graph>(graph_of(small_geom, make_boundary(small_geom, BoundaryKind::Free)));
  auto cycle = std::make_shared<const Graph>(cycle_graph(5));

  // One-step kernel against the exact transition probabilities.
  for (const auto& [name, g] : {std::pair{"box2_free", tiny}, std::pair{"cycle5", cycle}}) {
    auto model = exact_distribution(*g, sim.p, sim.q);
    auto chain = exact_transition_matrix(model);
    const std::size_t E = g->num_edges(), S = model.num_states();
    auto worst = map_replicas(S, ctx.threads, [&, g = g](std::size_t s) {
      Chain c(g, sim, ctx.engine, state_to_config(static_cast<State>(s), E));
      CounterRng rng(ctx.seed, static_cast<std::uint32_t>(s), Purpose::Misc, 1);
      std::vector<std::size_t> counts(S, 0);
      const EdgeSet start = c.configuration();
      for (std::size_t k = 0; k < draws; ++k) {
        const auto e = static_cast<EdgeId>(rng.below(static_cast<std::uint32_t>(E)));
        c.apply_update(e, rng.uniform());
        ++counts[config_to_state(c.configuration())];
        c.engine().assign(start);
      }
      std::vector<double> row(S);
      for (State t = 0; t < S; ++t) row[t] = chain.transition(static_cast<State>(s), t);
      return worst_z(counts, draws, row);
    });
    rows.push_back({"kernel", name, "max |z| over transition entries", *std::max_element(worst.begin(), worst.end()), kZ});
  }

  // Continuous-time chains at stationarity against pi and the phase conditionals.
  const auto run_states = [&](std::shared_ptr<const Graph> g, const PhasePredicate& pred, Init init, std::uint64_t salt) {
    const auto E = static_cast<std::uint32_t>(g->num_edges());
    return map_replicas(samples, ctx.threads, [&](std::size_t r) {
      Chain c(g, sim, ctx.engine, init);
      run_restricted(c, pred, 30.0, EventStream(substream(ctx.seed, salt), static_cast<std::uint32_t>(r), E));
      return config_to_state(c.configuration());
    });
  };
  {
    auto model = exact_distribution(*tiny, sim.p, sim.q);
    auto states = run_states(tiny, PhasePredicate::always(), Init::Empty, 10);
    std::vector<std::size_t> counts(model.num_states(), 0);
    for (auto s : states) ++counts[s];
    rows.push_back({"stationary", "box2_free", "max |z| over states", worst_z(counts, samples, model.pi), kZ});
  }
  {
    const auto spec = PhaseSpec::make(small_geom.num_vertices(), 0.25);
    auto model = exact_distribution(*small, sim.p, sim.q);
    auto largest = largest_component_table(model);
    for (Phase phase : {Phase::Wired, Phase::Free}) {
      auto cond = exact_conditional(model, [&](State s) { return phase_of_size(largest[s], spec) == phase; });
      auto states = run_states(small, PhasePredicate::of(phase, spec), phase == Phase::Wired ? Init::Full : Init::Empty,
                               phase == Phase::Wired ? 11 : 12);
      // Edge marginals and the open-edge count law are compared; the full
      // 4096-state law needs more samples than a smoke battery affords.
      const std::size_t E = small->num_edges();
      auto exact_edge = edge_marginals(cond, E);
      std::vector<double> exact_k(E + 1, 0.0);
      for (State s = 0; s < cond.size(); ++s) exact_k[__builtin_popcount(s)] += cond[s];
      std::vector<std::size_t> edge_counts(E, 0), k_counts(E + 1, 0);
      bool escaped = false;
      for (auto s : states) {
        for (std::size_t e = 0; e < E; ++e) edge_counts[e] += (s >> e) & 1u;
        ++k_counts[__builtin_popcount(s)];
        escaped |= phase_of_size(largest[s], spec) != phase;
      }
      double worst = 0.0;
      for (std::size_t e = 0; e < E; ++e) {
        const double f = static_cast<double>(edge_counts[e]) / samples;
        const double se = std::sqrt(std::max(exact_edge[e] * (1 - exact_edge[e]), 1e-12) / samples);
        worst = std::max(worst, std::abs(f - exact_edge[e]) / se);
      }
      worst = std::max(worst, worst_z(k_counts, samples, exact_k));
      const std::string check = phase == Phase::Wired ? "restricted_wired" : "restricted_free";
      rows.push_back({check, "box3_free", "max |z| over edge marginals and open-count law", worst, kZ});
      rows.push_back({check, "box3_free", "samples outside the phase", escaped ? 1.0 : 0.0, 0.0});
    }
  }
  {
    // Exit flow from the free phase against enumeration.
    const auto spec = PhaseSpec::make(small_geom.num_vertices(), 0.25);
    auto model = exact_distribution(*small, sim.p, sim.q);
    auto chain = exact_transition_matrix(model);
    auto mask = free_phase_mask(model, spec);
    double mass = 0.0, exit = 0.0;
    for (State s = 0; s < model.num_states(); ++s) {
      if (!mask[s]) continue;
      mass += model.pi[s];
      for (std::size_t e = 0; e < small->num_edges(); ++e)
        if (!mask[s ^ (State{1} << e)]) exit += model.pi[s] * chain.flip_probability(s, e);
    }
    PhaseSampling sampling;
    sampling.horizon = 30;
    sampling.snapshots = 1;
    RunOptions run = ctx.run(substream(ctx.seed, 13));
    run.replicas = samples;
    auto est = estimate_exit_flow(*small, spec, sim, Phase::Free, sampling, run);
    rows.push_back({"exit_flow", "box3_free", "|z| of the exit flow", std::abs(est.mean - exit / mass) / est.stderr_, kZ});
  }
  return rows;
}

int cmd_oracle_diff(Context& ctx) {
  const ModelParams sim = model_params(ctx.cfg);
  auto rows = oracle_battery(ctx, sim);
  auto csv = ctx.csv("oracle_diff.csv");
  bool all = true;
  json out = json::array();
  for (const auto& r : rows) {
    const bool pass = r.value <= r.tolerance;
    all &= pass;
    csv.row({cell(r.check), cell(r.instance), cell(r.statistic), cell(r.value), cell(r.tolerance), cell(pass)});
    out.push_back({{"check", r.check}, {"instance", r.instance}, {"pass", pass}});
  }
  ctx.summary = {{"pass", all}, {"checks", out}, {"fault_injected", sim.bridge_q.has_value()}};
  return all ? kExitOk : kExitDifferential;
}

}  // namespace

int run_command(const std::string& name, const Config& config, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto seed = config.get<std::uint64_t>("run.seed");
    const int threads = config.get<int>("run.threads");
    if (threads < 1) config.fail("run.threads", "must be at least 1");
    const auto replicas = config.get<std::size_t>("run.replicas");
    if (replicas < 1) config.fail("run.replicas", "must be at least 1");
    const std::filesystem::path out = config.get<std::string>("run.out");
    if (std::find(command_names().begin(), command_names().end(), name) == command_names().end())
      throw ConfigError("unknown command '" + name + "'");
    std::filesystem::create_directories(out);
    Context ctx{config, out, seed, hash_hex(config_hash(config)), threads, replicas,
                engine_kind_from_string(config.get<std::string>("run.engine")), {}, json::object(), 0};
    int code = kExitOk;
    if (name == "sample") cmd_sample(ctx);
    if (name == "mix") cmd_mix(ctx);
    if (name == "spatial") cmd_spatial(ctx);
    if (name == "weights") cmd_weights(ctx);
    if (name == "bottleneck") cmd_bottleneck(ctx);
    if (name == "oracle-diff") code = cmd_oracle_diff(ctx);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest = {{"command", name},
                     {"schema_version", kSchemaVersion},
                     {"config", config.values},
                     {"config_hash", ctx.hash},
                     {"seed", seed},
                     {"threads", threads},
                     {"wall_seconds", wall},
                     {"events", ctx.events},
                     {"files", ctx.files},
                     {"summary", ctx.summary},
                     {"exit_code", code}};
    std::ofstream(out / "manifest.json") << manifest.dump(2) << '\n';
    log << name << ": wrote " << ctx.files.size() << " files to " << out.string() << " in " << fmt(wall) << " s";
    if (code == kExitDifferential) log << " (differential failures)";
    log << '\n';
    return code;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"FK heat-bath dynamics experiments"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string chosen;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "configuration file (.json or key-value text)")->required();
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--threads", threads, "override run.threads");
    sub->add_option("--out", out, "override run.out");
    sub->callback([&chosen, name] { chosen = name; });
  }
  auto* schema = app.add_subcommand("schema", "print the configuration and CSV schema as markdown");
  schema->callback([&chosen] { chosen = "schema"; });
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (chosen == "schema") {
    std::cout << output_schema_markdown();
    return kExitOk;
  }
  Config cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  if (seed) cfg.set("run.seed", *seed);
  if (threads) cfg.set("run.threads", *threads);
  if (!out.empty()) cfg.set("run.out", out);
  return run_command(chosen, cfg, std::cerr);
}

std::string output_schema_markdown() {
  std::ostringstream md;
  md << "# Output schema\n\nGenerated by `fkdyn schema`.\n\n" << schema_markdown() << "\n## CSV files\n\n"
     << "Every CSV starts with `seed` (run.seed) and `config_hash` (FNV-1a 64 of the resolved configuration "
        "without run.seed, run.threads and run.out, as 16 hex digits). Floats use 17 significant digits; "
        "empty cells mean not applicable. Wall time lives only in `manifest.json`.\n";
  for (const auto& spec : csv_specs()) {
    md << "\n### `" << spec.file << "` (" << spec.command << ")\n\n| column | meaning |\n|---|---|\n";
    for (const auto& c : spec.columns) md << "| `" << c.name << "` | " << c.doc << " |\n";
  }
  md << "\n## Binary samples\n\n`samples.bin` (sample) concatenates one record per replica: a 44-byte "
        "little-endian header `u32 d, u32 n, u32 kind, f64 p, f64 q, u64 seed, u64 event_count` (kind: "
        "lattice kind in the low byte, 0 torus and 1 box, periodic mask above it) followed by ceil(|E|/8) "
        "bytes holding edge e in bit e % 8 of byte e / 8.\n";
  return md.str();
}

}  // namespace fk
