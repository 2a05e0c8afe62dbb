#include "fkdyn/connectivity.hpp"

#include <algorithm>
#include <map>

namespace fk {

std::string to_string(EngineKind kind) { return kind == EngineKind::Naive ? "naive" : "dynamic"; }

EngineKind engine_kind_from_string(const std::string& s) {
  if (s == "naive") return EngineKind::Naive;
  if (s == "dynamic" || s == "fully-dynamic") return EngineKind::FullyDynamic;
  throw std::invalid_argument("unknown engine '" + s + "'");
}

ConnectivityEngine::ConnectivityEngine(std::shared_ptr<const Graph> graph)
    : graph_(std::move(graph)), omega_(graph_->num_edges(), 0) {}

int ConnectivityEngine::insert_edge(EdgeId e) {
  if (e >= omega_.size()) throw std::out_of_range("edge out of range");
  if (omega_[e]) throw EdgeAlreadyPresent("edge " + std::to_string(e) + " already open");
  const int delta = do_insert(e);
  omega_[e] = 1;
  ++num_open_;
  components_ = static_cast<std::size_t>(static_cast<long long>(components_) + delta);
  return delta;
}

int ConnectivityEngine::delete_edge(EdgeId e) {
  if (e >= omega_.size()) throw std::out_of_range("edge out of range");
  if (!omega_[e]) throw EdgeAbsent("edge " + std::to_string(e) + " not open");
  const int delta = do_delete(e);
  omega_[e] = 0;
  --num_open_;
  components_ = static_cast<std::size_t>(static_cast<long long>(components_) + delta);
  return delta;
}

bool ConnectivityEngine::is_bridge(EdgeId e) {
  if (!omega_[e]) {
    const Edge& ed = graph_->edges[e];
    return !connected(ed.u, ed.v);
  }
  return do_is_open_bridge(e);
}

bool ConnectivityEngine::do_is_open_bridge(EdgeId e) {
  const int delta = delete_edge(e);
  insert_edge(e);
  return delta == 1;
}

void ConnectivityEngine::assign(const EdgeSet& omega) {
  if (omega.size() != omega_.size()) throw std::invalid_argument("configuration size mismatch");
  for (EdgeId e = 0; e < omega.size(); ++e)
    if (omega_[e] && !omega[e]) delete_edge(e);
  for (EdgeId e = 0; e < omega.size(); ++e)
    if (!omega_[e] && omega[e]) insert_edge(e);
}

nlohmann::json ConnectivityEngine::dump_components() const {
  const Graph& g = *graph_;
  DisjointSets ds(g.num_vertices + g.num_ghosts());
  std::size_t ghost = g.num_vertices;
  for (const auto& c : g.classes) {
    if (c.size() < 2) continue;
    for (VertexId v : c) ds.unite(ghost, v);
    ++ghost;
  }
  for (EdgeId e = 0; e < g.num_edges(); ++e)
    if (omega_[e]) ds.unite(g.edges[e].u, g.edges[e].v);
  std::map<std::size_t, std::vector<VertexId>> by_root;
  for (VertexId v = 0; v < g.num_vertices; ++v) by_root[ds.find(v)].push_back(v);
  std::vector<std::vector<VertexId>> comps;
  for (auto& [root, members] : by_root) comps.push_back(std::move(members));
  std::sort(comps.begin(), comps.end());
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < comps.size(); ++i) j[std::to_string(i)] = comps[i];
  return j;
}

std::unique_ptr<ConnectivityEngine> make_engine(EngineKind kind, std::shared_ptr<const Graph> graph) {
  graph->validate();
  if (kind == EngineKind::Naive) return std::make_unique<NaiveEngine>(std::move(graph));
  return std::make_unique<DynamicEngine>(std::move(graph));
}

std::unique_ptr<ConnectivityEngine> make_engine(EngineKind kind, const Graph& graph) {
  return make_engine(kind, std::make_shared<const Graph>(graph));
}

NaiveEngine::NaiveEngine(std::shared_ptr<const Graph> graph) : ConnectivityEngine(std::move(graph)) {
  rebuild(kNoEdge);
  components_ = count_components(*graph_, omega_);
}

std::unique_ptr<ConnectivityEngine> NaiveEngine::clone() const { return std::make_unique<NaiveEngine>(*this); }

void NaiveEngine::rebuild(EdgeId skip) {
  const Graph& g = *graph_;
  ds_.reset(g.num_vertices + g.num_ghosts());
  std::size_t ghost = g.num_vertices;
  for (const auto& c : g.classes) {
    if (c.size() < 2) continue;
    for (VertexId v : c) ds_.unite(ghost, v);
    ++ghost;
  }
  for (EdgeId e = 0; e < g.num_edges(); ++e)
    if (omega_[e] && e != skip) ds_.unite(g.edges[e].u, g.edges[e].v);
  weight_dirty_ = true;
}

int NaiveEngine::do_insert(EdgeId e) {
  weight_dirty_ = true;
  return ds_.unite(graph_->edges[e].u, graph_->edges[e].v) ? -1 : 0;
}

int NaiveEngine::do_delete(EdgeId e) {
  const Edge& ed = graph_->edges[e];
  const bool was = root(ed.u) == root(ed.v);
  rebuild(e);
  return (was && root(ed.u) != root(ed.v)) ? 1 : 0;
}

bool NaiveEngine::do_is_open_bridge(EdgeId e) {
  const Edge& ed = graph_->edges[e];
  rebuild(e);
  const bool bridge = root(ed.u) != root(ed.v);
  ds_.unite(ed.u, ed.v);
  return bridge;
}

bool NaiveEngine::connected(VertexId a, VertexId b) { return root(a) == root(b); }

std::size_t NaiveEngine::component_size(VertexId v) {
  largest_component();
  return weight_[root(v)];
}

std::size_t NaiveEngine::largest_component() {
  if (weight_dirty_) {
    weight_.assign(graph_->num_vertices + graph_->num_ghosts(), 0);
    for (VertexId v = 0; v < graph_->num_vertices; ++v) ++weight_[root(v)];
    weight_dirty_ = false;
  }
  return weight_.empty() ? 0 : *std::max_element(weight_.begin(), weight_.end());
}

}  // namespace fk
