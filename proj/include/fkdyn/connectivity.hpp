#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fkdyn/graph.hpp"

namespace fk {

class EdgeAlreadyPresent : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class EdgeAbsent : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class EngineKind { Naive, FullyDynamic };

std::string to_string(EngineKind kind);
EngineKind engine_kind_from_string(const std::string& s);

// Components of (V, omega) with the graph's ghost classes wired in. Ghost
// nodes are part of the component structure but carry no weight in sizes.
class ConnectivityEngine {
 public:
  explicit ConnectivityEngine(std::shared_ptr<const Graph> graph);
  virtual ~ConnectivityEngine() = default;

  virtual EngineKind kind() const = 0;
  virtual std::unique_ptr<ConnectivityEngine> clone() const = 0;

  // Return the change in component count.
  int insert_edge(EdgeId e);
  int delete_edge(EdgeId e);

  // True iff the endpoints of e are disconnected in omega \ {e}.
  bool is_bridge(EdgeId e);
  virtual bool connected(VertexId a, VertexId b) = 0;
  // Lattice-vertex count of the component containing v.
  virtual std::size_t component_size(VertexId v) = 0;
  virtual std::size_t largest_component() = 0;
  std::size_t component_count() const { return components_; }

  bool is_open(EdgeId e) const { return omega_[e] != 0; }
  const EdgeSet& configuration() const { return omega_; }
  std::size_t num_open() const { return num_open_; }
  const Graph& graph() const { return *graph_; }
  std::size_t num_edges() const { return graph_->num_edges(); }

  // Replace the configuration; minimal set of inserts/deletes.
  void assign(const EdgeSet& omega);

  // component index -> sorted lattice vertex list, ordered by smallest vertex.
  nlohmann::json dump_components() const;

 protected:
  virtual int do_insert(EdgeId e) = 0;
  virtual int do_delete(EdgeId e) = 0;
  virtual bool do_is_open_bridge(EdgeId e);

  std::shared_ptr<const Graph> graph_;
  EdgeSet omega_;
  std::size_t num_open_ = 0;
  std::size_t components_ = 0;
};

std::unique_ptr<ConnectivityEngine> make_engine(EngineKind kind, const Graph& graph);
std::unique_ptr<ConnectivityEngine> make_engine(EngineKind kind, std::shared_ptr<const Graph> graph);

// Reference engine: union-find rebuilt on every deletion.
class NaiveEngine final : public ConnectivityEngine {
 public:
  explicit NaiveEngine(std::shared_ptr<const Graph> graph);
  EngineKind kind() const override { return EngineKind::Naive; }
  std::unique_ptr<ConnectivityEngine> clone() const override;
  bool connected(VertexId a, VertexId b) override;
  std::size_t component_size(VertexId v) override;
  std::size_t largest_component() override;

 protected:
  int do_insert(EdgeId e) override;
  int do_delete(EdgeId e) override;
  bool do_is_open_bridge(EdgeId e) override;

 private:
  void rebuild(EdgeId skip);
  std::size_t root(VertexId v) { return ds_.find(v); }
  DisjointSets ds_;
  std::vector<std::size_t> weight_;  // lattice vertex count at each root
  bool weight_dirty_ = true;
};

// Spanning-forest engine with level-tagged edges and Euler-tour trees
// (Holm, de Lichtenberg, Thorup): amortized polylog updates.
class DynamicEngine final : public ConnectivityEngine {
 public:
  explicit DynamicEngine(std::shared_ptr<const Graph> graph);
  EngineKind kind() const override { return EngineKind::FullyDynamic; }
  std::unique_ptr<ConnectivityEngine> clone() const override;
  bool connected(VertexId a, VertexId b) override;
  std::size_t component_size(VertexId v) override;
  std::size_t largest_component() override { return max_weight_; }

  bool is_tree_edge(EdgeId e) const { return tree_[e] != 0; }
  int level_of(EdgeId e) const { return level_[e]; }
  // Internal consistency audit for tests.
  void check_invariants();

 protected:
  int do_insert(EdgeId e) override;
  int do_delete(EdgeId e) override;
  bool do_is_open_bridge(EdgeId e) override;

 private:
  using Node = std::int32_t;
  static constexpr Node kNil = -1;

  // Splay-tree sequences.
  void pull(Node x);
  void rotate(Node x);
  void splay(Node x);
  Node join(Node a, Node b);
  Node split_before(Node x);
  Node split_after(Node x);
  Node reroot(Node x);
  Node find_flagged(Node root, std::uint8_t bit);
  bool same_tree(Node a, Node b);
  void set_flag(Node x, std::uint8_t bit, bool on);

  Node vnode(int level, std::size_t v) const { return static_cast<Node>(level * per_level_ + v); }
  Node anode(int level, std::size_t e, int dir) const {
    return static_cast<Node>(level * per_level_ + nv_ + 2 * e + dir);
  }

  int insert_internal(std::size_t e);
  int delete_internal(std::size_t e);
  void link(std::size_t e, int level);
  void cut(std::size_t e, int level);
  void add_nontree(std::size_t e, int level);
  void remove_nontree(std::size_t e);
  bool replace(std::size_t e, int level, std::size_t u, std::size_t v);

  void hist_add(std::size_t w);
  void hist_remove(std::size_t w);
  std::size_t tree_weight(std::size_t v);

  std::size_t nv_ = 0;          // lattice + ghost vertices
  std::size_t ne_ = 0;          // lattice + ghost edges
  std::size_t per_level_ = 0;   // nv_ + 2 * ne_
  int levels_ = 1;
  std::vector<Edge> all_edges_;

  std::vector<Node> left_, right_, parent_;
  std::vector<std::int32_t> size_, weight_;
  std::vector<std::uint8_t> own_weight_, own_flags_, agg_flags_;

  std::vector<std::int8_t> level_;
  std::vector<std::uint8_t> tree_;
  std::vector<std::vector<std::vector<std::uint32_t>>> adj_;  // [level][vertex] non-tree edges
  std::vector<std::uint32_t> adj_pos_;                         // [2*e + side]

  std::vector<std::size_t> hist_;
  std::size_t max_weight_ = 0;
};

}  // namespace fk
