#include <bit>
#include <stdexcept>

#include "fkdyn/connectivity.hpp"

namespace fk {

namespace {

constexpr std::uint8_t kHasNontree = 1;  // vertex node: non-tree edges at this level
constexpr std::uint8_t kTreeHere = 2;    // arc node: tree edge whose level is this level

}  // namespace

DynamicEngine::DynamicEngine(std::shared_ptr<const Graph> graph) : ConnectivityEngine(std::move(graph)) {
  const Graph& g = *graph_;
  nv_ = g.num_vertices + g.num_ghosts();
  all_edges_ = g.edges;
  std::size_t ghost = g.num_vertices;
  for (const auto& c : g.classes) {
    if (c.size() < 2) continue;
    for (VertexId v : c) all_edges_.push_back({static_cast<VertexId>(ghost), v});
    ++ghost;
  }
  ne_ = all_edges_.size();
  per_level_ = nv_ + 2 * ne_;
  levels_ = nv_ > 1 ? std::bit_width(nv_ - 1) + 1 : 1;
  const std::size_t total = per_level_ * static_cast<std::size_t>(levels_);
  if (total > static_cast<std::size_t>(INT32_MAX)) throw std::length_error("graph too large for engine");

  left_.assign(total, kNil);
  right_.assign(total, kNil);
  parent_.assign(total, kNil);
  size_.assign(total, 1);
  own_weight_.assign(total, 0);
  own_flags_.assign(total, 0);
  agg_flags_.assign(total, 0);
  for (int l = 0; l < levels_; ++l)
    for (std::size_t v = 0; v < g.num_vertices; ++v) own_weight_[vnode(l, v)] = 1;
  weight_.assign(own_weight_.begin(), own_weight_.end());

  level_.assign(ne_, 0);
  tree_.assign(ne_, 0);
  adj_.assign(levels_, std::vector<std::vector<std::uint32_t>>(nv_));
  adj_pos_.assign(2 * ne_, 0);

  hist_.assign(g.num_vertices + 1, 0);
  hist_[1] = g.num_vertices;
  hist_[0] = nv_ - g.num_vertices;
  max_weight_ = g.num_vertices > 0 ? 1 : 0;

  long long comps = static_cast<long long>(nv_);
  for (std::size_t e = g.num_edges(); e < ne_; ++e) comps += insert_internal(e);
  components_ = static_cast<std::size_t>(comps);
}

std::unique_ptr<ConnectivityEngine> DynamicEngine::clone() const { return std::make_unique<DynamicEngine>(*this); }

void DynamicEngine::pull(Node x) {
  const Node l = left_[x];
  const Node r = right_[x];
  std::int32_t s = 1;
  std::int32_t w = own_weight_[x];
  std::uint8_t f = own_flags_[x];
  if (l != kNil) {
    s += size_[l];
    w += weight_[l];
    f |= agg_flags_[l];
  }
  if (r != kNil) {
    s += size_[r];
    w += weight_[r];
    f |= agg_flags_[r];
  }
  size_[x] = s;
  weight_[x] = w;
  agg_flags_[x] = f;
}

void DynamicEngine::rotate(Node x) {
  const Node p = parent_[x];
  const Node g = parent_[p];
  if (left_[p] == x) {
    left_[p] = right_[x];
    if (right_[x] != kNil) parent_[right_[x]] = p;
    right_[x] = p;
  } else {
    right_[p] = left_[x];
    if (left_[x] != kNil) parent_[left_[x]] = p;
    left_[x] = p;
  }
  parent_[p] = x;
  parent_[x] = g;
  if (g != kNil) {
    if (left_[g] == p)
      left_[g] = x;
    else
      right_[g] = x;
  }
  pull(p);
  pull(x);
}

void DynamicEngine::splay(Node x) {
  while (parent_[x] != kNil) {
    const Node p = parent_[x];
    const Node g = parent_[p];
    if (g != kNil) rotate((left_[g] == p) == (left_[p] == x) ? p : x);
    rotate(x);
  }
}

DynamicEngine::Node DynamicEngine::join(Node a, Node b) {
  if (a == kNil) return b;
  if (b == kNil) return a;
  Node x = a;
  while (right_[x] != kNil) x = right_[x];
  splay(x);
  right_[x] = b;
  parent_[b] = x;
  pull(x);
  return x;
}

DynamicEngine::Node DynamicEngine::split_before(Node x) {
  splay(x);
  const Node l = left_[x];
  if (l != kNil) {
    parent_[l] = kNil;
    left_[x] = kNil;
    pull(x);
  }
  return l;
}

DynamicEngine::Node DynamicEngine::split_after(Node x) {
  splay(x);
  const Node r = right_[x];
  if (r != kNil) {
    parent_[r] = kNil;
    right_[x] = kNil;
    pull(x);
  }
  return r;
}

DynamicEngine::Node DynamicEngine::reroot(Node x) {
  const Node l = split_before(x);
  return join(x, l);
}

DynamicEngine::Node DynamicEngine::find_flagged(Node root, std::uint8_t bit) {
  if (!(agg_flags_[root] & bit)) return kNil;
  Node x = root;
  for (;;) {
    const Node l = left_[x];
    if (l != kNil && (agg_flags_[l] & bit)) {
      x = l;
    } else if (own_flags_[x] & bit) {
      splay(x);
      return x;
    } else {
      x = right_[x];
    }
  }
}

bool DynamicEngine::same_tree(Node a, Node b) {
  if (a == b) return true;
  splay(a);
  splay(b);
  return parent_[a] != kNil;
}

void DynamicEngine::set_flag(Node x, std::uint8_t bit, bool on) {
  splay(x);
  if (on)
    own_flags_[x] |= bit;
  else
    own_flags_[x] &= static_cast<std::uint8_t>(~bit);
  pull(x);
}

void DynamicEngine::link(std::size_t e, int level) {
  const Edge& ed = all_edges_[e];
  const Node a1 = anode(level, e, 0);
  const Node a2 = anode(level, e, 1);
  if (level_[e] == level) {
    own_flags_[a1] |= kTreeHere;
    pull(a1);
  }
  const Node ru = reroot(vnode(level, ed.u));
  const Node rv = reroot(vnode(level, ed.v));
  join(join(join(ru, a1), rv), a2);
}

void DynamicEngine::cut(std::size_t e, int level) {
  Node a1 = anode(level, e, 0);
  Node a2 = anode(level, e, 1);
  splay(a1);
  const std::int32_t r1 = left_[a1] == kNil ? 0 : size_[left_[a1]];
  splay(a2);
  const std::int32_t r2 = left_[a2] == kNil ? 0 : size_[left_[a2]];
  if (r1 > r2) std::swap(a1, a2);
  const Node x = split_before(a1);
  split_after(a1);
  split_before(a2);
  const Node c = split_after(a2);
  join(x, c);
  own_flags_[a1] &= static_cast<std::uint8_t>(~kTreeHere);
  own_flags_[a2] &= static_cast<std::uint8_t>(~kTreeHere);
  pull(a1);
  pull(a2);
}

void DynamicEngine::add_nontree(std::size_t e, int level) {
  level_[e] = static_cast<std::int8_t>(level);
  tree_[e] = 0;
  const Edge& ed = all_edges_[e];
  for (int side = 0; side < 2; ++side) {
    const VertexId x = side ? ed.v : ed.u;
    auto& list = adj_[level][x];
    adj_pos_[2 * e + side] = static_cast<std::uint32_t>(list.size());
    list.push_back(static_cast<std::uint32_t>(e));
    if (list.size() == 1) set_flag(vnode(level, x), kHasNontree, true);
  }
}

void DynamicEngine::remove_nontree(std::size_t e) {
  const int level = level_[e];
  const Edge& ed = all_edges_[e];
  for (int side = 0; side < 2; ++side) {
    const VertexId x = side ? ed.v : ed.u;
    auto& list = adj_[level][x];
    const std::uint32_t pos = adj_pos_[2 * e + side];
    const std::uint32_t last = list.back();
    list[pos] = last;
    adj_pos_[2 * last + (all_edges_[last].u == x ? 0 : 1)] = pos;
    list.pop_back();
    if (list.empty()) set_flag(vnode(level, x), kHasNontree, false);
  }
}

std::size_t DynamicEngine::tree_weight(std::size_t v) {
  const Node x = vnode(0, v);
  splay(x);
  return static_cast<std::size_t>(weight_[x]);
}

void DynamicEngine::hist_add(std::size_t w) {
  ++hist_[w];
  if (w > max_weight_) max_weight_ = w;
}

void DynamicEngine::hist_remove(std::size_t w) {
  --hist_[w];
  while (max_weight_ > 0 && hist_[max_weight_] == 0) --max_weight_;
}

int DynamicEngine::insert_internal(std::size_t e) {
  const Edge& ed = all_edges_[e];
  level_[e] = 0;
  if (!same_tree(vnode(0, ed.u), vnode(0, ed.v))) {
    const std::size_t wu = tree_weight(ed.u);
    const std::size_t wv = tree_weight(ed.v);
    tree_[e] = 1;
    link(e, 0);
    hist_add(wu + wv);
    hist_remove(wu);
    hist_remove(wv);
    return -1;
  }
  add_nontree(e, 0);
  return 0;
}

int DynamicEngine::delete_internal(std::size_t e) {
  if (!tree_[e]) {
    remove_nontree(e);
    return 0;
  }
  const Edge& ed = all_edges_[e];
  const std::size_t whole = tree_weight(ed.u);
  const int top = level_[e];
  for (int l = 0; l <= top; ++l) cut(e, l);
  tree_[e] = 0;
  for (int l = top; l >= 0; --l)
    if (replace(e, l, ed.u, ed.v)) return 0;
  const std::size_t wu = tree_weight(ed.u);
  const std::size_t wv = tree_weight(ed.v);
  hist_add(wu);
  hist_add(wv);
  hist_remove(whole);
  return 1;
}

bool DynamicEngine::replace(std::size_t, int level, std::size_t u, std::size_t v) {
  const Node nu = vnode(level, u);
  const Node nv = vnode(level, v);
  splay(nu);
  const std::int32_t su = size_[nu];
  splay(nv);
  const std::int32_t sv = size_[nv];
  const Node small = su <= sv ? nu : nv;
  const std::size_t base = static_cast<std::size_t>(level) * per_level_;

  // Push the small side's level tree edges one level up.
  for (;;) {
    splay(small);
    const Node x = find_flagged(small, kTreeHere);
    if (x == kNil) break;
    const std::size_t f = (static_cast<std::size_t>(x) - base - nv_) / 2;
    set_flag(x, kTreeHere, false);
    if (level + 1 >= levels_) throw std::logic_error("level overflow in dynamic connectivity");
    level_[f] = static_cast<std::int8_t>(level + 1);
    link(f, level + 1);
  }

  for (;;) {
    splay(small);
    const Node x = find_flagged(small, kHasNontree);
    if (x == kNil) break;
    const std::size_t w = static_cast<std::size_t>(x) - base;
    const std::size_t f = adj_[level][w].back();
    const Edge& fe = all_edges_[f];
    const std::size_t other = fe.u == w ? fe.v : fe.u;
    remove_nontree(f);
    if (same_tree(vnode(level, other), small)) {
      if (level + 1 >= levels_) throw std::logic_error("level overflow in dynamic connectivity");
      add_nontree(f, level + 1);
    } else {
      tree_[f] = 1;
      level_[f] = static_cast<std::int8_t>(level);
      for (int l = 0; l <= level; ++l) link(f, l);
      return true;
    }
  }
  return false;
}

int DynamicEngine::do_insert(EdgeId e) { return insert_internal(e); }
int DynamicEngine::do_delete(EdgeId e) { return delete_internal(e); }

bool DynamicEngine::do_is_open_bridge(EdgeId e) {
  if (!tree_[e]) return false;
  return ConnectivityEngine::do_is_open_bridge(e);
}

bool DynamicEngine::connected(VertexId a, VertexId b) { return same_tree(vnode(0, a), vnode(0, b)); }

std::size_t DynamicEngine::component_size(VertexId v) { return tree_weight(v); }

void DynamicEngine::check_invariants() {
  const auto fail = [](const std::string& what) { throw std::logic_error("dynamic engine invariant: " + what); };
  const std::size_t lattice_edges = graph_->num_edges();
  std::size_t tree_edges = 0;
  for (std::size_t e = 0; e < ne_; ++e) {
    const bool open = e >= lattice_edges || omega_[e];
    const Edge& ed = all_edges_[e];
    if (!open) {
      if (tree_[e]) fail("closed edge in forest");
      continue;
    }
    if (tree_[e]) {
      ++tree_edges;
      for (int l = 0; l < levels_; ++l) {
        const bool want = l <= level_[e];
        splay(anode(l, e, 0));
        const bool in_tree = size_[anode(l, e, 0)] > 1;
        if (want != in_tree) fail("arc presence mismatch");
        if (((own_flags_[anode(l, e, 0)] & kTreeHere) != 0) != (l == level_[e])) fail("tree flag mismatch");
      }
      if (!same_tree(vnode(level_[e], ed.u), vnode(level_[e], ed.v))) fail("tree edge endpoints split");
    } else {
      if (!same_tree(vnode(level_[e], ed.u), vnode(level_[e], ed.v))) fail("non-tree edge spans trees");
      for (int side = 0; side < 2; ++side) {
        const VertexId x = side ? ed.v : ed.u;
        if (adj_[level_[e]][x][adj_pos_[2 * e + side]] != e) fail("adjacency position");
      }
    }
  }
  for (int l = 0; l < levels_; ++l)
    for (std::size_t v = 0; v < nv_; ++v) {
      const bool flag = own_flags_[vnode(l, v)] & kHasNontree;
      if (flag == adj_[l][v].empty()) fail("non-tree flag mismatch");
      splay(vnode(l, v));
      const std::size_t verts = (static_cast<std::size_t>(size_[vnode(l, v)]) + 2) / 3;
      if (verts > 1 && verts > (nv_ >> l) && l > 0) fail("level tree too large");
    }
  if (components_ != nv_ - tree_edges) fail("component count");
}

}  // namespace fk
