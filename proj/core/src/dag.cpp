#include <algorithm>
#include <deque>
#include <set>

#include "causalaug/scm.hpp"

namespace causalaug {

int Dag::add_node(const std::string& name) {
  if (name.empty()) throw ValidationError("node name must be non-empty");
  if (index_of(name) >= 0) throw ValidationError("duplicate node name: " + name);
  nodes.push_back(name);
  return static_cast<int>(nodes.size()) - 1;
}

void Dag::add_edge(const std::string& parent, const std::string& child) {
  int p = index_of(parent), c = index_of(child);
  if (p < 0) throw ValidationError("unknown edge endpoint: " + parent);
  if (c < 0) throw ValidationError("unknown edge endpoint: " + child);
  add_edge(p, c);
}

void Dag::add_edge(int parent, int child) {
  int n = static_cast<int>(nodes.size());
  if (parent < 0 || parent >= n || child < 0 || child >= n)
    throw ValidationError("edge endpoint out of range");
  if (parent == child) throw ValidationError("self-loop on " + nodes[parent]);
  for (const auto& e : edges)
    if (e.first == parent && e.second == child)
      throw ValidationError("duplicate edge " + nodes[parent] + " -> " + nodes[child]);
  edges.emplace_back(parent, child);
}

int Dag::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::vector<int>> Dag::parents() const {
  std::vector<std::vector<int>> pa(nodes.size());
  for (const auto& e : edges) pa[e.second].push_back(e.first);
  return pa;
}

std::vector<std::vector<int>> Dag::children() const {
  std::vector<std::vector<int>> ch(nodes.size());
  for (const auto& e : edges) ch[e.first].push_back(e.second);
  return ch;
}

std::vector<int> Dag::topo_order() const {
  const int n = static_cast<int>(nodes.size());
  std::vector<int> indeg(n, 0);
  for (const auto& e : edges) {
    if (e.first < 0 || e.first >= n || e.second < 0 || e.second >= n)
      throw ValidationError("edge endpoint out of range");
    ++indeg[e.second];
  }
  auto ch = children();
  std::deque<int> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int v = ready.front();
    ready.pop_front();
    order.push_back(v);
    for (int c : ch[v])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (static_cast<int>(order.size()) != n) throw ValidationError("graph contains a cycle");
  return order;
}

void Dag::validate() const {
  std::set<std::string> seen;
  for (const auto& nm : nodes) {
    if (nm.empty()) throw ValidationError("node name must be non-empty");
    if (!seen.insert(nm).second) throw ValidationError("duplicate node name: " + nm);
  }
  (void)topo_order();  // range + acyclicity
}

namespace {

void collect_down(const std::vector<std::vector<int>>& ch, int from, std::vector<char>& mark) {
  if (mark[from]) return;
  mark[from] = 1;
  for (int c : ch[from]) collect_down(ch, c, mark);
}

}  // namespace

bool d_separated(const Dag& dag, const std::string& x, const std::string& y,
                 const std::vector<std::string>& s) {
  const int n = static_cast<int>(dag.nodes.size());
  int xi = dag.index_of(x), yi = dag.index_of(y);
  if (xi < 0 || yi < 0) throw ValidationError("d_separated: unknown endpoint");
  std::vector<char> in_s(n, 0);
  for (const auto& nm : s) {
    int i = dag.index_of(nm);
    if (i < 0) throw ValidationError("d_separated: unknown conditioning node " + nm);
    in_s[i] = 1;
  }
  if (xi == yi) return false;
  if (in_s[xi] || in_s[yi]) throw ValidationError("d_separated: endpoint inside conditioning set");

  auto pa = dag.parents();
  auto ch = dag.children();

  // Ancestors of the conditioning set (including the set itself); a collider
  // opens a trail exactly when it lies in this set.
  std::vector<char> anc(n, 0);
  std::deque<int> q;
  for (int i = 0; i < n; ++i)
    if (in_s[i] && !anc[i]) {
      anc[i] = 1;
      q.push_back(i);
    }
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int p : pa[v])
      if (!anc[p]) {
        anc[p] = 1;
        q.push_back(p);
      }
  }

  // Reachability over (node, direction) states; direction 0 means the trail
  // arrived from a child (moving up), 1 means it arrived from a parent.
  std::vector<char> visited(static_cast<std::size_t>(n) * 2, 0);
  std::deque<std::pair<int, int>> frontier;
  frontier.emplace_back(xi, 0);
  while (!frontier.empty()) {
    auto [v, dir] = frontier.front();
    frontier.pop_front();
    if (visited[static_cast<std::size_t>(v) * 2 + dir]) continue;
    visited[static_cast<std::size_t>(v) * 2 + dir] = 1;
    if (v == yi) return false;  // active trail reaches y
    if (dir == 0) {
      if (!in_s[v]) {
        for (int p : pa[v]) frontier.emplace_back(p, 0);
        for (int c : ch[v]) frontier.emplace_back(c, 1);
      }
    } else {
      if (!in_s[v])
        for (int c : ch[v]) frontier.emplace_back(c, 1);
      if (anc[v])
        for (int p : pa[v]) frontier.emplace_back(p, 0);
    }
  }
  return true;
}

bool backdoor_admissible(const Dag& dag, const std::string& x, const std::string& y,
                         const std::vector<std::string>& s) {
  const int n = static_cast<int>(dag.nodes.size());
  int xi = dag.index_of(x), yi = dag.index_of(y);
  if (xi < 0 || yi < 0) throw ValidationError("backdoor_admissible: unknown endpoint");
  auto ch = dag.children();
  std::vector<char> desc(n, 0);
  collect_down(ch, xi, desc);
  for (const auto& nm : s) {
    int i = dag.index_of(nm);
    if (i < 0) throw ValidationError("backdoor_admissible: unknown node " + nm);
    if (desc[i]) return false;  // conditioning on a descendant of x
  }
  // Remove edges leaving x; what is left of x's connections are exactly the
  // backdoor paths, so plain d-separation decides blocking.
  Dag cut;
  cut.nodes = dag.nodes;
  for (const auto& e : dag.edges)
    if (e.first != xi) cut.edges.push_back(e);
  return d_separated(cut, x, y, s);
}

}  // namespace causalaug
