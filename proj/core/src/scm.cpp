#include <algorithm>
#include <cmath>
#include <set>

#include "causalaug/rng.hpp"
#include "causalaug/scm.hpp"

namespace causalaug {

namespace {

constexpr double kRowMassTol = 1e-9;

std::size_t parent_space(const Scm& scm, const Mechanism& m) {
  std::size_t s = 1;
  for (int p : m.parents) s *= static_cast<std::size_t>(scm.card(p));
  return s;
}

// Internal factor for elimination: variables are node indices, layout is
// row-major with vars[0] slowest, matching DistTable.
struct Fac {
  std::vector<int> vars;
  std::vector<int> cards;
  std::vector<double> vals;

  std::size_t size() const {
    std::size_t s = 1;
    for (int c : cards) s *= static_cast<std::size_t>(c);
    return s;
  }
};

Fac from_mechanism(const Scm& scm, int node) {
  const Mechanism& m = scm.mechanisms[node];
  Fac f;
  f.vars = m.parents;
  f.vars.push_back(node);
  for (int v : f.vars) f.cards.push_back(scm.card(v));
  f.vals = m.rows;  // parents-major, child fastest: same layout
  return f;
}

Fac multiply(const Fac& a, const Fac& b, std::size_t cap) {
  Fac out;
  out.vars = a.vars;
  out.cards = a.cards;
  std::vector<int> b_pos;  // position of each b var in out.vars
  for (std::size_t i = 0; i < b.vars.size(); ++i) {
    auto it = std::find(out.vars.begin(), out.vars.end(), b.vars[i]);
    if (it == out.vars.end()) {
      out.vars.push_back(b.vars[i]);
      out.cards.push_back(b.cards[i]);
      b_pos.push_back(static_cast<int>(out.vars.size()) - 1);
    } else {
      b_pos.push_back(static_cast<int>(it - out.vars.begin()));
    }
  }
  std::size_t cells = out.size();
  if (cells > cap) throw CapExceededError(cells, cap);
  out.vals.assign(cells, 0.0);

  std::vector<int> full(out.vars.size());
  std::vector<int> av(a.vars.size());
  std::vector<int> bv(b.vars.size());
  for (std::size_t idx = 0; idx < cells; ++idx) {
    decode_index(idx, out.cards, full.data());
    for (std::size_t i = 0; i < a.vars.size(); ++i) av[i] = full[i];
    for (std::size_t i = 0; i < b.vars.size(); ++i) bv[i] = full[b_pos[i]];
    out.vals[idx] = a.vals[encode_index(a.cards, av.data())] *
                    b.vals[encode_index(b.cards, bv.data())];
  }
  return out;
}

Fac sum_out(const Fac& f, int var) {
  auto it = std::find(f.vars.begin(), f.vars.end(), var);
  if (it == f.vars.end()) return f;
  std::size_t pos = static_cast<std::size_t>(it - f.vars.begin());
  Fac out;
  for (std::size_t i = 0; i < f.vars.size(); ++i)
    if (i != pos) {
      out.vars.push_back(f.vars[i]);
      out.cards.push_back(f.cards[i]);
    }
  out.vals.assign(out.size(), 0.0);
  std::vector<int> full(f.vars.size());
  std::vector<int> sub(out.vars.size());
  for (std::size_t idx = 0; idx < f.vals.size(); ++idx) {
    decode_index(idx, f.cards, full.data());
    std::size_t j = 0;
    for (std::size_t i = 0; i < f.vars.size(); ++i)
      if (i != pos) sub[j++] = full[i];
    out.vals[encode_index(out.cards, sub.data())] += f.vals[idx];
  }
  return out;
}

}  // namespace

void Scm::validate() const {
  dag.validate();
  const std::size_t n = dag.nodes.size();
  if (factors.size() != n) throw ValidationError("Scm: factor specs not aligned with nodes");
  if (mechanisms.size() != n) throw ValidationError("Scm: mechanisms not aligned with nodes");
  for (std::size_t i = 0; i < n; ++i) {
    if (factors[i].name != dag.nodes[i])
      throw ValidationError("Scm: factor spec name mismatch at " + dag.nodes[i]);
    if (factors[i].cardinality <= 0)
      throw ValidationError("Scm: non-positive cardinality for " + dag.nodes[i]);
  }
  auto pa = dag.parents();
  for (std::size_t i = 0; i < n; ++i) {
    const Mechanism& m = mechanisms[i];
    if (m.child != static_cast<int>(i))
      throw ValidationError("Scm: mechanism child mismatch at " + dag.nodes[i]);
    std::set<int> declared(pa[i].begin(), pa[i].end());
    std::set<int> used(m.parents.begin(), m.parents.end());
    if (declared != used || used.size() != m.parents.size())
      throw ValidationError("Scm: mechanism parents disagree with dag at " + dag.nodes[i]);
    std::size_t rows = parent_space(*this, m);
    std::size_t k = static_cast<std::size_t>(card(static_cast<int>(i)));
    if (m.rows.size() != rows * k)
      throw ValidationError("Scm: CPT shape mismatch at " + dag.nodes[i]);
    for (std::size_t r = 0; r < rows; ++r) {
      double mass = 0.0;
      for (std::size_t v = 0; v < k; ++v) {
        double x = m.rows[r * k + v];
        if (!(x >= 0.0)) throw ValidationError("Scm: negative CPT entry at " + dag.nodes[i]);
        mass += x;
      }
      if (std::abs(mass - 1.0) > kRowMassTol)
        throw ValidationError("Scm: CPT row mass off at " + dag.nodes[i] + ", row " +
                              std::to_string(r));
    }
  }
  auto must_exist = [&](const std::string& nm, const char* role) {
    if (dag.index_of(nm) < 0)
      throw ValidationError(std::string("Scm: designated ") + role + " not a node: " + nm);
  };
  if (!causal.empty()) must_exist(causal, "causal feature");
  for (const auto& nm : confounded) must_exist(nm, "style factor");
  for (const auto& nm : confounders) must_exist(nm, "confounder");
}

std::vector<Assignment> sample(const Scm& scm, std::size_t n, std::uint64_t seed) {
  scm.validate();
  auto order = scm.dag.topo_order();
  std::vector<Assignment> out(n);
  std::vector<int> values(scm.dag.nodes.size());
  for (std::size_t i = 0; i < n; ++i) {
    Stream rng = substream(seed, i);
    for (int node : order) {
      const Mechanism& m = scm.mechanisms[node];
      std::size_t row = 0;
      for (int p : m.parents)
        row = row * static_cast<std::size_t>(scm.card(p)) + static_cast<std::size_t>(values[p]);
      const int k = scm.card(node);
      values[node] = rng.discrete(m.rows.data() + row * static_cast<std::size_t>(k), k);
    }
    Assignment a;
    for (std::size_t v = 0; v < scm.dag.nodes.size(); ++v) a[scm.dag.nodes[v]] = values[v];
    out[i] = std::move(a);
  }
  return out;
}

DistTable exact_joint(const Scm& scm, const std::vector<std::string>& vars,
                      std::size_t cell_cap) {
  scm.validate();
  if (vars.empty()) throw ValidationError("exact_joint: no variables requested");
  std::vector<int> targets;
  for (const auto& v : vars) {
    int i = scm.dag.index_of(v);
    if (i < 0) throw ValidationError("exact_joint: unknown variable " + v);
    if (std::find(targets.begin(), targets.end(), i) != targets.end())
      throw ValidationError("exact_joint: duplicate variable " + v);
    targets.push_back(i);
  }
  std::size_t requested = 1;
  for (int t : targets) requested *= static_cast<std::size_t>(scm.card(t));
  if (requested > cell_cap) throw CapExceededError(requested, cell_cap);

  std::vector<Fac> facs;
  for (std::size_t i = 0; i < scm.dag.nodes.size(); ++i)
    facs.push_back(from_mechanism(scm, static_cast<int>(i)));

  std::vector<int> to_eliminate;
  for (std::size_t i = 0; i < scm.dag.nodes.size(); ++i)
    if (std::find(targets.begin(), targets.end(), static_cast<int>(i)) == targets.end())
      to_eliminate.push_back(static_cast<int>(i));

  // Greedy elimination: always remove the variable whose combined factor is
  // smallest. Exact on these graph sizes; the cap guards pathological orders.
  while (!to_eliminate.empty()) {
    std::size_t best_cells = 0;
    int best_var = -1;
    for (int v : to_eliminate) {
      std::set<int> joined;
      for (const Fac& f : facs)
        if (std::find(f.vars.begin(), f.vars.end(), v) != f.vars.end())
          joined.insert(f.vars.begin(), f.vars.end());
      std::size_t cells = 1;
      for (int u : joined)
        if (u != v) cells *= static_cast<std::size_t>(scm.card(u));
      if (best_var < 0 || cells < best_cells) {
        best_var = v;
        best_cells = cells;
      }
    }
    std::vector<Fac> keep, touch;
    for (Fac& f : facs) {
      if (std::find(f.vars.begin(), f.vars.end(), best_var) != f.vars.end())
        touch.push_back(std::move(f));
      else
        keep.push_back(std::move(f));
    }
    Fac prod = std::move(touch.front());
    for (std::size_t i = 1; i < touch.size(); ++i) prod = multiply(prod, touch[i], cell_cap);
    keep.push_back(sum_out(prod, best_var));
    facs = std::move(keep);
    to_eliminate.erase(std::find(to_eliminate.begin(), to_eliminate.end(), best_var));
  }

  Fac result = std::move(facs.front());
  for (std::size_t i = 1; i < facs.size(); ++i) result = multiply(result, facs[i], cell_cap);

  // Reorder to the requested variable order.
  DistTable out;
  out.vars = vars;
  for (int t : targets) out.cards.push_back(scm.card(t));
  out.p.assign(requested, 0.0);
  std::vector<int> res_vals(result.vars.size());
  std::vector<int> tgt_vals(targets.size());
  for (std::size_t idx = 0; idx < result.vals.size(); ++idx) {
    decode_index(idx, result.cards, res_vals.data());
    for (std::size_t j = 0; j < targets.size(); ++j) {
      auto it = std::find(result.vars.begin(), result.vars.end(), targets[j]);
      tgt_vals[j] = res_vals[static_cast<std::size_t>(it - result.vars.begin())];
    }
    out.p[encode_index(out.cards, tgt_vals.data())] += result.vals[idx];
  }
  return out;
}

Scm intervene(const Scm& scm, const Assignment& do_values) {
  scm.validate();
  Scm out = scm;
  std::vector<int> hit;
  for (const auto& [name, value] : do_values) {
    int node = out.dag.index_of(name);
    if (node < 0) throw ValidationError("intervene: unknown node " + name);
    if (value < 0 || value >= out.card(node))
      throw ValidationError("intervene: value out of range for " + name);
    Mechanism m;
    m.child = node;
    m.rows.assign(static_cast<std::size_t>(out.card(node)), 0.0);
    m.rows[static_cast<std::size_t>(value)] = 1.0;
    out.mechanisms[static_cast<std::size_t>(node)] = std::move(m);
    hit.push_back(node);
  }
  std::vector<std::pair<int, int>> kept;
  for (const auto& e : out.dag.edges)
    if (std::find(hit.begin(), hit.end(), e.second) == hit.end()) kept.push_back(e);
  out.dag.edges = std::move(kept);
  return out;
}

DistTable interventional_dist(const Scm& scm, const std::vector<std::string>& targets,
                              const Assignment& do_values, std::size_t cell_cap) {
  for (const auto& t : targets)
    if (do_values.count(t))
      throw ValidationError("interventional_dist: target " + t + " is intervened");
  return exact_joint(intervene(scm, do_values), targets, cell_cap);
}

double ace(const Scm& scm, const std::string& x, int x_val, int x_base,
           const std::string& y, const std::vector<std::string>& adjust) {
  scm.validate();
  int xi = scm.dag.index_of(x), yi = scm.dag.index_of(y);
  if (xi < 0 || yi < 0) throw ValidationError("ace: unknown endpoint");
  if (x == y) throw ValidationError("ace: x and y coincide");
  for (const auto& s : adjust)
    if (s == x || s == y) throw ValidationError("ace: adjustment set contains an endpoint");
  auto in_range = [&](int v) { return v >= 0 && v < scm.card(xi); };
  if (!in_range(x_val) || !in_range(x_base))
    throw ValidationError("ace: treatment value out of range");
  if (!backdoor_admissible(scm.dag, x, y, adjust))
    throw ValidationError("ace: adjustment set fails the backdoor criterion");
  if (x_val == x_base) return 0.0;

  std::vector<std::string> vars{x, y};
  vars.insert(vars.end(), adjust.begin(), adjust.end());
  DistTable joint = exact_joint(scm, vars);

  const int kx = joint.cards[0], ky = joint.cards[1];
  std::size_t s_cells = 1;
  for (std::size_t i = 2; i < joint.cards.size(); ++i)
    s_cells *= static_cast<std::size_t>(joint.cards[i]);

  // E[Y | do(X=v)] = sum_s p(s) * E[Y | X=v, S=s]; zero-probability
  // conditioning cells contribute zero.
  auto expectation = [&](int v) {
    double total = 0.0;
    std::vector<int> full(joint.cards.size());
    for (std::size_t s = 0; s < s_cells; ++s) {
      std::size_t rem = s;
      for (std::size_t i = joint.cards.size(); i-- > 2;) {
        full[i] = static_cast<int>(rem % static_cast<std::size_t>(joint.cards[i]));
        rem /= static_cast<std::size_t>(joint.cards[i]);
      }
      double p_s = 0.0, p_xs = 0.0, num = 0.0;
      for (int xv = 0; xv < kx; ++xv)
        for (int yv = 0; yv < ky; ++yv) {
          full[0] = xv;
          full[1] = yv;
          double cell = joint.p[encode_index(joint.cards, full.data())];
          p_s += cell;
          if (xv == v) {
            p_xs += cell;
            num += cell * static_cast<double>(yv);
          }
        }
      if (p_s <= 0.0 || p_xs <= 0.0) continue;
      total += p_s * (num / p_xs);
    }
    return total;
  };
  return expectation(x_val) - expectation(x_base);
}

}  // namespace causalaug
