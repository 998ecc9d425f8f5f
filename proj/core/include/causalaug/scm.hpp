#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "causalaug/dist_table.hpp"
#include "causalaug/error.hpp"

namespace causalaug {

struct FactorSpec {
  std::string name;
  int cardinality = 0;
};

// Directed acyclic graph over named nodes. Edges are (parent, child) index
// pairs into `nodes`. Use validate() after construction; query helpers
// assume a validated graph.
struct Dag {
  std::vector<std::string> nodes;
  std::vector<std::pair<int, int>> edges;

  int add_node(const std::string& name);
  void add_edge(const std::string& parent, const std::string& child);
  void add_edge(int parent, int child);

  int index_of(const std::string& name) const;  // -1 when absent
  std::vector<std::vector<int>> parents() const;
  std::vector<std::vector<int>> children() const;

  // Kahn topological order; throws ValidationError on cycles or bad edges.
  std::vector<int> topo_order() const;
  void validate() const;
};

// Conditional probability table for one node. `rows` holds one probability
// row of length card(child) per full parent assignment; parent assignments
// are indexed row-major in the order of `parents`.
struct Mechanism {
  int child = -1;
  std::vector<int> parents;
  std::vector<double> rows;
};

// Value assignment, node name -> value index.
using Assignment = std::map<std::string, int>;

struct Scm {
  Dag dag;
  std::vector<FactorSpec> factors;     // aligned with dag.nodes
  std::vector<Mechanism> mechanisms;   // aligned with dag.nodes
  std::string causal;                  // designated Z0 (may be empty)
  std::vector<std::string> confounded; // designated style factors
  std::vector<std::string> confounders;

  int card(int node) const { return factors[node].cardinality; }

  // Full structural validation: alignment, CPT shapes, row mass within 1e-9,
  // acyclicity, designated roles present.
  void validate() const;
};

inline constexpr std::size_t kDefaultCellCap = 10'000'000;

// Ancestral sampling. Instance i draws from substream (seed, i), so the
// result is independent of evaluation order and stable under parallelism.
std::vector<Assignment> sample(const Scm& scm, std::size_t n, std::uint64_t seed);

// Exact marginal joint over `vars` via variable elimination (sum-product).
// Throws CapExceededError when the requested table or any intermediate
// factor would exceed `cell_cap` cells.
DistTable exact_joint(const Scm& scm, const std::vector<std::string>& vars,
                      std::size_t cell_cap = kDefaultCellCap);

// Graph surgery: for each (node, value), incoming edges are removed and the
// mechanism is replaced by a point mass on the value.
Scm intervene(const Scm& scm, const Assignment& do_values);

DistTable interventional_dist(const Scm& scm, const std::vector<std::string>& targets,
                              const Assignment& do_values,
                              std::size_t cell_cap = kDefaultCellCap);

bool d_separated(const Dag& dag, const std::string& x, const std::string& y,
                 const std::vector<std::string>& s);

// Backdoor criterion: s contains no descendant of x and blocks every path
// from x to y that enters x through a parent.
bool backdoor_admissible(const Dag& dag, const std::string& x, const std::string& y,
                         const std::vector<std::string>& s);

// Average causal effect E[Y | do(x_val)] - E[Y | do(x_base)] via the backdoor
// adjustment formula over `adjust`. Y's value index is treated as its value.
// Throws ValidationError when `adjust` is not admissible.
double ace(const Scm& scm, const std::string& x, int x_val, int x_base,
           const std::string& y, const std::vector<std::string>& adjust);

// JSON round trip. to_json is canonical: loading and re-serializing an SCM
// reproduces the exact string.
std::string to_json(const Scm& scm);
Scm scm_from_json(const std::string& text);

}  // namespace causalaug
