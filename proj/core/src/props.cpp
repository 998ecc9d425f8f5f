#include "causalaug/props.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "causalaug/datagen.hpp"
#include "causalaug/info.hpp"
#include "causalaug/mlp.hpp"
#include "causalaug/rng.hpp"

namespace causalaug {

namespace {

// Strictly positive row: Gumbel-ish draw mixed with uniform so dependence
// margins in the negative control stay comfortable.
void random_row(Stream& rng, double* row, int k) {
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    row[i] = -std::log(1.0 - rng.uniform01());
    total += row[i];
  }
  for (int i = 0; i < k; ++i) row[i] = 0.85 * row[i] / total + 0.15 / static_cast<double>(k);
}

Mechanism random_mechanism(Stream& rng, const Scm& scm, int child,
                           const std::vector<int>& parents) {
  Mechanism m;
  m.child = child;
  m.parents = parents;
  std::size_t rows = 1;
  for (int p : parents) rows *= static_cast<std::size_t>(scm.card(p));
  const int k = scm.card(child);
  m.rows.resize(rows * static_cast<std::size_t>(k));
  for (std::size_t r = 0; r < rows; ++r)
    random_row(rng, m.rows.data() + r * static_cast<std::size_t>(k), k);
  return m;
}

Scm style_scm_impl(std::uint64_t seed, bool perturb) {
  Stream rng(mix64(seed, 0x9b0b));
  const int n_styles = 2 + rng.uniform_int(3);

  Scm scm;
  scm.dag.add_node("u");
  scm.factors.push_back({"u", 2 + rng.uniform_int(4)});
  for (int i = 0; i <= n_styles; ++i) {
    std::string name = "z" + std::to_string(i);
    scm.dag.add_node(name);
    scm.factors.push_back({name, 2 + rng.uniform_int(4)});
  }
  std::vector<std::vector<int>> parents(scm.dag.nodes.size());
  for (int i = 0; i <= n_styles; ++i) {
    scm.dag.add_edge(0, 1 + i);
    parents[static_cast<std::size_t>(1 + i)].push_back(0);
  }
  if (perturb) {
    // z2 conditioned on its sibling z1 leaves the confounder class: the
    // styles are no longer causally mute toward each other.
    scm.dag.add_edge("z1", "z2");
    parents[scm.dag.index_of("z2")].push_back(scm.dag.index_of("z1"));
  }
  for (std::size_t i = 0; i < scm.dag.nodes.size(); ++i)
    scm.mechanisms.push_back(random_mechanism(rng, scm, static_cast<int>(i), parents[i]));

  scm.causal = "z0";
  for (int i = 1; i <= n_styles; ++i) scm.confounded.push_back("z" + std::to_string(i));
  scm.confounders = {"u"};
  scm.validate();
  return scm;
}

std::vector<std::string> class_factors(const Scm& scm) {
  std::vector<std::string> out{scm.causal};
  out.insert(out.end(), scm.confounded.begin(), scm.confounded.end());
  return out;
}

// max_v max_z |p(zi = z | do(zj = v)) - p(zi = z)|
double do_invariance_residual(const Scm& scm, const std::string& zi, const std::string& zj) {
  DistTable marg = exact_joint(scm, {zi});
  double worst = 0.0;
  const int vj = scm.card(scm.dag.index_of(zj));
  for (int v = 0; v < vj; ++v) {
    DistTable post = interventional_dist(scm, {zi}, {{zj, v}});
    for (std::size_t z = 0; z < post.p.size(); ++z)
      worst = std::max(worst, std::abs(post.p[z] - marg.p[z]));
  }
  return worst;
}

double scm_do_invariance(const Scm& scm) {
  double worst = 0.0;
  const auto vars = class_factors(scm);
  for (const auto& zi : vars)
    for (const auto& zj : vars)
      if (zi != zj) worst = std::max(worst, do_invariance_residual(scm, zi, zj));
  return worst;
}

FactorTuple random_tuple(Stream& rng, Variant v) {
  FactorTuple t;
  t.digit = rng.uniform_int(10);
  t.thickness = rng.uniform_int(2);
  t.morph = 0.9f;
  if (v == Variant::WLM) {
    t.fg_tex = rng.uniform_int(10);
    t.bg_tex = rng.uniform_int(10);
  } else {
    t.fg = rng.uniform_int(10);
    t.bg = rng.uniform_int(10);
  }
  return t;
}

}  // namespace

Scm random_style_scm(std::uint64_t seed) { return style_scm_impl(seed, false); }

Scm perturbed_style_scm(std::uint64_t seed) { return style_scm_impl(seed, true); }

AdjustmentCase random_adjustment_case(std::uint64_t seed) {
  Stream rng(mix64(seed, 0xace5));
  AdjustmentCase c;
  c.x = "x";
  c.y = "y";

  const int n_u = 1 + rng.uniform_int(2);
  Scm& scm = c.scm;
  for (int u = 0; u < n_u; ++u) {
    std::string name = "u" + std::to_string(u);
    scm.dag.add_node(name);
    scm.factors.push_back({name, 2 + rng.uniform_int(3)});
    c.adjust.push_back(name);
  }
  scm.dag.add_node("x");
  scm.factors.push_back({"x", 2 + rng.uniform_int(3)});
  const bool mediator = rng.bernoulli(0.5);
  if (mediator) {
    scm.dag.add_node("m");
    scm.factors.push_back({"m", 2 + rng.uniform_int(3)});
  }
  scm.dag.add_node("y");
  scm.factors.push_back({"y", 2 + rng.uniform_int(4)});

  std::vector<std::vector<int>> parents(scm.dag.nodes.size());
  const int xi = scm.dag.index_of("x");
  const int yi = scm.dag.index_of("y");
  for (int u = 0; u < n_u; ++u) {
    scm.dag.add_edge(u, xi);
    parents[static_cast<std::size_t>(xi)].push_back(u);
    scm.dag.add_edge(u, yi);
    parents[static_cast<std::size_t>(yi)].push_back(u);
  }
  if (mediator) {
    const int mi = scm.dag.index_of("m");
    scm.dag.add_edge(xi, mi);
    parents[static_cast<std::size_t>(mi)].push_back(xi);
    scm.dag.add_edge(mi, yi);
    parents[static_cast<std::size_t>(yi)].push_back(mi);
  } else {
    scm.dag.add_edge(xi, yi);
    parents[static_cast<std::size_t>(yi)].push_back(xi);
  }
  for (std::size_t i = 0; i < scm.dag.nodes.size(); ++i)
    scm.mechanisms.push_back(random_mechanism(rng, scm, static_cast<int>(i), parents[i]));
  scm.causal = "x";
  scm.confounders = c.adjust;
  scm.validate();

  const int kx = scm.card(xi);
  c.x_base = rng.uniform_int(kx);
  c.x_val = (c.x_base + 1 + rng.uniform_int(kx - 1)) % kx;
  return c;
}

double surgery_ace(const Scm& scm, const std::string& x, int x_val, int x_base,
                   const std::string& y) {
  auto expect = [&](int xv) {
    DistTable d = interventional_dist(scm, {y}, {{x, xv}});
    double e = 0.0;
    for (std::size_t i = 0; i < d.p.size(); ++i) e += static_cast<double>(i) * d.p[i];
    return e;
  };
  return expect(x_val) - expect(x_base);
}

bool PropsReport::all_pass() const {
  return std::all_of(props.begin(), props.end(), [](const PropResult& p) { return p.pass; });
}

PropsReport run_props(std::uint64_t seed, std::uint64_t trials, bool negative_control) {
  PropsReport rep;
  if (trials == 0) return rep;

  auto add = [&rep](std::string name, std::uint64_t n, double resid, double tol) {
    rep.props.push_back({std::move(name), n, resid, tol, resid <= tol});
  };

  {
    double worst = 0.0;
    std::uint64_t n = trials;
    for (std::uint64_t t = 0; t < trials; ++t)
      worst = std::max(worst, scm_do_invariance(random_style_scm(mix64(seed, t))));
    if (negative_control) {
      worst = std::max(worst, scm_do_invariance(perturbed_style_scm(mix64(seed, 0xbad))));
      n += 1;
    }
    add("style_do_invariance", n, worst, 1e-9);
  }

  {
    double worst = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      Scm scm = random_style_scm(mix64(seed, t));
      const auto vars = class_factors(scm);
      for (std::size_t i = 0; i < vars.size(); ++i)
        for (std::size_t j = i + 1; j < vars.size(); ++j) {
          DistTable joint = exact_joint(scm, {vars[i], vars[j]});
          const double mi = mutual_information(joint, {vars[i]}, {vars[j]});
          worst = std::max(worst, std::abs(cnf_exact(scm, vars[i], vars[j]) - 2.0 * mi));
        }
    }
    add("cnf_twice_mi", trials, worst, 1e-9);
  }

  {
    double worst = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      Scm scm = random_style_scm(mix64(seed, t));
      Stream rng(mix64(seed, 0xd0 + t));
      Assignment on_causal{{scm.causal, rng.uniform_int(scm.card(scm.dag.index_of(scm.causal)))}};
      Scm cut0 = intervene(scm, on_causal);
      Assignment on_styles;
      for (const auto& s : scm.confounded)
        on_styles[s] = rng.uniform_int(scm.card(scm.dag.index_of(s)));
      Scm cuts = intervene(scm, on_styles);
      for (const auto& s : scm.confounded) {
        worst = std::max(worst, std::abs(cnf_exact(cut0, scm.causal, s)));
        worst = std::max(worst, std::abs(cnf_exact(cuts, scm.causal, s)));
      }
    }
    add("do_severs_cnf", trials, worst, 1e-9);
  }

  {
    double worst = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      Stream rng(mix64(seed, 0xdec0 + t));
      DistTable table;
      table.vars = {"zi", "z0", "yhat"};
      for (int i = 0; i < 3; ++i) table.cards.push_back(2 + rng.uniform_int(5));
      table.p.resize(table.size());
      random_row(rng, table.p.data(), static_cast<int>(table.p.size()));
      Decomposition d = invariance_decomposition(table);
      worst = std::max(worst, std::abs(d.lhs - (d.term1 - d.mi)));
    }
    add("decomposition_identity", trials, worst, 1e-9);
  }

  {
    double worst = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      AdjustmentCase c = random_adjustment_case(mix64(seed, t));
      const double a = ace(c.scm, c.x, c.x_val, c.x_base, c.y, c.adjust);
      const double s = surgery_ace(c.scm, c.x, c.x_val, c.x_base, c.y);
      worst = std::max(worst, std::abs(a - s));
      worst = std::max(worst, std::abs(ace(c.scm, c.x, c.x_base, c.x_base, c.y, c.adjust)));
    }
    add("ace_adjustment_surgery", trials, worst, 1e-9);
  }

  {
    double failures = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      Stream rng(mix64(seed, 0x4e4d + t));
      for (Variant v : {Variant::CM, Variant::DCM, Variant::WLM}) {
        FactorTuple z = random_tuple(rng, v);
        if (!(invert(render(z, v), v) == z)) failures += 1.0;
      }
    }
    add("render_invert_identity", 3 * trials, failures, 0.0);
  }

  {
    // Relabeling the color indices by a permutation h commutes with the
    // counterfactual pipeline: rendering the edited tuple in h-coordinates
    // equals editing after abduction from the h-coordinate image.
    double failures = 0.0;
    Stream rng(mix64(seed, 0xc0de));
    std::array<int, 10> perm{};
    for (int i = 0; i < 10; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = 9; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
    for (std::uint64_t t = 0; t < trials; ++t) {
      FactorTuple z = random_tuple(rng, Variant::CM);
      const std::string target = rng.bernoulli(0.5) ? "fg" : "bg";
      const int u = rng.uniform_int(10);
      auto apply_h = [&perm](FactorTuple f) {
        f.fg = perm[static_cast<std::size_t>(f.fg)];
        f.bg = perm[static_cast<std::size_t>(f.bg)];
        return f;
      };
      FactorTuple cf = z;
      set_factor(cf, target, u);
      Image path_a = render(apply_h(cf), Variant::CM);
      FactorTuple hz = invert(render(apply_h(z), Variant::CM), Variant::CM);
      set_factor(hz, target, perm[static_cast<std::size_t>(u)]);
      if (!(path_a == render(hz, Variant::CM))) failures += 1.0;
    }
    add("counterfactual_relabel_commutes", trials, failures, 0.0);
  }

  {
    const std::uint64_t n = std::min<std::uint64_t>(trials, 10);
    double worst = 0.0;
    for (std::uint64_t t = 0; t < n; ++t)
      worst = std::max(worst, gradient_check(mix64(seed, 0x60ad + t)));
    add("gradient_finite_diff", n, worst, 1e-4);
  }

  return rep;
}

void write_props_report(std::ostream& os, const PropsReport& report) {
  char buf[160];
  for (const auto& p : report.props) {
    std::snprintf(buf, sizeof(buf), "%-32s trials=%-5llu max_residual=%.3e tol=%.1e %s\n",
                  p.name.c_str(), static_cast<unsigned long long>(p.trials), p.max_residual,
                  p.tolerance, p.pass ? "PASS" : "FAIL");
    os << buf;
  }
}

}  // namespace causalaug
