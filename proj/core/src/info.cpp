#include <algorithm>
#include <cmath>
#include <cstdio>

#include "causalaug/info.hpp"

namespace causalaug {

namespace {

// 0 log 0 = 0 throughout; contributions are skipped on zero-mass cells.
bool positive(double x) { return x > 0.0; }

std::vector<std::string> concat(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void require_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b,
                      const char* what) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (x == y) throw ValidationError(std::string(what) + ": groups share variable " + x);
}

}  // namespace

double entropy(const DistTable& t) {
  t.validate();
  double h = 0.0;
  for (double v : t.p)
    if (positive(v)) h -= v * std::log(v);
  return h;
}

double mutual_information(const DistTable& joint, const std::vector<std::string>& a,
                          const std::vector<std::string>& b) {
  require_disjoint(a, b, "mutual_information");
  DistTable ab = marginal(joint, concat(a, b));
  DistTable pa = marginal(ab, a);
  DistTable pb = marginal(ab, b);
  const std::size_t na = pa.p.size();
  const std::size_t nb = pb.p.size();
  double mi = 0.0;
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      double pab = ab.p[i * nb + j];
      if (positive(pab)) mi += pab * std::log(pab / (pa.p[i] * pb.p[j]));
    }
  return mi;
}

double conditional_mutual_information(const DistTable& joint,
                                      const std::vector<std::string>& a,
                                      const std::vector<std::string>& b,
                                      const std::vector<std::string>& given) {
  require_disjoint(a, b, "conditional_mutual_information");
  require_disjoint(a, given, "conditional_mutual_information");
  require_disjoint(b, given, "conditional_mutual_information");
  DistTable abc = marginal(joint, concat(concat(a, b), given));
  DistTable ac = marginal(abc, concat(a, given));
  DistTable bc = marginal(abc, concat(b, given));
  DistTable c = marginal(abc, given);
  std::size_t na = 1, nb = 1, nc = 1;
  for (const auto& v : a) na *= static_cast<std::size_t>(abc.card_of(v));
  for (const auto& v : b) nb *= static_cast<std::size_t>(abc.card_of(v));
  for (const auto& v : given) nc *= static_cast<std::size_t>(abc.card_of(v));
  double cmi = 0.0;
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      for (std::size_t k = 0; k < nc; ++k) {
        double p_abc = abc.p[(i * nb + j) * nc + k];
        if (!positive(p_abc)) continue;
        double p_ac = ac.p[i * nc + k];
        double p_bc = bc.p[j * nc + k];
        double p_c = c.p[k];
        cmi += p_abc * std::log(p_c * p_abc / (p_ac * p_bc));
      }
  return cmi;
}

double directed_information(const Scm& scm, const std::string& zi, const std::string& zj) {
  if (zi == zj) throw ValidationError("directed_information: identical variables");
  DistTable joint = exact_joint(scm, {zi, zj});
  DistTable pj = marginal(joint, {zj});
  const int ki = joint.cards[0], kj = joint.cards[1];

  // One interventional marginal of zi per conditioning value of zj.
  std::vector<DistTable> do_zi(static_cast<std::size_t>(kj));
  for (int b = 0; b < kj; ++b) {
    if (!positive(pj.p[static_cast<std::size_t>(b)])) continue;
    do_zi[static_cast<std::size_t>(b)] = interventional_dist(scm, {zi}, {{zj, b}});
  }
  double di = 0.0;
  for (int a = 0; a < ki; ++a)
    for (int b = 0; b < kj; ++b) {
      double pab = joint.p[static_cast<std::size_t>(a) * kj + b];
      if (!positive(pab)) continue;
      double cond = pab / pj.p[static_cast<std::size_t>(b)];
      double surg = do_zi[static_cast<std::size_t>(b)].p[static_cast<std::size_t>(a)];
      if (!positive(surg))
        throw ValidationError("directed_information: observed cell outside interventional support");
      di += pab * std::log(cond / surg);
    }
  return di;
}

double cnf_exact(const Scm& scm, const std::string& zi, const std::string& zj) {
  return directed_information(scm, zi, zj) + directed_information(scm, zj, zi);
}

JointCounts JointCounts::from_samples(const std::vector<Assignment>& samples,
                                      const std::vector<std::string>& vars,
                                      const std::vector<int>& cards) {
  if (vars.size() != cards.size())
    throw ValidationError("JointCounts: vars/cards mismatch");
  JointCounts jc;
  jc.vars = vars;
  jc.cards = cards;
  std::size_t cells = 1;
  for (int c : cards) {
    if (c <= 0) throw ValidationError("JointCounts: non-positive cardinality");
    cells *= static_cast<std::size_t>(c);
  }
  jc.counts.assign(cells, 0);
  std::vector<int> vals(vars.size());
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < vars.size(); ++i) {
      auto it = s.find(vars[i]);
      if (it == s.end()) throw ValidationError("JointCounts: sample missing " + vars[i]);
      if (it->second < 0 || it->second >= cards[i])
        throw ValidationError("JointCounts: value out of range for " + vars[i]);
      vals[i] = it->second;
    }
    ++jc.counts[encode_index(jc.cards, vals.data())];
    ++jc.total;
  }
  return jc;
}

DistTable JointCounts::to_dist() const {
  if (total == 0) throw ValidationError("JointCounts: empty sample");
  DistTable t;
  t.vars = vars;
  t.cards = cards;
  t.p.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    t.p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return t;
}

double cnf_empirical(const std::vector<Assignment>& samples, const std::string& zi,
                     const std::string& zj) {
  if (samples.empty()) throw ValidationError("cnf_empirical: no samples");
  int ci = 0, cj = 0;
  for (const auto& s : samples) {
    auto a = s.find(zi);
    auto b = s.find(zj);
    if (a == s.end() || b == s.end())
      throw ValidationError("cnf_empirical: sample missing a requested variable");
    ci = std::max(ci, a->second + 1);
    cj = std::max(cj, b->second + 1);
  }
  JointCounts jc = JointCounts::from_samples(samples, {zi, zj}, {ci, cj});
  return 2.0 * mutual_information(jc.to_dist(), {zi}, {zj});
}

Decomposition invariance_decomposition(const DistTable& joint) {
  joint.validate();
  if (joint.vars.size() != 3)
    throw ValidationError("invariance_decomposition: expected exactly (Zi, Z0, Yhat)");
  const std::string& zi = joint.vars[0];
  const std::string& z0 = joint.vars[1];
  const std::string& yh = joint.vars[2];
  Decomposition d;
  d.lhs = conditional_mutual_information(joint, {zi}, {yh}, {z0});
  d.term1 = mutual_information(joint, {zi}, {z0, yh});
  d.mi = mutual_information(joint, {zi}, {z0});
  return d;
}

double gate_mi_closed_form(double r, int k) {
  if (r < 0.0 || r > 1.0) throw ValidationError("gate closed form: r outside [0, 1]");
  if (k < 2) throw ValidationError("gate closed form: k must be at least 2");
  if (r == 0.0) return 0.0;  // exact independence, avoid cancellation residue
  const double kk = static_cast<double>(k);
  const double p_match = r + (1.0 - r) / kk;
  const double p_other = (1.0 - r) / kk;
  double mi = std::log(kk);
  if (p_match > 0.0) mi += p_match * std::log(p_match);
  if (p_other > 0.0) mi += (kk - 1.0) * p_other * std::log(p_other);
  // Nonnegative by construction; clear the cancellation residual at r = 0.
  return std::max(0.0, mi);
}

double gate_cnf_closed_form(double r, int k) { return 2.0 * gate_mi_closed_form(r, k); }

void write_measure_csv(std::ostream& os, const std::vector<MeasureRow>& rows) {
  os << "# causalaug measures-v1\n";
  os << "variant,r,n_samples,pair,cnf_empirical,cnf_exact,mi\n";
  char buf[256];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6g,%llu,%s,%.9f,%.9f,%.9f\n", row.variant.c_str(),
                  row.r, static_cast<unsigned long long>(row.n_samples), row.pair.c_str(),
                  row.cnf_empirical, row.cnf_exact, row.mi);
    os << buf;
  }
}

}  // namespace causalaug
