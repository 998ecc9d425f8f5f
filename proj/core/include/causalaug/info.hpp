#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "causalaug/dist_table.hpp"
#include "causalaug/scm.hpp"

namespace causalaug {

// All information quantities are in nats.

double entropy(const DistTable& t);

// I(A; B) computed from (a marginal of) `joint`. The two groups must be
// disjoint and present in the table.
double mutual_information(const DistTable& joint, const std::vector<std::string>& a,
                          const std::vector<std::string>& b);

double conditional_mutual_information(const DistTable& joint,
                                      const std::vector<std::string>& a,
                                      const std::vector<std::string>& b,
                                      const std::vector<std::string>& given);

// I(Zi -> Zj) = E_{p(zi,zj)} log [ p(zi|zj) / p(zi|do(zj)) ].
double directed_information(const Scm& scm, const std::string& zi, const std::string& zj);

// CNF(Zi; Zj) = I(Zi -> Zj) + I(Zj -> Zi), exact from the model.
double cnf_exact(const Scm& scm, const std::string& zi, const std::string& zj);

// Empirical counts over a variable subset of drawn samples.
struct JointCounts {
  std::vector<std::string> vars;
  std::vector<int> cards;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  static JointCounts from_samples(const std::vector<Assignment>& samples,
                                  const std::vector<std::string>& vars,
                                  const std::vector<int>& cards);
  DistTable to_dist() const;  // plug-in distribution, requires total > 0
};

// Plug-in CNF estimate: twice the plug-in mutual information of the
// empirical (zi, zj) joint. Cardinalities are inferred from the samples.
double cnf_empirical(const std::vector<Assignment>& samples, const std::string& zi,
                     const std::string& zj);

// Decomposition of the conditional dependence I(Zi; Yhat | Z0) for a joint
// table over exactly (Zi, Z0, Yhat), in that order:
//   lhs   = I(Zi; Yhat | Z0)
//   term1 = I(Zi; (Z0, Yhat))   (the joint-information term)
//   mi    = I(Zi; Z0)
// and lhs = term1 - mi holds identically.
struct Decomposition {
  double lhs = 0.0;
  double term1 = 0.0;
  double mi = 0.0;
};
Decomposition invariance_decomposition(const DistTable& joint);

// Closed forms for the gate construction with match rate r over k values:
// p_match = r + (1-r)/k on the canonical cell, p_other = (1-r)/k elsewhere.
double gate_mi_closed_form(double r, int k);
double gate_cnf_closed_form(double r, int k);

struct MeasureRow {
  std::string variant;
  double r = 0.0;
  std::uint64_t n_samples = 0;
  std::string pair;
  double cnf_empirical = 0.0;
  double cnf_exact = 0.0;
  double mi = 0.0;
};

// Schema measures-v1: variant,r,n_samples,pair,cnf_empirical,cnf_exact,mi
void write_measure_csv(std::ostream& os, const std::vector<MeasureRow>& rows);

}  // namespace causalaug
