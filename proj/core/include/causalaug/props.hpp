#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "causalaug/scm.hpp"

namespace causalaug {

// Random member of the confounder class behind the generated datasets: one
// root confounder whose only children are the causal factor z0 and 2-4 style
// factors, strictly positive CPTs, cardinalities 2-5.
Scm random_style_scm(std::uint64_t seed);

// The same structure with one style mechanism rewired to condition on a
// sibling style. That edge leaves the class, so the do-invariance of styles
// must fail on it; used as the negative control.
Scm perturbed_style_scm(std::uint64_t seed);

// Random treatment/outcome SCM where the listed adjustment set is
// backdoor-admissible by construction: confounder roots into both x and y,
// optionally a mediator x -> m -> y.
struct AdjustmentCase {
  Scm scm;
  std::string x, y;
  std::vector<std::string> adjust;
  int x_base = 0, x_val = 0;
};
AdjustmentCase random_adjustment_case(std::uint64_t seed);

// E[y | do(x = x_val)] - E[y | do(x = x_base)] by graph surgery alone,
// independent of the adjustment formula.
double surgery_ace(const Scm& scm, const std::string& x, int x_val, int x_base,
                   const std::string& y);

struct PropResult {
  std::string name;
  std::uint64_t trials = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct PropsReport {
  std::vector<PropResult> props;
  bool all_pass() const;
};

// Every module's invariant suite over `trials` random models per property;
// zero trials yields an empty passing report. The negative control injects
// one out-of-class SCM into the do-invariance trials, which must flip that
// property to a failure.
PropsReport run_props(std::uint64_t seed, std::uint64_t trials, bool negative_control = false);

// One line per property: name, trials, max residual, tolerance, PASS/FAIL.
void write_props_report(std::ostream& os, const PropsReport& report);

}  // namespace causalaug
