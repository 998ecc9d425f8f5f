#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "causalaug/augment.hpp"
#include "causalaug/datagen.hpp"
#include "causalaug/dist_table.hpp"
#include "causalaug/mlp.hpp"

namespace causalaug {

struct ExperimentConfig {
  Variant variant = Variant::DCM;
  double r = 0.95;
  int n_train = 60000;
  int n_test = 10000;
  std::vector<Strategy> strategies;
  std::vector<std::uint64_t> seeds;
  AugmentConfig aug;   // per-run seed is overwritten with the run's seed
  TrainConfig train;   // likewise
};

// One (strategy, seed) cell. The pooled measure is taken over the factor
// tuples of the training pool, except for the patch-mix strategy where the
// mixed tuples are meaningless and the provenance multiset (every emission
// contributes both parents) is measured instead.
struct RunResult {
  Strategy strategy = Strategy::none;
  std::uint64_t seed = 0;
  std::size_t n_pool = 0;
  double accuracy = 0.0;
  std::vector<std::string> pairs;      // "digit:<style>" per style factor
  std::vector<double> pooled_cnf;      // aligned with pairs
  std::vector<double> invariance;      // I(Zi; Yhat | Z0) on the test split
};

// Aggregate over seeds for one strategy. Spread columns are sample standard
// deviations and NaN for a single seed (rendered empty).
struct SummaryRow {
  Strategy strategy = Strategy::none;
  std::size_t n_seeds = 0;
  double n_pool_mean = 0.0;
  double acc_mean = 0.0, acc_sd = 0.0;
  std::vector<std::string> pairs;
  std::vector<double> cnf_mean, cnf_sd;
  std::vector<double> inv_mean, inv_sd;
};

struct ExperimentHooks {
  std::function<void(const RunResult&)> on_run;
  // Every predicted-joint table produced while scoring, before reduction.
  std::function<void(const DistTable&)> on_joint;
};

// Each (strategy, seed) cell is an independent task: the dataset, the
// augmentation streams, and the trainer are all seeded from the cell alone,
// so any execution order yields the same results. This build runs the cells
// sequentially, datasets cached per seed; rows are merged in seed order.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg,
                                      const ExperimentHooks& hooks = {});

// Presentation order of strategy groups: none, replicate, patch-mix, then the
// counterfactual strategies from broadest to narrowest intervention.
int strategy_rank(Strategy s);

// Simulated-intervention group label, e.g. "do(Z0)"; "none" for the
// observational strategies.
std::string simulated_intervention(Strategy s);

// Schema experiment-runs-v1:
//   strategy,seed,n_pool,accuracy[,cnf:<pair>...][,inv:<style>...]
void write_runs_csv(std::ostream& os, const std::vector<RunResult>& runs);

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs);

// Schema experiment-summary-v1:
//   strategy,n_seeds,n_pool_mean,accuracy_mean,accuracy_sd[,...mean,...sd]
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

// Markdown table grouped by simulated intervention, accuracy in percent,
// information columns in nats, "mean +- sd" cells.
void write_summary_markdown(std::ostream& os, const std::vector<SummaryRow>& rows,
                            const ExperimentConfig& cfg);

// One row of the correlation sweep: plug-in estimates from `n` ancestral
// samples per seed against the exact and closed-form values, for the pair
// (digit, first style factor).
struct CnfTableRow {
  double r = 0.0;
  std::string pair;
  std::uint64_t n = 0;
  std::size_t n_seeds = 0;
  double emp_mean = 0.0, emp_sd = 0.0;  // sd NaN for a single seed
  double exact = 0.0;
  double closed_form = 0.0;
};

std::vector<CnfTableRow> cnf_table(Variant v, const std::vector<double>& rs, std::uint64_t n,
                                   const std::vector<std::uint64_t>& seeds);

// Schema cnf-table-v1:
//   r,pair,n,n_seeds,cnf_empirical_mean,cnf_empirical_sd,cnf_exact,closed_form
void write_cnf_table_csv(std::ostream& os, const std::vector<CnfTableRow>& rows);

}  // namespace causalaug
