#include "causalaug/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causalaug/error.hpp"
#include "causalaug/info.hpp"

namespace causalaug {

namespace {

Assignment factor_sample(const FactorTuple& f, const std::vector<std::string>& styles) {
  Assignment a;
  a["digit"] = f.digit;
  for (const auto& s : styles) a[s] = factor_value(f, s);
  return a;
}

// Factor samples whose empirical (digit, style) joints the pooled measure is
// taken over. Patch-mix emissions carry both provenance parents instead of
// their own mixed tuple.
std::vector<Assignment> pool_samples(
    const Dataset& train, const std::vector<Instance>& emissions,
    const std::vector<std::pair<FactorTuple, FactorTuple>>* parents,
    const std::vector<std::string>& styles) {
  std::vector<Assignment> out;
  out.reserve(train.instances.size() + (parents ? 2 * parents->size() : emissions.size()));
  for (const auto& inst : train.instances) out.push_back(factor_sample(inst.factors, styles));
  if (parents) {
    for (const auto& [base, donor] : *parents) {
      out.push_back(factor_sample(base, styles));
      out.push_back(factor_sample(donor, styles));
    }
  } else {
    for (const auto& inst : emissions) out.push_back(factor_sample(inst.factors, styles));
  }
  return out;
}

double sample_sd(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return std::nan("");
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::string fmt(double v, const char* spec = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

// "mean +- sd" with the spread omitted when it is NaN (single seed).
std::string pm_cell(double mean, double sd, const char* spec) {
  std::string s = fmt(mean, spec);
  if (!std::isnan(sd)) s += " +- " + fmt(sd, spec);
  return s;
}

}  // namespace

int strategy_rank(Strategy s) {
  switch (s) {
    case Strategy::none: return 0;
    case Strategy::replicate_unconfounded: return 1;
    case Strategy::do_x: return 2;
    case Strategy::do_z0_and_zcnf: return 3;
    case Strategy::do_zcnf: return 4;
    case Strategy::do_z0: return 5;
  }
  throw ValidationError("unknown strategy");
}

std::string simulated_intervention(Strategy s) {
  switch (s) {
    case Strategy::none:
    case Strategy::replicate_unconfounded: return "none";
    case Strategy::do_x: return "do(X)";
    case Strategy::do_z0_and_zcnf: return "do(Z0 + Zcnf)";
    case Strategy::do_zcnf: return "do(Zcnf)";
    case Strategy::do_z0: return "do(Z0)";
  }
  throw ValidationError("unknown strategy");
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg,
                                      const ExperimentHooks& hooks) {
  if (cfg.strategies.empty()) throw ValidationError("experiment needs at least one strategy");
  if (cfg.seeds.empty()) throw ValidationError("experiment needs at least one seed");

  const auto& styles = style_factors(cfg.variant);
  std::vector<RunResult> results;
  for (std::uint64_t seed : cfg.seeds) {
    auto [train_ds, test_ds] =
        generate_dataset({cfg.variant, cfg.r, cfg.n_train, cfg.n_test, seed});
    for (Strategy strategy : cfg.strategies) {
      AugmentConfig ac = cfg.aug;
      ac.seed = seed;

      Dataset pool = train_ds;
      std::vector<std::pair<FactorTuple, FactorTuple>> parents;
      std::vector<Assignment> samples;
      if (strategy == Strategy::do_x) {
        std::vector<Instance> em = do_x_patchmix(train_ds, ac, &parents);
        samples = pool_samples(train_ds, em, &parents, styles);
        for (auto& inst : em) pool.instances.push_back(std::move(inst));
      } else {
        pool = augment(train_ds, strategy, ac);
        std::vector<Instance> none;
        samples = pool_samples(pool, none, nullptr, styles);
      }

      RunResult rr;
      rr.strategy = strategy;
      rr.seed = seed;
      rr.n_pool = pool.instances.size();
      for (const auto& s : styles) {
        rr.pairs.push_back("digit:" + s);
        rr.pooled_cnf.push_back(cnf_empirical(samples, "digit", s));
      }
      samples.clear();
      samples.shrink_to_fit();

      TrainConfig tc = cfg.train;
      tc.seed = seed;
      MlpModel model = train(pool, tc);
      pool.instances.clear();
      pool.instances.shrink_to_fit();

      rr.accuracy = evaluate(model, test_ds).accuracy;
      for (const auto& s : styles) {
        DistTable joint = predicted_joint(model, test_ds, s);
        if (hooks.on_joint) hooks.on_joint(joint);
        rr.invariance.push_back(invariance_decomposition(joint).lhs);
      }
      if (hooks.on_run) hooks.on_run(rr);
      results.push_back(std::move(rr));
    }
  }
  std::stable_sort(results.begin(), results.end(), [](const RunResult& a, const RunResult& b) {
    if (strategy_rank(a.strategy) != strategy_rank(b.strategy))
      return strategy_rank(a.strategy) < strategy_rank(b.strategy);
    return a.seed < b.seed;
  });
  return results;
}

void write_runs_csv(std::ostream& os, const std::vector<RunResult>& runs) {
  os << "# causalaug experiment-runs-v1\n";
  os << "strategy,seed,n_pool,accuracy";
  if (!runs.empty()) {
    for (const auto& p : runs.front().pairs) os << ",cnf:" << p;
    for (const auto& p : runs.front().pairs) os << ",inv:" << p.substr(p.find(':') + 1);
  }
  os << "\n";
  for (const auto& r : runs) {
    os << strategy_name(r.strategy) << "," << r.seed << "," << r.n_pool << ","
       << fmt(r.accuracy, "%.6f");
    for (double v : r.pooled_cnf) os << "," << fmt(v, "%.9f");
    for (double v : r.invariance) os << "," << fmt(v, "%.9f");
    os << "\n";
  }
}

std::vector<SummaryRow> summarize(const std::vector<RunResult>& runs) {
  std::map<int, std::vector<const RunResult*>> groups;
  for (const auto& r : runs) groups[strategy_rank(r.strategy)].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [rank, members] : groups) {
    (void)rank;
    SummaryRow row;
    row.strategy = members.front()->strategy;
    row.n_seeds = members.size();
    row.pairs = members.front()->pairs;

    std::vector<double> accs, pools;
    for (const auto* m : members) {
      accs.push_back(m->accuracy);
      pools.push_back(static_cast<double>(m->n_pool));
    }
    row.acc_mean = mean_of(accs);
    row.acc_sd = sample_sd(accs, row.acc_mean);
    row.n_pool_mean = mean_of(pools);

    for (std::size_t j = 0; j < row.pairs.size(); ++j) {
      std::vector<double> cnfs, invs;
      for (const auto* m : members) {
        cnfs.push_back(m->pooled_cnf[j]);
        invs.push_back(m->invariance[j]);
      }
      row.cnf_mean.push_back(mean_of(cnfs));
      row.cnf_sd.push_back(sample_sd(cnfs, row.cnf_mean.back()));
      row.inv_mean.push_back(mean_of(invs));
      row.inv_sd.push_back(sample_sd(invs, row.inv_mean.back()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "# causalaug experiment-summary-v1\n";
  os << "strategy,n_seeds,n_pool_mean,accuracy_mean,accuracy_sd";
  if (!rows.empty()) {
    for (const auto& p : rows.front().pairs) os << ",cnf:" << p << ":mean,cnf:" << p << ":sd";
    for (const auto& p : rows.front().pairs) {
      const std::string s = p.substr(p.find(':') + 1);
      os << ",inv:" << s << ":mean,inv:" << s << ":sd";
    }
  }
  os << "\n";
  auto cell = [&os](double v, const char* spec) {
    os << ",";
    if (!std::isnan(v)) os << fmt(v, spec);
  };
  for (const auto& r : rows) {
    os << strategy_name(r.strategy) << "," << r.n_seeds << "," << fmt(r.n_pool_mean, "%.1f")
       << "," << fmt(r.acc_mean, "%.6f");
    cell(r.acc_sd, "%.6f");
    for (std::size_t j = 0; j < r.pairs.size(); ++j) {
      os << "," << fmt(r.cnf_mean[j], "%.9f");
      cell(r.cnf_sd[j], "%.9f");
    }
    for (std::size_t j = 0; j < r.pairs.size(); ++j) {
      os << "," << fmt(r.inv_mean[j], "%.9f");
      cell(r.inv_sd[j], "%.9f");
    }
    os << "\n";
  }
}

std::vector<CnfTableRow> cnf_table(Variant v, const std::vector<double>& rs, std::uint64_t n,
                                   const std::vector<std::uint64_t>& seeds) {
  if (rs.empty()) throw ValidationError("cnf_table needs at least one r value");
  if (seeds.empty()) throw ValidationError("cnf_table needs at least one seed");
  if (n == 0) throw ValidationError("cnf_table needs a positive sample count");

  const std::string style = style_factors(v).front();
  std::vector<CnfTableRow> rows;
  for (double r : rs) {
    const Scm scm = build_scm({v, r, 1, 1, 0});
    CnfTableRow row;
    row.r = r;
    row.pair = "digit:" + style;
    row.n = n;
    row.n_seeds = seeds.size();
    row.exact = cnf_exact(scm, "digit", style);
    row.closed_form = gate_cnf_closed_form(r, 10);
    std::vector<double> emps;
    for (std::uint64_t seed : seeds)
      emps.push_back(cnf_empirical(sample(scm, n, seed), "digit", style));
    row.emp_mean = mean_of(emps);
    row.emp_sd = sample_sd(emps, row.emp_mean);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_cnf_table_csv(std::ostream& os, const std::vector<CnfTableRow>& rows) {
  os << "# causalaug cnf-table-v1\n";
  os << "r,pair,n,n_seeds,cnf_empirical_mean,cnf_empirical_sd,cnf_exact,closed_form\n";
  for (const auto& row : rows) {
    os << fmt(row.r, "%.6g") << "," << row.pair << "," << row.n << "," << row.n_seeds << ","
       << fmt(row.emp_mean, "%.9f") << ",";
    if (!std::isnan(row.emp_sd)) os << fmt(row.emp_sd, "%.9f");
    os << "," << fmt(row.exact, "%.9f") << "," << fmt(row.closed_form, "%.9f") << "\n";
  }
}

void write_summary_markdown(std::ostream& os, const std::vector<SummaryRow>& rows,
                            const ExperimentConfig& cfg) {
  os << "## Augmentation comparison: " << variant_name(cfg.variant) << ", r = "
     << fmt(cfg.r, "%.4g") << ", n_train = " << cfg.n_train << ", n_test = " << cfg.n_test
     << ", " << cfg.seeds.size() << (cfg.seeds.size() == 1 ? " seed" : " seeds") << "\n\n";
  os << "Accuracy in percent; information columns in nats. Pooled CNF for the"
        " patch-mix strategy is measured on the provenance multiset.\n\n";

  os << "| Sim. interv. | Strategy | Pool size | Accuracy";
  std::vector<std::string> style_names;
  if (!rows.empty()) {
    for (const auto& p : rows.front().pairs) {
      style_names.push_back(p.substr(p.find(':') + 1));
      os << " | CNF(digit, " << style_names.back() << ")";
    }
    for (const auto& s : style_names) os << " | I(" << s << "; pred \\| digit)";
  }
  os << " |\n";
  os << "|---|---|---|---";
  for (std::size_t j = 0; j < 2 * style_names.size(); ++j) os << "|---";
  os << "|\n";

  for (const auto& r : rows) {
    os << "| " << simulated_intervention(r.strategy) << " | " << strategy_name(r.strategy)
       << " | " << fmt(r.n_pool_mean, "%.0f") << " | "
       << pm_cell(100.0 * r.acc_mean, 100.0 * r.acc_sd, "%.2f");
    for (std::size_t j = 0; j < r.pairs.size(); ++j)
      os << " | " << pm_cell(r.cnf_mean[j], r.cnf_sd[j], "%.4f");
    for (std::size_t j = 0; j < r.pairs.size(); ++j)
      os << " | " << pm_cell(r.inv_mean[j], r.inv_sd[j], "%.4f");
    os << " |\n";
  }
}

}  // namespace causalaug
