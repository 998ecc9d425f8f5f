// Command-line front end: dataset generation, the correlation sweep, the
// augmentation-comparison experiment, and the property suite. Exit codes:
// 0 success, 2 validation error, 3 property failure, 4 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "causalaug/dataset_io.hpp"
#include "causalaug/error.hpp"
#include "causalaug/experiment.hpp"
#include "causalaug/props.hpp"

namespace {

using causalaug::IoError;
using causalaug::ValidationError;
using json = nlohmann::json;

// JSON flavor of a CLI11 config file: top-level keys are global options,
// one nested object per subcommand.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    input >> j;
    return walk(j, "", {});
  }

 private:
  static std::vector<CLI::ConfigItem> walk(const json& j, const std::string& name,
                                           std::vector<std::string> parents) {
    std::vector<CLI::ConfigItem> out;
    if (j.is_object()) {
      if (!name.empty()) parents.push_back(name);
      for (auto it = j.begin(); it != j.end(); ++it) {
        auto sub = walk(it.value(), it.key(), parents);
        out.insert(out.end(), sub.begin(), sub.end());
      }
    } else if (!name.empty()) {
      out.emplace_back();
      CLI::ConfigItem& item = out.back();
      item.name = name;
      item.parents = std::move(parents);
      if (j.is_array())
        for (const auto& e : j)
          item.inputs.push_back(e.is_string() ? e.get<std::string>() : e.dump());
      else if (j.is_string())
        item.inputs = {j.get<std::string>()};
      else
        item.inputs = {j.dump()};
    } else {
      throw ValidationError("config file must be a JSON object");
    }
    return out;
  }
};

std::string quote_command(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) out += ' ';
    out += argv[i];
  }
  return out;
}

// Relative output paths resolve under $CAUSALAUG_OUT when it is set.
std::filesystem::path resolve_out(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("CAUSALAUG_OUT")) return std::filesystem::path(root) / p;
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("short write to " + path.string());
}

void write_run_manifest(const std::filesystem::path& path, const std::string& format,
                        const std::string& command, const std::vector<std::uint64_t>& seeds,
                        const std::vector<std::string>& outputs) {
  json m;
  m["format"] = format;
  m["command"] = command;
  m["seeds"] = seeds;
  m["outputs"] = outputs;
  write_text(path, m.dump(2) + "\n");
}

struct GenArgs {
  std::string variant = "cm";
  double r = 0.95;
  int n_train = 60000;
  int n_test = 10000;
  std::uint64_t seed = 0;
  std::string out;
};

void run_gen(const GenArgs& a, const std::string& command) {
  const auto dir = resolve_out(a.out);
  const causalaug::DatasetSpec spec{causalaug::variant_from_name(a.variant), a.r, a.n_train,
                                    a.n_test, a.seed};
  auto [train, test] = causalaug::generate_dataset(spec);
  causalaug::write_dataset((dir / "train").string(), train, command);
  causalaug::write_dataset((dir / "test").string(), test, command);
  std::cout << "train " << causalaug::file_digest_hex((dir / "train" / "data.bin").string())
            << "\n";
  std::cout << "test " << causalaug::file_digest_hex((dir / "test" / "data.bin").string())
            << "\n";
}

struct CnfTableArgs {
  std::string variant = "cm";
  std::vector<double> rs{0.10, 0.20, 0.50, 0.90, 0.95};
  std::uint64_t n = 60000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out = "cnf_table.csv";
};

void run_cnf_table(const CnfTableArgs& a, const std::string& command) {
  const auto rows = causalaug::cnf_table(causalaug::variant_from_name(a.variant), a.rs, a.n,
                                         a.seeds);
  std::ostringstream os;
  causalaug::write_cnf_table_csv(os, rows);
  const auto path = resolve_out(a.out);
  write_text(path, os.str());
  write_run_manifest(path.string() + ".manifest.json", "cnf-table-v1", command, a.seeds,
                     {path.filename().string()});
  std::cout << os.str();
}

struct ExperimentArgs {
  std::string variant = "dcm";
  double r = 0.95;
  std::vector<std::string> strategies{"none", "replicate_unconfounded", "do_x",
                                      "do_z0_and_zcnf", "do_zcnf", "do_z0"};
  double tau = 0.05;
  int per_instance = 1;
  std::int64_t alpha = -1;
  int n_train = 60000;
  int n_test = 10000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int epochs = 30;
  int batch = 128;
  double lr = 0.05;
  std::string out = "experiment";
};

void run_exp(const ExperimentArgs& a, const std::string& command) {
  causalaug::ExperimentConfig cfg;
  cfg.variant = causalaug::variant_from_name(a.variant);
  cfg.r = a.r;
  cfg.n_train = a.n_train;
  cfg.n_test = a.n_test;
  for (const auto& s : a.strategies) cfg.strategies.push_back(causalaug::strategy_from_name(s));
  cfg.seeds = a.seeds;
  cfg.aug.tau = a.tau;
  cfg.aug.per_instance = a.per_instance;
  cfg.aug.alpha_cap = a.alpha;
  cfg.train.epochs = a.epochs;
  cfg.train.batch = a.batch;
  cfg.train.lr = a.lr;

  causalaug::ExperimentHooks hooks;
  hooks.on_run = [](const causalaug::RunResult& rr) {
    std::cerr << "run strategy=" << causalaug::strategy_name(rr.strategy) << " seed=" << rr.seed
              << " pool=" << rr.n_pool << " accuracy=" << rr.accuracy << "\n";
  };
  const auto runs = causalaug::run_experiment(cfg, hooks);
  const auto summary = causalaug::summarize(runs);

  const auto stem = resolve_out(a.out);
  std::ostringstream runs_os, sum_os, md_os;
  causalaug::write_runs_csv(runs_os, runs);
  causalaug::write_summary_csv(sum_os, summary);
  causalaug::write_summary_markdown(md_os, summary, cfg);
  write_text(stem.string() + "_runs.csv", runs_os.str());
  write_text(stem.string() + "_summary.csv", sum_os.str());
  write_text(stem.string() + "_summary.md", md_os.str());
  write_run_manifest(stem.string() + ".manifest.json", "experiment-v1", command, a.seeds,
                     {stem.filename().string() + "_runs.csv",
                      stem.filename().string() + "_summary.csv",
                      stem.filename().string() + "_summary.md"});
  std::cout << md_os.str();
}

struct PropsArgs {
  std::uint64_t seed = 0;
  std::uint64_t trials = 100;
  bool negative_control = false;
};

int run_props_cmd(const PropsArgs& a) {
  const causalaug::PropsReport rep =
      causalaug::run_props(a.seed, a.trials, a.negative_control);
  causalaug::write_props_report(std::cout, rep);
  return rep.all_pass() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Confounded digit datasets, interventional augmentation, and the"
      " accompanying measurements. Relative output paths resolve under"
      " $CAUSALAUG_OUT when set."};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON config file mirroring the flags");
  app.config_formatter(std::make_shared<JsonConfig>());
  // Inherited by the subcommands added below: unmatched options fall through
  // to the top level, so --config may follow the subcommand name.
  app.fallthrough();

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen", "Generate a dataset directory (train/ and test/)");
  cmd_gen->add_option("--variant", gen.variant, "cm, dcm, or wlm")->capture_default_str();
  cmd_gen->add_option("--r", gen.r, "Style correlation in [0, 1]")->capture_default_str();
  cmd_gen->add_option("--n-train", gen.n_train, "Training instances")->capture_default_str();
  cmd_gen->add_option("--n-test", gen.n_test, "Test instances")->capture_default_str();
  cmd_gen->add_option("--seed", gen.seed, "Generation seed")->capture_default_str();
  cmd_gen->add_option("--out", gen.out, "Output directory")->required();

  CnfTableArgs cnf;
  auto* cmd_cnf = app.add_subcommand(
      "cnf-table",
      "Sweep r and tabulate plug-in, exact, and closed-form confounding."
      " CSV columns: r, pair, n, n_seeds, cnf_empirical_mean,"
      " cnf_empirical_sd, cnf_exact, closed_form.");
  cmd_cnf->add_option("--variant", cnf.variant, "cm, dcm, or wlm")->capture_default_str();
  cmd_cnf->add_option("--r", cnf.rs, "r values (repeatable or comma-separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd_cnf->add_option("--n", cnf.n, "Samples per seed")->capture_default_str();
  cmd_cnf->add_option("--seeds", cnf.seeds, "Sampling seeds (repeatable or comma-separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd_cnf->add_option("--out", cnf.out, "Output CSV path")->capture_default_str();

  ExperimentArgs exp;
  auto* cmd_exp = app.add_subcommand(
      "experiment",
      "Train one classifier per (strategy, seed) and tabulate accuracy,"
      " pooled CNF, and the prediction invariance. Emits <out>_runs.csv"
      " (strategy, seed, n_pool, accuracy, cnf:<pair>..., inv:<style>...),"
      " <out>_summary.csv (mean and sd per strategy), and <out>_summary.md.");
  cmd_exp->add_option("--variant", exp.variant, "cm, dcm, or wlm")->capture_default_str();
  cmd_exp->add_option("--r", exp.r, "Style correlation in [0, 1]")->capture_default_str();
  cmd_exp->add_option("--strategies", exp.strategies,
                      "Strategies: none, replicate_unconfounded, do_x, do_z0_and_zcnf,"
                      " do_zcnf, do_z0 (repeatable or comma-separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd_exp->add_option("--tau", exp.tau, "Confounded-cell mass threshold")->capture_default_str();
  cmd_exp->add_option("--per-instance", exp.per_instance, "Counterfactual draws per trigger")
      ->capture_default_str();
  cmd_exp->add_option("--alpha", exp.alpha, "Emission cap, -1 for unlimited")
      ->capture_default_str();
  cmd_exp->add_option("--n-train", exp.n_train, "Training instances")->capture_default_str();
  cmd_exp->add_option("--n-test", exp.n_test, "Test instances")->capture_default_str();
  cmd_exp->add_option("--seeds", exp.seeds, "Run seeds (repeatable or comma-separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd_exp->add_option("--epochs", exp.epochs, "Training epochs")->capture_default_str();
  cmd_exp->add_option("--batch", exp.batch, "Batch size")->capture_default_str();
  cmd_exp->add_option("--lr", exp.lr, "Initial learning rate")->capture_default_str();
  cmd_exp->add_option("--out", exp.out, "Output path stem")->capture_default_str();

  PropsArgs props;
  auto* cmd_props = app.add_subcommand(
      "props", "Run the property suite; exits 3 when any property fails");
  cmd_props->add_option("--seed", props.seed, "Suite seed")->capture_default_str();
  cmd_props->add_option("--trials", props.trials, "Random models per property")
      ->capture_default_str();
  cmd_props->add_flag("--negative-control", props.negative_control,
                      "Inject an out-of-class SCM that must fail the do-invariance check");

  const std::string command = quote_command(argc, argv);
  int exit_code = 0;
  cmd_gen->callback([&] { run_gen(gen, command); });
  cmd_cnf->callback([&] { run_cnf_table(cnf, command); });
  cmd_exp->callback([&] { run_exp(exp, command); });
  cmd_props->callback([&] { exit_code = run_props_cmd(props); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const causalaug::PropertyError& e) {
    std::cerr << "property failure: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
