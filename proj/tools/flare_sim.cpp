// Command-line driver: single runs, parameter sweeps and report tables.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flare/experiment.hpp"

namespace {

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct CommonFlags {
  std::string config_path;
  std::string output;
  std::string attack;
  std::string aggregator;
  std::string seed;
  std::string rounds;
  std::string malicious_fraction;
  std::string dirichlet_alpha;
  std::string repetitions;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "experiment config file");
  cmd->add_option("--output", f.output, "output directory");
  cmd->add_option("--attack", f.attack,
                  "none|labelflip|byzantine|scaling|adaptive|alie|sm|all");
  cmd->add_option("--aggregator", f.aggregator,
                  "flare|fedavg|krum|trimmed");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--rounds", f.rounds, "training rounds");
  cmd->add_option("--malicious-fraction", f.malicious_fraction,
                  "fraction of malicious clients (< 0.5)");
  cmd->add_option("--dirichlet-alpha", f.dirichlet_alpha,
                  "heterogeneity concentration");
  cmd->add_option("--repetitions", f.repetitions, "independent repetitions");
  cmd->add_flag("--force", f.force, "overwrite an existing output directory");
}

flare::KvConfig load_kv(const CommonFlags& f) {
  flare::KvConfig kv;
  if (!f.config_path.empty())
    kv = flare::KvConfig::parse_file(f.config_path);
  if (!f.output.empty()) kv.set("experiment.output", f.output);
  if (!f.attack.empty()) kv.set("experiment.attack", f.attack);
  if (!f.aggregator.empty()) kv.set("experiment.aggregator", f.aggregator);
  if (!f.seed.empty()) kv.set("training.seed", f.seed);
  if (!f.rounds.empty()) kv.set("training.rounds", f.rounds);
  if (!f.malicious_fraction.empty())
    kv.set("experiment.malicious_fraction", f.malicious_fraction);
  if (!f.dirichlet_alpha.empty())
    kv.set("experiment.dirichlet_alpha", f.dirichlet_alpha);
  if (!f.repetitions.empty()) kv.set("experiment.repetitions", f.repetitions);
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FLARE federated-learning robustness simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_common(run, run_flags);

  CommonFlags sweep_flags;
  std::string sweep_fractions = "0.05,0.1,0.2,0.3";
  std::string sweep_attacks = "byzantine";
  CLI::App* sweep =
      app.add_subcommand("sweep", "Cartesian product of fractions x attacks");
  add_common(sweep, sweep_flags);
  sweep->add_option("--fractions", sweep_fractions,
                    "comma-separated malicious fractions");
  sweep->add_option("--attacks", sweep_attacks,
                    "comma-separated attack names");

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "aggregate run summaries");
  report->add_option("dir", report_dir, "directory of runs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      flare::ExperimentConfig cfg =
          flare::ExperimentConfig::from_kv(load_kv(run_flags));
      cfg.force = run_flags.force;
      flare::run_experiment(cfg);
    } else if (sweep->parsed()) {
      const auto fractions = split_list(sweep_fractions);
      const auto attacks = split_list(sweep_attacks);
      if (fractions.empty() || attacks.empty())
        throw flare::ConfigError("sweep needs fractions and attacks");
      flare::KvConfig base = load_kv(sweep_flags);
      const std::string root = base.get_string("experiment.output", "out");
      for (const std::string& attack : attacks) {
        for (const std::string& fraction : fractions) {
          flare::KvConfig kv = base;
          kv.set("experiment.attack", attack);
          kv.set("experiment.malicious_fraction", fraction);
          kv.set("experiment.output",
                 root + "/" + attack + "_f" + fraction);
          flare::ExperimentConfig cfg = flare::ExperimentConfig::from_kv(kv);
          cfg.force = sweep_flags.force;
          std::cout << "== " << attack << " @ " << fraction << '\n';
          flare::run_experiment(cfg);
        }
      }
    } else if (report->parsed()) {
      std::cout << flare::report_runs(report_dir);
    }
  } catch (const flare::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
