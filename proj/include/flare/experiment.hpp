#pragma once
// File-level experiment driver: per-round CSVs, timing sidecars, summary
// documents and result aggregation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "flare/harness.hpp"

namespace flare {

// Deterministic shortest-roundtrip formatting for CSV and summaries.
inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string rounds_csv_header() {
  return "round,test_loss,test_accuracy,theta,conv,anomaly_rate,"
         "w1,w2,w3,trusted,suspicious,untrusted,tp,fp,tn,fn,"
         "median_update_norm,mean_rep_benign,mean_rep_malicious,"
         "mean_soft_weight,sm_drift,stalled";
}

inline std::string rounds_csv_row(const RoundLog& l) {
  std::ostringstream out;
  out << l.round << ',' << format_real(l.test_loss) << ','
      << format_real(l.test_accuracy) << ',' << format_real(l.theta) << ','
      << format_real(l.conv) << ',' << format_real(l.anomaly_rate) << ','
      << format_real(l.weights[0]) << ',' << format_real(l.weights[1]) << ','
      << format_real(l.weights[2]) << ',' << l.trusted << ',' << l.suspicious
      << ',' << l.untrusted << ',' << l.tp << ',' << l.fp << ',' << l.tn
      << ',' << l.fn << ',' << format_real(l.median_update_norm) << ','
      << format_real(l.mean_rep_benign) << ','
      << format_real(l.mean_rep_malicious) << ','
      << format_real(l.mean_soft_weight) << ',' << format_real(l.sm_drift)
      << ',' << l.stalled;
  return out.str();
}

inline std::string rounds_csv_text(const std::vector<RoundLog>& logs) {
  std::ostringstream out;
  out << rounds_csv_header() << '\n';
  for (const RoundLog& l : logs) out << rounds_csv_row(l) << '\n';
  return out.str();
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Run summaries
// ---------------------------------------------------------------------------

struct RunSummary {
  std::uint64_t seed = 0;
  double final_accuracy = 0.0;
  double final_loss = 0.0;
  double final_theta = 0.0;
  int convergence_round = -1;  // -1: never reached
  double robustness_fraction = 0.0;
  double precision = 1.0, recall = 1.0, f1 = 1.0;
  double f1_round_mean = 0.0;
  double ever_precision = 1.0, ever_recall = 1.0, ever_f1 = 1.0;
  int ever_flagged_clients = 0;
  int untrusted_classifications = 0;  // summed over rounds (cohort level)
  int stall_rounds = 0;
  double total_server_time_s = 0.0;
  double mean_round_server_time_s = 0.0;
  double sm_mean_drift = 0.0;
};

inline RunSummary summarize_run(const Simulation& sim,
                                const std::vector<double>* clean_curve,
                                std::uint64_t seed) {
  RunSummary s;
  s.seed = seed;
  const auto& logs = sim.logs();
  if (!logs.empty()) {
    s.final_accuracy = logs.back().test_accuracy;
    s.final_loss = logs.back().test_loss;
    s.final_theta = logs.back().theta;
  }
  const auto curve = sim.accuracy_curve();
  if (auto cr = convergence_round(curve)) s.convergence_round = *cr;
  if (clean_curve) s.robustness_fraction = robustness(curve, *clean_curve);

  const DetectionMetrics final = sim.final_detection();
  s.precision = final.precision;
  s.recall = final.recall;
  s.f1 = final.f1;
  const DetectionMetrics ever = sim.ever_flagged_detection();
  s.ever_precision = ever.precision;
  s.ever_recall = ever.recall;
  s.ever_f1 = ever.f1;
  for (bool b : sim.ever_flagged()) s.ever_flagged_clients += b ? 1 : 0;

  double f1_sum = 0.0, drift_sum = 0.0, time_sum = 0.0;
  for (const RoundLog& l : logs) {
    const DetectionMetrics m =
        metrics_from_counts(ConfusionCounts{l.tp, l.fp, l.tn, l.fn});
    f1_sum += m.f1;
    drift_sum += l.sm_drift;
    time_sum += l.agg_wall_time_s;
    s.untrusted_classifications += l.untrusted;
    s.stall_rounds += l.stalled;
  }
  if (!logs.empty()) {
    s.f1_round_mean = f1_sum / double(logs.size());
    s.sm_mean_drift = drift_sum / double(logs.size());
    s.mean_round_server_time_s = time_sum / double(logs.size());
  }
  s.total_server_time_s = time_sum;
  return s;
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

inline void echo_config(std::ostream& out, const ExperimentConfig& c) {
  out << "[config]\n";
  out << "n_clients = " << c.n_clients << '\n';
  out << "malicious_fraction = " << format_real(c.malicious_fraction) << '\n';
  out << "attack = " << c.attack << '\n';
  out << "aggregator = " << c.aggregator.name() << '\n';
  out << "dirichlet_alpha = " << format_real(c.dirichlet_alpha) << '\n';
  out << "samples_per_client = " << c.samples_per_client << '\n';
  out << "feature_dim = " << c.feature_dim << '\n';
  out << "feature_noise = " << format_real(c.feature_noise) << '\n';
  out << "label_noise = " << format_real(c.label_noise) << '\n';
  out << "test_per_class = " << c.test_per_class << '\n';
  out << "selection = "
      << (c.selection_by_reputation() ? "reputation" : "uniform") << '\n';
  out << "soft_exclusion = " << (c.soft_exclusion ? "on" : "off") << '\n';
  out << "gradient_clipping = " << (c.gradient_clipping ? "on" : "off")
      << '\n';
  out << "repetitions = " << c.repetitions << '\n';
  out << "alpha = " << format_real(c.hp.alpha) << '\n';
  out << "beta = " << format_real(c.hp.beta) << '\n';
  out << "tau_d = " << format_real(c.hp.tau_d) << '\n';
  out << "lambda = " << format_real(c.hp.lambda) << '\n';
  out << "gamma = " << format_real(c.hp.gamma) << '\n';
  out << "delta = " << format_real(c.hp.delta) << '\n';
  out << "theta_base = " << format_real(c.hp.theta_base) << '\n';
  out << "rho_up = " << format_real(c.hp.rho_up) << '\n';
  out << "rho_down = " << format_real(c.hp.rho_down) << '\n';
  out << "alpha_cov = " << format_real(c.hp.alpha_cov) << '\n';
  out << "tau_conv = " << format_real(c.hp.tau_conv) << '\n';
  out << "theta_min = " << format_real(c.hp.theta_min) << '\n';
  out << "theta_max = " << format_real(c.hp.theta_max) << '\n';
  out << "sigma_ldp = " << format_real(c.hp.sigma_ldp) << '\n';
  out << "c_ldp = " << format_real(c.hp.c_ldp) << '\n';
  out << "rounds = " << c.hp.rounds << '\n';
  out << "cohort_size = " << c.hp.cohort_size << '\n';
  out << "local_epochs = " << c.hp.local_epochs << '\n';
  out << "learning_rate = " << format_real(c.hp.learning_rate) << '\n';
  out << "batch_size = " << c.hp.batch_size << '\n';
  out << "seed = " << c.hp.seed << '\n';
  out << "byzantine_variance = " << format_real(c.byzantine_variance) << '\n';
  out << "scaling_lambda = " << format_real(c.scaling_lambda) << '\n';
  out << "adaptive_prob = " << format_real(c.adaptive_prob) << '\n';
  out << "alie_z = " << format_real(c.alie_z) << '\n';
  out << "sm_alpha = " << format_real(c.sm_alpha) << '\n';
  out << "sm_total_bias = " << format_real(c.sm_total_bias) << '\n';
  out << "sm_horizon = " << c.sm_horizon << '\n';
}

inline void write_summary_section(std::ostream& out, const RunSummary& s) {
  out << "seed = " << s.seed << '\n';
  out << "final_accuracy = " << format_real(s.final_accuracy) << '\n';
  out << "final_loss = " << format_real(s.final_loss) << '\n';
  out << "final_theta = " << format_real(s.final_theta) << '\n';
  out << "convergence_round = " << s.convergence_round << '\n';
  out << "robustness_fraction = " << format_real(s.robustness_fraction)
      << '\n';
  out << "detection_precision = " << format_real(s.precision) << '\n';
  out << "detection_recall = " << format_real(s.recall) << '\n';
  out << "detection_f1 = " << format_real(s.f1) << '\n';
  out << "detection_f1_round_mean = " << format_real(s.f1_round_mean) << '\n';
  out << "ever_flagged_precision = " << format_real(s.ever_precision) << '\n';
  out << "ever_flagged_recall = " << format_real(s.ever_recall) << '\n';
  out << "ever_flagged_f1 = " << format_real(s.ever_f1) << '\n';
  out << "ever_flagged_clients = " << s.ever_flagged_clients << '\n';
  out << "untrusted_classifications = " << s.untrusted_classifications
      << '\n';
  out << "stall_rounds = " << s.stall_rounds << '\n';
  out << "total_agg_wall_time_s = " << format_real(s.total_server_time_s)
      << '\n';
  out << "mean_round_agg_wall_time_s = "
      << format_real(s.mean_round_server_time_s) << '\n';
  out << "sm_mean_drift_per_round = " << format_real(s.sm_mean_drift) << '\n';
}

struct ExperimentOutput {
  std::vector<RunSummary> repetitions;
};

// Runs all repetitions (seeds master, master+1, ...), writes one rounds CSV
// per repetition, a timing sidecar, and a pooled summary document. When the
// run is attacked, a paired clean run with the same seed provides the
// robustness reference.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg,
                                       bool quiet = false) {
  namespace fs = std::filesystem;
  cfg.check();
  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  const fs::path summary_path = dir / "summary.txt";
  if (fs::exists(summary_path) && !cfg.force)
    throw IoError("refusing to overwrite existing run: " +
                  summary_path.string() + " (pass --force)");

  ExperimentOutput out;
  const bool attacked =
      cfg.malicious_fraction > 0.0 && cfg.attack != "none";
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed = cfg.hp.seed + std::uint64_t(rep);
    ExperimentConfig run_cfg = cfg;
    run_cfg.hp.seed = seed;
    Simulation sim(run_cfg, seed);
    sim.run_all();

    std::vector<double> clean_curve;
    if (attacked) {
      ExperimentConfig clean = run_cfg;
      clean.malicious_fraction = 0.0;
      clean.attack = "none";
      Simulation ref(clean, seed);
      ref.run_all();
      clean_curve = ref.accuracy_curve();
    }
    const RunSummary s = summarize_run(
        sim, attacked ? &clean_curve : nullptr, seed);
    out.repetitions.push_back(s);

    write_text_file(dir / ("rounds_rep" + std::to_string(rep) + ".csv"),
                    rounds_csv_text(sim.logs()));
    std::ostringstream tm;
    tm << "# per-round server wall time (seconds); not deterministic\n";
    for (const RoundLog& l : sim.logs())
      tm << l.round << ' ' << format_real(l.agg_wall_time_s) << '\n';
    write_text_file(dir / ("timings_rep" + std::to_string(rep) + ".txt"),
                    tm.str());
    if (!quiet)
      std::cout << "rep " << rep << " seed " << seed << " final_accuracy "
                << format_real(s.final_accuracy) << " f1 "
                << format_real(s.f1) << '\n';
  }

  std::ostringstream sum;
  echo_config(sum, cfg);
  for (size_t rep = 0; rep < out.repetitions.size(); ++rep) {
    sum << "\n[rep " << rep << "]\n";
    write_summary_section(sum, out.repetitions[rep]);
  }
  if (out.repetitions.size() > 1) {
    auto stat = [&](auto getter) {
      double mean = 0.0;
      for (const RunSummary& s : out.repetitions) mean += getter(s);
      mean /= double(out.repetitions.size());
      double var = 0.0;
      for (const RunSummary& s : out.repetitions) {
        const double d = getter(s) - mean;
        var += d * d;
      }
      var /= double(out.repetitions.size());
      return std::pair<double, double>(mean, std::sqrt(var));
    };
    sum << "\n[pooled]\n";
    auto line = [&](const char* name, auto getter) {
      const auto [mean, sd] = stat(getter);
      sum << name << " = " << format_real(mean) << " +- " << format_real(sd)
          << '\n';
    };
    line("final_accuracy", [](const RunSummary& s) { return s.final_accuracy; });
    line("final_loss", [](const RunSummary& s) { return s.final_loss; });
    line("robustness_fraction",
         [](const RunSummary& s) { return s.robustness_fraction; });
    line("detection_f1", [](const RunSummary& s) { return s.f1; });
    line("convergence_round", [](const RunSummary& s) {
      return double(s.convergence_round);
    });
    line("total_agg_wall_time_s",
         [](const RunSummary& s) { return s.total_server_time_s; });
    line("sm_mean_drift_per_round",
         [](const RunSummary& s) { return s.sm_mean_drift; });
  }
  write_text_file(summary_path, sum.str());
  return out;
}

// ---------------------------------------------------------------------------
// Report: aggregate summary documents under a directory into one table
// ---------------------------------------------------------------------------

inline std::string report_runs(const std::string& root) {
  namespace fs = std::filesystem;
  if (!fs::exists(root)) throw IoError("no such directory: " + root);
  std::ostringstream out;
  out << "run,attack,aggregator,malicious_fraction,final_accuracy,"
         "detection_f1,convergence_round,robustness_fraction\n";
  std::vector<fs::path> summaries;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "summary.txt")
      summaries.push_back(entry.path());
  std::sort(summaries.begin(), summaries.end());
  for (const fs::path& p : summaries) {
    std::ifstream in(p);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      // First occurrence wins for config keys; result keys keep the last
      // (pooled) occurrence.
      kv[key] = line.substr(eq + 3);
    }
    auto get = [&](const std::string& k) {
      auto it = kv.find(k);
      return it == kv.end() ? std::string("-") : it->second;
    };
    std::string mean_only = get("final_accuracy");
    if (auto sp = mean_only.find(' '); sp != std::string::npos)
      mean_only = mean_only.substr(0, sp);
    std::string f1 = get("detection_f1");
    if (auto sp = f1.find(' '); sp != std::string::npos) f1 = f1.substr(0, sp);
    std::string conv = get("convergence_round");
    if (auto sp = conv.find(' '); sp != std::string::npos)
      conv = conv.substr(0, sp);
    std::string rob = get("robustness_fraction");
    if (auto sp = rob.find(' '); sp != std::string::npos)
      rob = rob.substr(0, sp);
    out << p.parent_path().generic_string() << ',' << get("attack") << ','
        << get("aggregator") << ',' << get("malicious_fraction") << ','
        << mean_only << ',' << f1 << ',' << conv << ',' << rob << '\n';
  }
  return out.str();
}

}  // namespace flare
