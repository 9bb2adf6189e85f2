#pragma once
// Orchestration of the full round loop (reputation scoring, adaptive
// threshold, soft-exclusion aggregation) and of the baseline loops.

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "flare/adversary.hpp"
#include "flare/aggregation.hpp"
#include "flare/assessment.hpp"
#include "flare/config.hpp"
#include "flare/core.hpp"
#include "flare/metrics.hpp"
#include "flare/reputation.hpp"
#include "flare/simenv.hpp"

namespace flare {

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  HyperParams hp;
  int n_clients = 100;
  double malicious_fraction = 0.0;
  std::string attack = "none";  // none|labelflip|byzantine|scaling|adaptive|alie|sm|all
  AggregatorKind aggregator;
  double dirichlet_alpha = 0.5;
  int samples_per_client = 60;
  int feature_dim = 20;
  double feature_noise = 1.0;
  double label_noise = 0.0;
  int test_per_class = 200;
  std::string selection;  // empty = reputation for flare, uniform otherwise
  bool soft_exclusion = true;
  bool gradient_clipping = true;   // server-side median-norm clipping
  double pin_reputation = -1.0;    // >= 0: override every composite (debug)
  std::string output_dir = "out";
  int repetitions = 1;
  bool force = false;

  double byzantine_variance = 1.0;
  double scaling_lambda = 5.0;
  double adaptive_prob = 0.3;
  double alie_z = 2.0;
  double sm_alpha = 0.3;
  double sm_total_bias = 1.0;
  int sm_horizon = 0;  // 0: use the round count

  bool selection_by_reputation() const {
    if (selection == "reputation") return true;
    if (selection == "uniform") return false;
    return aggregator.type == AggregatorKind::Type::Flare;
  }

  void check() const {
    hp.check();
    if (n_clients < 1) throw ConfigError("n_clients must be >= 1");
    if (!(malicious_fraction >= 0.0 && malicious_fraction < 0.5))
      throw ConfigError("malicious_fraction must be in [0, 0.5)");
    if (hp.cohort_size > n_clients)
      throw ConfigError("cohort_size must not exceed n_clients");
    if (!(dirichlet_alpha > 0.0))
      throw ConfigError("dirichlet_alpha must be > 0");
    if (samples_per_client < 1)
      throw ConfigError("samples_per_client must be >= 1");
    if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (!(label_noise >= 0.0 && label_noise < 1.0))
      throw ConfigError("label_noise must be in [0, 1)");
    if (!selection.empty() && selection != "uniform" &&
        selection != "reputation")
      throw ConfigError("selection must be uniform or reputation");
    static const char* names[] = {"none",     "labelflip", "byzantine",
                                  "scaling",  "adaptive",  "alie",
                                  "sm",       "all"};
    bool ok = false;
    for (const char* n : names) ok = ok || attack == n;
    if (!ok) throw ConfigError("unknown attack: " + attack);
  }

  static ExperimentConfig from_kv(const KvConfig& cfg) {
    for (const auto& [key, _] : cfg.entries()) {
      if (!known_key(key)) throw ConfigError("unknown config key: " + key);
    }
    ExperimentConfig ec;
    ec.hp = validate_config(cfg);
    ec.n_clients = int(cfg.get_int("experiment.n_clients", ec.n_clients));
    ec.malicious_fraction =
        cfg.get_real("experiment.malicious_fraction", ec.malicious_fraction);
    ec.attack = cfg.get_string("experiment.attack", ec.attack);
    ec.aggregator = AggregatorKind::parse(
        cfg.get_string("experiment.aggregator", "flare"));
    ec.aggregator.krum_f = int(cfg.get_int("attack_params.krum_f", -1));
    ec.aggregator.trim_fraction =
        cfg.get_real("attack_params.trim_fraction", 0.2);
    ec.dirichlet_alpha =
        cfg.get_real("experiment.dirichlet_alpha", ec.dirichlet_alpha);
    ec.samples_per_client = int(
        cfg.get_int("experiment.samples_per_client", ec.samples_per_client));
    ec.feature_dim =
        int(cfg.get_int("experiment.feature_dim", ec.feature_dim));
    ec.feature_noise =
        cfg.get_real("experiment.feature_noise", ec.feature_noise);
    ec.label_noise = cfg.get_real("experiment.label_noise", ec.label_noise);
    ec.test_per_class =
        int(cfg.get_int("experiment.test_per_class", ec.test_per_class));
    ec.selection = cfg.get_string("experiment.selection", ec.selection);
    ec.soft_exclusion =
        cfg.get_bool("experiment.soft_exclusion", ec.soft_exclusion);
    ec.gradient_clipping =
        cfg.get_bool("experiment.gradient_clipping", ec.gradient_clipping);
    ec.pin_reputation =
        cfg.get_real("experiment.pin_reputation", ec.pin_reputation);
    ec.output_dir = cfg.get_string("experiment.output", ec.output_dir);
    ec.repetitions =
        int(cfg.get_int("experiment.repetitions", ec.repetitions));
    ec.byzantine_variance = cfg.get_real("attack_params.byzantine_variance",
                                         ec.byzantine_variance);
    ec.scaling_lambda =
        cfg.get_real("attack_params.scaling_lambda", ec.scaling_lambda);
    ec.adaptive_prob =
        cfg.get_real("attack_params.adaptive_prob", ec.adaptive_prob);
    ec.alie_z = cfg.get_real("attack_params.alie_z", ec.alie_z);
    ec.sm_alpha = cfg.get_real("attack_params.sm_alpha", ec.sm_alpha);
    ec.sm_total_bias =
        cfg.get_real("attack_params.sm_total_bias", ec.sm_total_bias);
    ec.sm_horizon = int(cfg.get_int("attack_params.sm_horizon", ec.sm_horizon));
    ec.check();
    return ec;
  }

 private:
  static bool known_key(const std::string& key) {
    if (hyperparam_keys().count(key)) return true;
    static const std::set<std::string> keys = {
        "experiment.n_clients",      "experiment.malicious_fraction",
        "experiment.attack",         "experiment.aggregator",
        "experiment.dirichlet_alpha","experiment.samples_per_client",
        "experiment.feature_dim",    "experiment.feature_noise",
        "experiment.label_noise",    "experiment.test_per_class",
        "experiment.selection",      "experiment.soft_exclusion",
        "experiment.gradient_clipping", "experiment.pin_reputation",
        "experiment.output",         "experiment.repetitions",
        "attack_params.byzantine_variance", "attack_params.scaling_lambda",
        "attack_params.adaptive_prob",      "attack_params.alie_z",
        "attack_params.sm_alpha",           "attack_params.sm_total_bias",
        "attack_params.sm_horizon",         "attack_params.krum_f",
        "attack_params.trim_fraction",
    };
    return keys.count(key) > 0;
  }
};

// ---------------------------------------------------------------------------
// Per-round log row
// ---------------------------------------------------------------------------

struct RoundLog {
  int round = 0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  double theta = 0.0;
  double conv = 0.0;
  double anomaly_rate = 0.0;
  std::array<double, 3> weights{0.0, 0.0, 0.0};
  int trusted = 0, suspicious = 0, untrusted = 0;
  int tp = 0, fp = 0, tn = 0, fn = 0;
  double median_update_norm = 0.0;
  double mean_rep_benign = 0.0;
  double mean_rep_malicious = 0.0;
  double mean_soft_weight = 0.0;  // §III-C graded weight, analysis only
  double sm_drift = 0.0;          // model displacement along the SM direction
  int stalled = 0;
  // Measured server time; reported in the summary, never in rounds.csv.
  double agg_wall_time_s = 0.0;
};

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

class Simulation {
 public:
  Simulation(ExperimentConfig cfg, std::uint64_t seed)
      : cfg_(std::move(cfg)), rng_(seed) {
    cfg_.check();
    task_ = generate_federation(cfg_.n_clients, cfg_.samples_per_client,
                                cfg_.dirichlet_alpha, cfg_.feature_dim, rng_,
                                cfg_.feature_noise, cfg_.label_noise,
                                cfg_.test_per_class);
    model_.assign(task_.model_dim(), 0.0);
    prev_model_ = model_;
    threshold_.theta = cfg_.hp.theta_base;

    attack_direction_ = unit_direction(task_.ref_model);
    setup_clients();
  }

  RoundLog run_round(int t) {
    RoundLog log = cfg_.aggregator.type == AggregatorKind::Type::Flare
                       ? run_flare_round(t)
                       : run_baseline_round(t);
    assert_reputation_bounds();
    logs_.push_back(log);
    return log;
  }

  std::vector<RoundLog> run_all() {
    for (int t = 1; t <= cfg_.hp.rounds; ++t) run_round(t);
    return logs_;
  }

  const ExperimentConfig& config() const { return cfg_; }
  const std::vector<ClientState>& clients() const { return clients_; }
  const Vec& model() const { return model_; }
  double theta() const { return threshold_.theta; }
  const SyntheticTask& task() const { return task_; }
  const Vec& attack_direction() const { return attack_direction_; }
  const std::vector<RoundLog>& logs() const { return logs_; }
  const std::vector<bool>& ever_flagged() const { return ever_flagged_; }
  bool has_malicious() const { return n_malicious_ > 0; }

  double total_server_time() const {
    double s = 0.0;
    for (const RoundLog& l : logs_) s += l.agg_wall_time_s;
    return s;
  }

  std::vector<double> accuracy_curve() const {
    std::vector<double> out;
    out.reserve(logs_.size());
    for (const RoundLog& l : logs_) out.push_back(l.test_accuracy);
    return out;
  }

  DetectionMetrics final_detection() const {
    return detection_metrics(clients_, threshold_.theta);
  }

  DetectionMetrics ever_flagged_detection() const {
    ConfusionCounts c;
    for (size_t i = 0; i < clients_.size(); ++i) {
      const bool predicted = ever_flagged_[i];
      const bool truly = clients_[i].role != Role::Benign;
      if (predicted && truly) ++c.tp;
      else if (predicted && !truly) ++c.fp;
      else if (!predicted && truly) ++c.fn;
      else ++c.tn;
    }
    return metrics_from_counts(c);
  }

 private:
  static Vec unit_direction(const Vec& v) {
    if (v.empty() || l2_norm(v) == 0.0) return Vec{};
    return scaled(v, -1.0 / l2_norm(v));
  }

  void setup_clients() {
    const int n = cfg_.n_clients;
    n_malicious_ = int(std::lround(cfg_.malicious_fraction * n));
    if (cfg_.attack == "none") n_malicious_ = 0;

    // Malicious roles go to a prefix of a seed-derived permutation, so the
    // malicious sets at increasing fractions are nested for a fixed seed.
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    {
      auto g = rng_.derive("roles");
      std::shuffle(perm.begin(), perm.end(), g);
    }
    static const Role kAllRoles[] = {Role::LabelFlip, Role::ByzantineGradient,
                                     Role::GradientScaling, Role::Adaptive,
                                     Role::Alie, Role::Sm};
    clients_.assign(n, ClientState{});
    response_mu_.assign(n, 0.0);
    ever_flagged_.assign(n, false);
    for (int i = 0; i < n; ++i) {
      clients_[i].id = i;
      clients_[i].n_samples = task_.clients[i].n;
      auto g = rng_.derive("response_mu", std::uint64_t(i));
      std::normal_distribution<double> unit(0.0, 1.0);
      response_mu_[i] = std::log(20.0) + 0.3 * unit(g);
    }
    for (int m = 0; m < n_malicious_; ++m) {
      Role r;
      if (cfg_.attack == "all") r = kAllRoles[m % 6];
      else r = role_from_name(cfg_.attack);
      clients_[perm[m]].role = r;
    }

    const int horizon = cfg_.sm_horizon > 0 ? cfg_.sm_horizon : cfg_.hp.rounds;
    for (Role r : {Role::LabelFlip, Role::ByzantineGradient,
                   Role::GradientScaling, Role::Adaptive, Role::Alie,
                   Role::Sm}) {
      AttackSpec spec;
      spec.kind = r;
      spec.variance = cfg_.byzantine_variance;
      spec.scale_lambda = r == Role::Adaptive ? 5.0 : cfg_.scaling_lambda;
      spec.attack_prob = cfg_.adaptive_prob;
      spec.alie_z = cfg_.alie_z;
      spec.mix_alpha = cfg_.sm_alpha;
      spec.total_bias = cfg_.sm_total_bias;
      spec.horizon = horizon;
      spec.direction = attack_direction_.empty()
                           ? Vec(task_.model_dim(), 0.0)
                           : attack_direction_;
      specs_[size_t(r)] = spec;
    }
  }

  const AttackSpec& spec_for(Role r) const { return specs_[size_t(r)]; }

  std::vector<int> pick_cohort(int t) {
    auto g = rng_.derive("cohort", 0, std::uint64_t(t));
    std::vector<double> w(clients_.size(), 1.0);
    if (cfg_.selection_by_reputation()) {
      for (size_t i = 0; i < clients_.size(); ++i)
        w[i] = std::max(clients_[i].reputation, 0.05);
    }
    return select_cohort_weighted(w, cfg_.hp.cohort_size, g);
  }

  void record_participation(const std::vector<int>& cohort) {
    std::vector<bool> selected(clients_.size(), false);
    for (int i : cohort) selected[i] = true;
    for (size_t i = 0; i < clients_.size(); ++i)
      clients_[i].participation.push(selected[i]);
  }

  // Honest local deltas for a cohort; label-flip clients train on flipped
  // labels, which is their "honest" behavior for dispatch purposes.
  std::vector<Vec> honest_deltas(const std::vector<int>& cohort, int t) {
    std::vector<Vec> out;
    out.reserve(cohort.size());
    for (int i : cohort) {
      auto g = rng_.derive("train", std::uint64_t(i), std::uint64_t(t));
      out.push_back(local_train(model_, task_.clients[i], cfg_.hp,
                                clients_[i].role == Role::LabelFlip, g,
                                task_.classes));
    }
    return out;
  }

  CollusionPool build_pool(Role r, const std::vector<int>& cohort,
                           const std::vector<Vec>& honest) {
    CollusionPool pool;
    for (size_t k = 0; k < cohort.size(); ++k) {
      if (clients_[cohort[k]].role == r) {
        pool.members.push_back(cohort[k]);
        pool.gradients.push_back(honest[k]);
      }
    }
    pool.recompute();
    return pool;
  }

  std::vector<Vec> attacked_updates(const std::vector<int>& cohort,
                                    const std::vector<Vec>& honest, int t) {
    const CollusionPool alie_pool = build_pool(Role::Alie, cohort, honest);
    const CollusionPool sm_pool = build_pool(Role::Sm, cohort, honest);
    std::vector<Vec> out;
    out.reserve(cohort.size());
    for (size_t k = 0; k < cohort.size(); ++k) {
      const ClientState& c = clients_[cohort[k]];
      const CollusionPool& pool =
          c.role == Role::Alie ? alie_pool : sm_pool;
      auto g = rng_.derive("attack", std::uint64_t(cohort[k]),
                           std::uint64_t(t));
      out.push_back(make_update(c, honest[k], spec_for(c.role), pool, t, g));
    }
    return out;
  }

  void simulate_responses(const std::vector<int>& cohort, int t) {
    for (int i : cohort) {
      auto g = rng_.derive("response", std::uint64_t(i), std::uint64_t(t));
      const double shape = clients_[i].role == Role::Adaptive
                               ? kErraticResponseShape
                               : kBenignResponseShape;
      simulate_response(clients_[i], response_mu_[i], shape, g);
    }
  }

  void assert_reputation_bounds() const {
    for (const ClientState& c : clients_) {
      if (!(c.reputation >= 0.0 && c.reputation <= 1.0))
        throw std::logic_error("reputation bound violated for client " +
                               std::to_string(c.id));
      for (double r : c.components)
        if (!(r >= 0.0 && r <= 1.0))
          throw std::logic_error("component bound violated for client " +
                                 std::to_string(c.id));
    }
  }

  void fill_role_means(RoundLog& log) const {
    double ben = 0.0, mal = 0.0;
    int nb = 0, nm = 0;
    for (const ClientState& c : clients_) {
      if (c.role == Role::Benign) {
        ben += c.reputation;
        ++nb;
      } else {
        mal += c.reputation;
        ++nm;
      }
    }
    log.mean_rep_benign = nb ? ben / nb : 0.0;
    log.mean_rep_malicious = nm ? mal / nm : 0.0;
  }

  void fill_confusion(RoundLog& log) const {
    const ConfusionCounts c = count_confusion(clients_, threshold_.theta);
    log.tp = c.tp;
    log.fp = c.fp;
    log.tn = c.tn;
    log.fn = c.fn;
  }

  void update_ever_flagged() {
    for (size_t i = 0; i < clients_.size(); ++i)
      if (clients_[i].reputation < threshold_.theta / 2.0)
        ever_flagged_[i] = true;
  }

  RoundLog run_flare_round(int t);
  RoundLog run_baseline_round(int t);

  ExperimentConfig cfg_;
  RngStream rng_;
  SyntheticTask task_;
  std::vector<ClientState> clients_;
  std::vector<double> response_mu_;
  std::vector<bool> ever_flagged_;
  std::array<AttackSpec, 8> specs_{};
  int n_malicious_ = 0;

  Vec model_;
  Vec prev_model_;  // model before the previous round's aggregation
  VarianceTracker tracker_;
  DynamicWeights weights_;
  ThresholdState threshold_;
  DetectionHistory history_{20};
  Vec attack_direction_;
  std::vector<RoundLog> logs_;
};

// ---------------------------------------------------------------------------
// FLARE round (Algorithm 2 sequencing)
// ---------------------------------------------------------------------------

inline RoundLog Simulation::run_flare_round(int t) {
  using clock = std::chrono::steady_clock;
  RoundLog log;
  log.round = t;

  const double conv =
      t == 1 ? 0.0 : convergence_metric(model_, prev_model_);
  const AttackPattern pattern = analyze_pattern(history_);
  const double prev_theta = threshold_.theta;

  const std::vector<int> cohort = pick_cohort(t);
  const std::vector<Vec> honest = honest_deltas(cohort, t);
  const std::vector<Vec> attacked = attacked_updates(cohort, honest, t);
  simulate_responses(cohort, t);

  // Client-side LDP: clip to c_ldp, then Gaussian noise, before transmission.
  std::vector<Vec> received;
  received.reserve(cohort.size());
  for (size_t k = 0; k < cohort.size(); ++k) {
    auto g = rng_.derive("ldp", std::uint64_t(cohort[k]), std::uint64_t(t));
    received.push_back(
        apply_ldp(attacked[k], cfg_.hp.c_ldp, cfg_.hp.sigma_ldp, g));
  }

  const auto server_start = clock::now();

  // Robust round statistics: median-norm clipping bounds what any single
  // client can contribute to the mean and variance estimates.
  const double med = median_norm(received);
  std::vector<Vec> clipped;
  clipped.reserve(received.size());
  for (const Vec& u : received)
    clipped.push_back(cfg_.gradient_clipping ? clip_update(u, med) : u);
  tracker_ = update_variance(tracker_, clipped, cfg_.hp.alpha_cov);
  const Vec mu = cohort_mean(clipped);

  // Evidence scores on the received (pre-clip) private updates.
  const size_t m = cohort.size();
  std::vector<std::array<double, 3>> components(m);
  std::vector<double> prev_reps(m);
  for (size_t k = 0; k < m; ++k) {
    ClientState& c = clients_[cohort[k]];
    prev_reps[k] = c.reputation;
    ConsistencyResult cons =
        consistency_score(c, received[k], cfg_.hp.alpha);
    c.consistency_raw = cons.raw;
    c.update_ema = std::move(cons.new_ema);
    const double d = normalized_anomaly_distance(received[k], mu, tracker_);
    components[k][0] = cons.score;
    components[k][1] = anomaly_score(d, cfg_.hp.tau_d, cfg_.hp.lambda);
    components[k][2] = temporal_score(c, cfg_.hp.beta);
  }

  weights_ = compute_dynamic_weights(components, weights_, prev_reps,
                                     prev_theta, conv, pattern,
                                     cfg_.hp.tau_conv, t == 1);

  std::vector<double> fresh(m);
  int flagged_prev = 0;
  for (size_t k = 0; k < m; ++k) {
    ClientState& c = clients_[cohort[k]];
    c.components = components[k];
    fresh[k] = cfg_.pin_reputation >= 0.0
                   ? cfg_.pin_reputation
                   : composite_score(components[k], weights_);
    c.set_reputation(fresh[k]);
    if (fresh[k] < prev_theta / 2.0) ++flagged_prev;
  }
  const double anomaly_rate = double(flagged_prev) / double(m);
  threshold_ = update_threshold(threshold_, cfg_.hp, conv, anomaly_rate);
  const double theta = threshold_.theta;

  // Classification, detection history and aggregation input.
  std::vector<DetectionRecord> records;
  records.reserve(m);
  double soft_weight_sum = 0.0;
  std::vector<TrustedUpdate> trusted_updates;
  std::vector<SampleUpdate> hard_updates;
  for (size_t k = 0; k < m; ++k) {
    const Classification cls = classify(fresh[k], theta);
    switch (cls.status) {
      case Trust::Trusted: ++log.trusted; break;
      case Trust::Suspicious: ++log.suspicious; break;
      case Trust::Untrusted: ++log.untrusted; break;
    }
    soft_weight_sum += cls.weight;

    DetectionRecord rec;
    rec.client = cohort[k];
    rec.flagged = fresh[k] < theta / 2.0;
    rec.preclip_norm = l2_norm(received[k]);
    rec.cohort_median_norm = med;
    rec.components = components[k];
    rec.reputation = fresh[k];
    rec.half_threshold = theta / 2.0;
    records.push_back(rec);

    if (cfg_.soft_exclusion) {
      if (fresh[k] >= theta / 2.0)
        trusted_updates.push_back(
            {clipped[k], fresh[k], clients_[cohort[k]].n_samples});
    } else if (fresh[k] >= theta) {
      // Ablation: hard threshold cut with uniform (sample-count) weights.
      hard_updates.push_back({clipped[k], clients_[cohort[k]].n_samples});
    }
  }
  history_.record_round(std::move(records));

  const Vec before = model_;
  prev_model_ = model_;
  if (cfg_.soft_exclusion) {
    if (trusted_updates.empty()) log.stalled = 1;
    model_ = flare_aggregate(model_, trusted_updates);
  } else {
    if (hard_updates.empty()) log.stalled = 1;
    else model_ = fedavg_aggregate(model_, hard_updates);
  }

  // Reputation evolution for this round's participants.
  for (size_t k = 0; k < m; ++k) {
    ClientState& c = clients_[cohort[k]];
    c.set_reputation(
        evolve_reputation(fresh[k], fresh[k] >= theta / 2.0, cfg_.hp));
  }

  log.agg_wall_time_s =
      std::chrono::duration<double>(clock::now() - server_start).count();

  // The participation window covers completed rounds, so the current round
  // is recorded after scoring.
  record_participation(cohort);

  const auto [loss, acc] = evaluate(model_, task_);
  log.test_loss = loss;
  log.test_accuracy = acc;
  log.theta = theta;
  log.conv = conv;
  log.anomaly_rate = anomaly_rate;
  log.weights = weights_.w;
  log.median_update_norm = med;
  log.mean_soft_weight = soft_weight_sum / double(m);
  if (!attack_direction_.empty())
    log.sm_drift = dot(subtracted(model_, before), attack_direction_);
  update_ever_flagged();
  fill_role_means(log);
  fill_confusion(log);
  return log;
}

// ---------------------------------------------------------------------------
// Baseline round (same loop without the reputation path)
// ---------------------------------------------------------------------------

inline RoundLog Simulation::run_baseline_round(int t) {
  using clock = std::chrono::steady_clock;
  RoundLog log;
  log.round = t;
  log.conv = t == 1 ? 0.0 : convergence_metric(model_, prev_model_);

  const std::vector<int> cohort = pick_cohort(t);
  record_participation(cohort);
  const std::vector<Vec> honest = honest_deltas(cohort, t);
  // Baselines model "standard aggregation without defense": updates go out
  // raw, with no client-side LDP step.
  const std::vector<Vec> updates = attacked_updates(cohort, honest, t);

  const auto server_start = clock::now();
  const Vec before = model_;
  prev_model_ = model_;
  int krum_selected = -1;
  switch (cfg_.aggregator.type) {
    case AggregatorKind::Type::FedAvg: {
      std::vector<SampleUpdate> in;
      in.reserve(cohort.size());
      for (size_t k = 0; k < cohort.size(); ++k)
        in.push_back({updates[k], clients_[cohort[k]].n_samples});
      model_ = fedavg_aggregate(model_, in);
      break;
    }
    case AggregatorKind::Type::Krum: {
      int f = cfg_.aggregator.krum_f;
      if (f < 0)
        f = int(std::floor(cfg_.malicious_fraction * cohort.size()));
      krum_selected = int(krum_select(updates, f));
      add_in_place(model_, updates[krum_selected]);
      break;
    }
    case AggregatorKind::Type::TrimmedMean: {
      model_ = trimmed_mean_aggregate(model_, updates,
                                      cfg_.aggregator.trim_fraction);
      break;
    }
    case AggregatorKind::Type::Flare:
      throw std::logic_error("baseline round invoked with flare aggregator");
  }
  log.agg_wall_time_s =
      std::chrono::duration<double>(clock::now() - server_start).count();

  const auto [loss, acc] = evaluate(model_, task_);
  log.test_loss = loss;
  log.test_accuracy = acc;
  log.median_update_norm = median_norm(updates);
  if (!attack_direction_.empty())
    log.sm_drift = dot(subtracted(model_, before), attack_direction_);
  fill_role_means(log);
  // Detection columns stay blank except for Krum's implicit selection,
  // counted over the cohort.
  if (krum_selected >= 0) {
    for (size_t k = 0; k < cohort.size(); ++k) {
      const bool predicted = int(k) != krum_selected;
      const bool truly = clients_[cohort[k]].role != Role::Benign;
      if (predicted && truly) ++log.tp;
      else if (predicted && !truly) ++log.fp;
      else if (!predicted && truly) ++log.fn;
      else ++log.tn;
    }
  }
  return log;
}

}  // namespace flare
