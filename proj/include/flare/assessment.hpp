#pragma once
// Adaptive threshold evolution, client classification, reputation
// decay/recovery and attack-pattern analysis.

#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <vector>

#include "flare/core.hpp"
#include "flare/reputation.hpp"

namespace flare {

// ---------------------------------------------------------------------------
// Convergence and threshold
// ---------------------------------------------------------------------------

struct ThresholdState {
  double theta = 0.5;
  double anomaly_rate = 0.0;
  double conv = 0.0;
};

// conv = 1 / (1 + |w_curr - w_prev| / |w_prev|). The round loop substitutes
// 0 at t = 1 where no previous pair exists.
inline double convergence_metric(const Vec& w_curr, const Vec& w_prev) {
  require_same_dim(w_curr, w_prev);
  const double rel = l2_norm(subtracted(w_curr, w_prev)) /
                     (l2_norm(w_prev) + 1e-12);
  return 1.0 / (1.0 + rel);
}

inline ThresholdState update_threshold(const ThresholdState&,
                                       const HyperParams& hp, double conv,
                                       double anomaly_rate) {
  ThresholdState out;
  out.conv = conv;
  out.anomaly_rate = anomaly_rate;
  out.theta = std::clamp(hp.theta_base + hp.gamma * conv -
                             hp.delta * anomaly_rate,
                         hp.theta_min, hp.theta_max);
  return out;
}

// ---------------------------------------------------------------------------
// Classification and reputation evolution
// ---------------------------------------------------------------------------

enum class Trust { Trusted, Suspicious, Untrusted };

struct Classification {
  Trust status;
  double weight;  // Trusted 1, Suspicious R/Theta, Untrusted 0
};

inline Classification classify(double reputation, double theta) {
  if (reputation >= theta) return {Trust::Trusted, 1.0};
  if (reputation >= theta / 2.0)
    return {Trust::Suspicious, reputation / theta};
  return {Trust::Untrusted, 0.0};
}

// Asymmetric update: slow recovery, fast decay, saturating at [0,1].
inline double evolve_reputation(double reputation, bool behaved_benign,
                                const HyperParams& hp) {
  if (behaved_benign) return std::min(reputation + hp.rho_up, 1.0);
  return std::max(reputation - hp.rho_down, 0.0);
}

// ---------------------------------------------------------------------------
// Attack-pattern analysis
// ---------------------------------------------------------------------------

struct DetectionRecord {
  int client = 0;
  bool flagged = false;          // fresh composite below Theta^t / 2
  double preclip_norm = 0.0;     // received update norm before median clip
  double cohort_median_norm = 0.0;
  std::array<double, 3> components{};
  double reputation = 0.0;       // fresh composite R^t
  double half_threshold = 0.0;   // Theta^t / 2
};

// Sliding window (default 20 rounds) of per-cohort detection records.
class DetectionHistory {
 public:
  explicit DetectionHistory(size_t window_rounds = 20)
      : window_(window_rounds) {}

  void record_round(std::vector<DetectionRecord> records) {
    rounds_.push_back(std::move(records));
    if (rounds_.size() > window_) rounds_.pop_front();
  }

  const std::deque<std::vector<DetectionRecord>>& rounds() const {
    return rounds_;
  }

  bool empty() const { return rounds_.empty(); }

 private:
  size_t window_;
  std::deque<std::vector<DetectionRecord>> rounds_;
};

// Heuristic vote over flagged clients in the window:
//   - norm blow-up (> 3x the round's cohort median)  -> gradient_scaling
//   - reputation oscillation (>= 2 crossings of Theta/2) -> adaptive_attack
//   - low consistency (r1 < 0.4) with clean anomaly score (r2 >= 0.8)
//                                                      -> label_flipping
// Majority over distinct flagged clients decides; ties resolve in the
// order gradient_scaling > adaptive_attack > label_flipping.
inline AttackPattern analyze_pattern(const DetectionHistory& history) {
  struct PerClient {
    bool norm_blowup = false;
    int crossings = 0;
    bool has_prev_sign = false;
    bool prev_sign = false;
    double r1_sum = 0.0, r2_sum = 0.0;
    int flagged_count = 0;
  };
  std::map<int, PerClient> stats;
  std::map<int, bool> ever_flagged;

  for (const auto& round : history.rounds()) {
    for (const DetectionRecord& rec : round) {
      PerClient& pc = stats[rec.client];
      const bool sign = rec.reputation >= rec.half_threshold;
      if (pc.has_prev_sign && sign != pc.prev_sign) ++pc.crossings;
      pc.prev_sign = sign;
      pc.has_prev_sign = true;
      if (rec.flagged) {
        ever_flagged[rec.client] = true;
        ++pc.flagged_count;
        pc.r1_sum += rec.components[0];
        pc.r2_sum += rec.components[1];
        if (rec.preclip_norm > 3.0 * rec.cohort_median_norm)
          pc.norm_blowup = true;
      }
    }
  }
  if (ever_flagged.empty()) return AttackPattern::None;

  int n_flagged = 0, votes_gs = 0, votes_aa = 0, votes_lf = 0;
  for (const auto& [id, _] : ever_flagged) {
    const PerClient& pc = stats[id];
    ++n_flagged;
    if (pc.norm_blowup) ++votes_gs;
    if (pc.crossings >= 2) ++votes_aa;
    const double r1 = pc.r1_sum / pc.flagged_count;
    const double r2 = pc.r2_sum / pc.flagged_count;
    if (r1 < 0.4 && r2 >= 0.8) ++votes_lf;
  }
  if (2 * votes_gs > n_flagged) return AttackPattern::GradientScaling;
  if (2 * votes_aa > n_flagged) return AttackPattern::AdaptiveAttack;
  if (2 * votes_lf > n_flagged) return AttackPattern::LabelFlipping;
  return AttackPattern::None;
}

}  // namespace flare
