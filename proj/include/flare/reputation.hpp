#pragma once
// Per-round evidence scores (consistency, statistical anomaly, temporal
// behavior), the incremental diagonal variance tracker, and the dynamic
// score-weighting scheme.

#include <array>
#include <cmath>
#include <vector>

#include "flare/core.hpp"

namespace flare {

// Variance floor used when inverting; keeps constant coordinates finite.
inline constexpr double kVarianceFloor = 1e-12;

enum class AttackPattern { None, GradientScaling, AdaptiveAttack, LabelFlipping };

inline std::string attack_pattern_name(AttackPattern p) {
  switch (p) {
    case AttackPattern::None: return "none";
    case AttackPattern::GradientScaling: return "gradient_scaling";
    case AttackPattern::AdaptiveAttack: return "adaptive_attack";
    case AttackPattern::LabelFlipping: return "label_flipping";
  }
  return "none";
}

// ---------------------------------------------------------------------------
// Consistency score (r1)
// ---------------------------------------------------------------------------

struct ConsistencyResult {
  double score;  // stored component, rescaled to [0,1]
  double raw;    // raw recursion state on the cosine scale [-1,1]
  Vec new_ema;
};

// Raw recursion s = alpha*s_prev + (1-alpha)*cos(update, ema), stored as
// (s+1)/2. First participation returns 0.5 and seeds the EMA with the
// update itself.
inline ConsistencyResult consistency_score(const ClientState& client,
                                           const Vec& update, double alpha) {
  if (!client.update_ema.has_value()) {
    return ConsistencyResult{0.5, 0.0, update};
  }
  const Vec& ema = *client.update_ema;
  require_same_dim(update, ema);
  const double c = cosine_similarity(update, ema);
  const double raw = alpha * client.consistency_raw + (1.0 - alpha) * c;
  Vec new_ema = scaled(ema, alpha);
  add_in_place(new_ema, update, 1.0 - alpha);
  return ConsistencyResult{clamp01((raw + 1.0) / 2.0), raw, new_ema};
}

// ---------------------------------------------------------------------------
// Diagonal variance tracker and anomaly score (r2)
// ---------------------------------------------------------------------------

struct VarianceTracker {
  Vec variance;  // per-parameter variance, entries >= 0
  bool initialized = false;
};

inline Vec cohort_mean(const std::vector<Vec>& updates) {
  if (updates.empty()) throw EmptyCohort("cohort_mean: no updates");
  Vec mu(updates.front().size(), 0.0);
  for (const Vec& u : updates) add_in_place(mu, u);
  for (double& v : mu) v /= double(updates.size());
  return mu;
}

// Incremental per-parameter variance:
//   sigma2 <- alpha_cov * sigma2_prev + ((1-alpha_cov)/|C|) * sum_i (d_i - mu)^2
// First call starts from sigma2_prev = 0. O(d) time and memory.
inline VarianceTracker update_variance(const VarianceTracker& tracker,
                                       const std::vector<Vec>& updates,
                                       double alpha_cov) {
  if (updates.empty()) throw EmptyCohort("update_variance: no updates");
  const size_t d = updates.front().size();
  for (const Vec& u : updates) require_same_dim(updates.front(), u);
  if (tracker.initialized && tracker.variance.size() != d)
    throw DimensionMismatch("update_variance: tracker dimension changed");

  VarianceTracker out;
  out.initialized = true;
  out.variance.assign(d, 0.0);
  if (tracker.initialized) {
    for (size_t p = 0; p < d; ++p)
      out.variance[p] = alpha_cov * tracker.variance[p];
  }
  const Vec mu = cohort_mean(updates);
  const double w = (1.0 - alpha_cov) / double(updates.size());
  for (const Vec& u : updates) {
    for (size_t p = 0; p < d; ++p) {
      const double delta = u[p] - mu[p];
      out.variance[p] += w * delta * delta;
    }
  }
  return out;
}

// Allocation-free variant of update_variance for the round loop; takes the
// cohort mean precomputed and accumulates in the same order.
inline void update_variance_in_place(VarianceTracker& tracker,
                                     const std::vector<Vec>& updates,
                                     double alpha_cov, const Vec& mu) {
  if (updates.empty()) throw EmptyCohort("update_variance: no updates");
  const size_t d = updates.front().size();
  if (tracker.initialized) {
    if (tracker.variance.size() != d)
      throw DimensionMismatch("update_variance: tracker dimension changed");
    for (double& v : tracker.variance) v *= alpha_cov;
  } else {
    tracker.variance.assign(d, 0.0);
    tracker.initialized = true;
  }
  const double w = (1.0 - alpha_cov) / double(updates.size());
  for (const Vec& u : updates) {
    for (size_t p = 0; p < d; ++p) {
      const double delta = u[p] - mu[p];
      tracker.variance[p] += w * delta * delta;
    }
  }
}

// One-pass cosine against the stored EMA plus the in-place EMA update;
// behaves exactly like consistency_score but mutates the client state.
inline double consistency_update_in_place(ClientState& client,
                                          const Vec& update, double alpha) {
  if (!client.update_ema.has_value()) {
    client.update_ema = update;
    client.consistency_raw = 0.0;
    return 0.5;
  }
  Vec& ema = *client.update_ema;
  require_same_dim(update, ema);
  double dot_ue = 0.0, nu2 = 0.0, ne2 = 0.0;
  for (size_t p = 0; p < update.size(); ++p) {
    dot_ue += update[p] * ema[p];
    nu2 += update[p] * update[p];
    ne2 += ema[p] * ema[p];
  }
  double c = 0.0;
  if (nu2 > 0.0 && ne2 > 0.0)
    c = std::clamp(dot_ue / (std::sqrt(nu2) * std::sqrt(ne2)), -1.0, 1.0);
  const double raw = alpha * client.consistency_raw + (1.0 - alpha) * c;
  for (size_t p = 0; p < ema.size(); ++p)
    ema[p] = alpha * ema[p] + (1.0 - alpha) * update[p];
  client.consistency_raw = raw;
  return clamp01((raw + 1.0) / 2.0);
}

// Standardized Euclidean distance sqrt(sum_p (u_p - mu_p)^2 / sigma2_p),
// with the variance floored when inverted.
inline double anomaly_distance(const Vec& update, const Vec& mean,
                               const VarianceTracker& tracker) {
  require_same_dim(update, mean);
  require_same_dim(update, tracker.variance);
  double s = 0.0;
  for (size_t p = 0; p < update.size(); ++p) {
    const double delta = update[p] - mean[p];
    s += delta * delta / std::max(tracker.variance[p], kVarianceFloor);
  }
  return std::sqrt(s);
}

// Per-dimension form of the same statistic; this is what the round loop
// compares against tau_d, which is a per-coordinate bound.
inline double normalized_anomaly_distance(const Vec& update, const Vec& mean,
                                          const VarianceTracker& tracker) {
  return anomaly_distance(update, mean, tracker) /
         std::sqrt(double(update.size()));
}

// r2 = 1 below the threshold, exponential penalty above it.
inline double anomaly_score(double d, double tau_d, double lambda) {
  if (d <= tau_d) return 1.0;
  return std::exp(-lambda * (d - tau_d));
}

// ---------------------------------------------------------------------------
// Temporal score (r3)
// ---------------------------------------------------------------------------

inline double temporal_score(const ClientState& client, double beta) {
  const double p = client.participation_rate();
  const double sigma_rt = client.response_time_std();
  return clamp01(beta * p + (1.0 - beta) / (1.0 + sigma_rt));
}

// ---------------------------------------------------------------------------
// Dynamic weights and composite score
// ---------------------------------------------------------------------------

struct DynamicWeights {
  std::array<double, 3> w{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::array<double, 3> previous{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
};

inline std::array<double, 3> softmax3(const std::array<double, 3>& eta) {
  const double m = std::max({eta[0], eta[1], eta[2]});
  std::array<double, 3> e{};
  double sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    e[j] = std::exp(eta[j] - m);
    sum += e[j];
  }
  for (int j = 0; j < 3; ++j) e[j] /= sum;
  return e;
}

// Discriminative power per dimension (cohort variance times benign/suspicious
// separation), convergence-phase multipliers, attack-pattern boosts, softmax
// normalization and temporal smoothing.
inline DynamicWeights compute_dynamic_weights(
    const std::vector<std::array<double, 3>>& components,
    const DynamicWeights& prev_weights,
    const std::vector<double>& prev_reputation, double prev_threshold,
    double conv, AttackPattern pattern, double tau_conv, bool first_round) {
  const size_t n = components.size();
  if (n == 0) throw EmptyCohort("compute_dynamic_weights: empty cohort");
  if (prev_reputation.size() != n)
    throw LengthMismatch("compute_dynamic_weights: reputation list size");

  std::vector<bool> suspicious(n);
  size_t n_sus = 0;
  for (size_t i = 0; i < n; ++i) {
    suspicious[i] = prev_reputation[i] < prev_threshold / 2.0;
    n_sus += suspicious[i] ? 1 : 0;
  }

  std::array<double, 3> eta{};
  for (int j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += components[i][j];
    mean /= double(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double d = components[i][j] - mean;
      var += d * d;
    }
    var /= double(n);

    double sep = 0.0;
    if (n_sus > 0 && n_sus < n) {
      double mu_sus = 0.0, mu_ben = 0.0;
      for (size_t i = 0; i < n; ++i) {
        (suspicious[i] ? mu_sus : mu_ben) += components[i][j];
      }
      mu_sus /= double(n_sus);
      mu_ben /= double(n - n_sus);
      sep = std::abs(mu_ben - mu_sus);
    }
    eta[j] = var * sep;
  }

  if (conv > tau_conv) {
    eta[0] *= 1.5;  // late training: prioritize consistency
    eta[2] *= 1.2;
  } else {
    eta[1] *= 1.3;  // early training: prioritize anomaly detection
    eta[0] *= 0.8;
  }

  switch (pattern) {
    case AttackPattern::GradientScaling: eta[1] *= 2.0; break;
    case AttackPattern::AdaptiveAttack: eta[2] *= 2.0; break;
    case AttackPattern::LabelFlipping: eta[0] *= 1.8; break;
    case AttackPattern::None: break;
  }

  DynamicWeights out;
  out.w = softmax3(eta);
  if (!first_round) {
    for (int j = 0; j < 3; ++j)
      out.w[j] = 0.7 * out.w[j] + 0.3 * prev_weights.w[j];
  }
  out.previous = prev_weights.w;
  return out;
}

// R = sum_j w_j r_j; convex combination of [0,1] values.
inline double composite_score(const std::array<double, 3>& components,
                              const DynamicWeights& weights) {
  double r = 0.0;
  for (int j = 0; j < 3; ++j) r += weights.w[j] * components[j];
  return clamp01(r);
}

}  // namespace flare
