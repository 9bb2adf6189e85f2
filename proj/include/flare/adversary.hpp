#pragma once
// The six attack behaviors, including the colluding statistics pool used
// by ALIE and the statistical-mimicry attack.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "flare/core.hpp"

namespace flare {

struct AttackSpec {
  Role kind = Role::Benign;
  double variance = 1.0;      // Byzantine: per-coordinate noise variance
  double scale_lambda = 5.0;  // GradientScaling multiplier
  double attack_prob = 0.3;   // Adaptive duty cycle
  double alie_z = 2.0;        // ALIE shift in estimated std units
  double mix_alpha = 0.3;     // SM blend between honest and template
  double total_bias = 1.0;    // SM cumulative bias B
  int horizon = 200;          // SM horizon T (gamma_t = B / T)
  Vec direction;              // unit attack direction for ALIE / SM

  double sm_gamma() const { return total_bias / double(std::max(horizon, 1)); }
};

// Colluding attackers pool their own honest-proxy gradients each round and
// estimate the honest mean and diagonal covariance from them alone.
struct CollusionPool {
  std::vector<int> members;
  std::vector<Vec> gradients;
  Vec mean;
  Vec var_diag;

  void recompute() {
    mean.clear();
    var_diag.clear();
    if (gradients.empty()) return;
    const size_t d = gradients.front().size();
    mean.assign(d, 0.0);
    for (const Vec& g : gradients) add_in_place(mean, g);
    for (double& v : mean) v /= double(gradients.size());
    var_diag.assign(d, 0.0);
    for (const Vec& g : gradients) {
      for (size_t p = 0; p < d; ++p) {
        const double delta = g[p] - mean[p];
        var_diag[p] += delta * delta;
      }
    }
    for (double& v : var_diag) v /= double(gradients.size());
  }
};

// Replaces the honest update with i.i.d. N(0, variance) noise.
inline Vec byzantine_update(size_t dim, double variance,
                            std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, std::sqrt(variance));
  Vec out(dim);
  for (double& v : out) v = noise(rng);
  return out;
}

inline Vec scaling_update(const Vec& honest, double lambda) {
  return scaled(honest, lambda);
}

// 70/30 duty cycle by default: mostly honest, occasionally the scaling
// payload. The flag reports ground truth for logging.
inline std::pair<Vec, bool> adaptive_update(const Vec& honest,
                                            const AttackSpec& spec,
                                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < spec.attack_prob)
    return {scaling_update(honest, spec.scale_lambda), true};
  return {honest, false};
}

// Fully synthetic update: the estimated honest mean shifted z estimated
// standard deviations along the malicious direction.
inline Vec alie_update(const CollusionPool& pool, const AttackSpec& spec) {
  Vec out = pool.mean;
  for (size_t p = 0; p < out.size(); ++p)
    out[p] -= spec.alie_z * std::sqrt(pool.var_diag[p]) * spec.direction[p];
  return out;
}

// Statistical mimicry: blend of the honest gradient and a sampled template,
// plus the constant stealth drift gamma_t * d with gamma_t = B / T.
inline Vec sm_update(const Vec& honest, const CollusionPool& pool,
                     const AttackSpec& spec, int /*t*/,
                     std::mt19937_64& rng) {
  const double a = spec.mix_alpha;
  const double gamma_t = spec.sm_gamma();
  std::normal_distribution<double> unit(0.0, 1.0);
  Vec out(honest.size());
  for (size_t p = 0; p < honest.size(); ++p) {
    const double eps = std::sqrt(pool.var_diag[p]) * unit(rng);
    out[p] = (1.0 - a) * honest[p] + a * (pool.mean[p] + eps) +
             gamma_t * spec.direction[p];
  }
  return out;
}

// Routes a client's outgoing update through its attack behavior. Benign
// and label-flip clients pass through: label flipping already happened at
// training time.
inline Vec make_update(const ClientState& client, const Vec& honest,
                       const AttackSpec& spec, const CollusionPool& pool,
                       int t, std::mt19937_64& rng) {
  switch (client.role) {
    case Role::Benign:
    case Role::LabelFlip:
      return honest;
    case Role::ByzantineGradient:
      return byzantine_update(honest.size(), spec.variance, rng);
    case Role::GradientScaling:
      return scaling_update(honest, spec.scale_lambda);
    case Role::Adaptive:
      return adaptive_update(honest, spec, rng).first;
    case Role::Alie:
      return alie_update(pool, spec);
    case Role::Sm:
      return sm_update(honest, pool, spec, t, rng);
  }
  throw UnknownRole("make_update: unhandled role");
}

}  // namespace flare
