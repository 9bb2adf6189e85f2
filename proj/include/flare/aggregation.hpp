#pragma once
// Gradient clipping, the client-side LDP mechanism, reputation-weighted
// aggregation and the baseline aggregators (FedAvg, Krum, trimmed mean).

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "flare/core.hpp"

namespace flare {

// ---------------------------------------------------------------------------
// Aggregator selection
// ---------------------------------------------------------------------------

struct AggregatorKind {
  enum class Type { Flare, FedAvg, Krum, TrimmedMean };
  Type type = Type::Flare;
  int krum_f = 0;              // assumed malicious count for Krum
  double trim_fraction = 0.2;  // per-side trim fraction for TrimmedMean

  static AggregatorKind parse(const std::string& name) {
    AggregatorKind k;
    if (name == "flare") k.type = Type::Flare;
    else if (name == "fedavg") k.type = Type::FedAvg;
    else if (name == "krum") k.type = Type::Krum;
    else if (name == "trimmed") k.type = Type::TrimmedMean;
    else throw ConfigError("unknown aggregator: " + name);
    return k;
  }

  std::string name() const {
    switch (type) {
      case Type::Flare: return "flare";
      case Type::FedAvg: return "fedavg";
      case Type::Krum: return "krum";
      case Type::TrimmedMean: return "trimmed";
    }
    return "flare";
  }
};

// ---------------------------------------------------------------------------
// Clipping and LDP
// ---------------------------------------------------------------------------

// update * min(1, c / |update|); the zero vector passes through.
inline Vec clip_update(const Vec& update, double c) {
  const double n = l2_norm(update);
  if (n == 0.0 || n <= c) return update;
  return scaled(update, c / n);
}

// Median of L2 norms; even counts take the lower median.
inline double median_norm(const std::vector<Vec>& updates) {
  if (updates.empty()) throw EmptyCohort("median_norm: no updates");
  std::vector<double> norms(updates.size());
  for (size_t i = 0; i < updates.size(); ++i) norms[i] = l2_norm(updates[i]);
  std::sort(norms.begin(), norms.end());
  return norms[(norms.size() - 1) / 2];
}

// Gaussian mechanism on the clipped update: clip to c_ldp, then add
// independent N(0, (c_ldp*sigma)^2) per coordinate. Runs on the client
// before transmission.
inline Vec apply_ldp(const Vec& update, double c_ldp, double sigma,
                     std::mt19937_64& rng) {
  Vec out = clip_update(update, c_ldp);
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, c_ldp * sigma);
    for (double& v : out) v += noise(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// FLARE aggregation
// ---------------------------------------------------------------------------

struct TrustedUpdate {
  Vec delta;
  double reputation = 1.0;
  int n_samples = 1;
};

// w_prev + sum R_i n_i delta_i / sum R_i n_i over the trusted set; an
// empty set (or zero total weight) stalls and returns w_prev.
inline Vec flare_aggregate(const Vec& w_prev,
                           const std::vector<TrustedUpdate>& updates) {
  double total = 0.0;
  for (const TrustedUpdate& u : updates) total += u.reputation * u.n_samples;
  if (updates.empty() || total <= 0.0) return w_prev;
  Vec out = w_prev;
  for (const TrustedUpdate& u : updates) {
    require_same_dim(w_prev, u.delta);
    add_in_place(out, u.delta, u.reputation * u.n_samples / total);
  }
  return out;
}

// Copy-free variant over cohort indices; reputation and sample weights are
// read per index. Equivalent to flare_aggregate on the materialized list.
inline void flare_aggregate_in_place(Vec& model, const std::vector<Vec>& updates,
                                     const std::vector<size_t>& members,
                                     const std::vector<double>& reputation,
                                     const std::vector<int>& n_samples) {
  double total = 0.0;
  for (size_t k : members) total += reputation[k] * n_samples[k];
  if (members.empty() || total <= 0.0) return;
  for (size_t k : members) {
    const double w = reputation[k] * n_samples[k] / total;
    const Vec& u = updates[k];
    for (size_t p = 0; p < model.size(); ++p) model[p] += w * u[p];
  }
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

struct SampleUpdate {
  Vec delta;
  int n_samples = 1;
};

inline Vec fedavg_aggregate(const Vec& w_prev,
                            const std::vector<SampleUpdate>& updates) {
  if (updates.empty()) throw EmptyCohort("fedavg_aggregate: no updates");
  double total = 0.0;
  for (const SampleUpdate& u : updates) total += u.n_samples;
  Vec out = w_prev;
  for (const SampleUpdate& u : updates) {
    require_same_dim(w_prev, u.delta);
    add_in_place(out, u.delta, u.n_samples / total);
  }
  return out;
}

// Classic Krum: score each update by the sum of squared distances to its
// |C|-f-2 nearest neighbors and return the argmin index (ties -> lowest).
inline size_t krum_select(const std::vector<Vec>& updates, int f) {
  const size_t n = updates.size();
  if (n < size_t(f) + 3)
    throw CohortTooSmall("krum_select: need at least f + 3 updates");
  std::vector<std::vector<double>> d2(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const Vec diff = subtracted(updates[i], updates[j]);
      const double v = dot(diff, diff);
      d2[i][j] = v;
      d2[j][i] = v;
    }
  }
  const size_t keep = n - size_t(f) - 2;
  size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    row.reserve(n - 1);
    for (size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(d2[i][j]);
    std::sort(row.begin(), row.end());
    double score = 0.0;
    for (size_t k = 0; k < keep; ++k) score += row[k];
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

// Coordinate-wise trimmed mean: drop the floor(trim*|C|) lowest and
// highest values per coordinate and average the rest.
inline Vec trimmed_mean_aggregate(const Vec& w_prev,
                                  const std::vector<Vec>& updates,
                                  double trim) {
  if (updates.empty()) throw EmptyCohort("trimmed_mean_aggregate: no updates");
  const size_t n = updates.size();
  const size_t k = size_t(trim * double(n));
  if (2 * k >= n)
    throw CohortTooSmall("trimmed_mean_aggregate: trim removes everything");
  const size_t d = updates.front().size();
  for (const Vec& u : updates) require_same_dim(updates.front(), u);
  Vec out = w_prev;
  require_same_dim(w_prev, updates.front());
  std::vector<double> column(n);
  for (size_t p = 0; p < d; ++p) {
    for (size_t i = 0; i < n; ++i) column[i] = updates[i][p];
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (size_t i = k; i < n - k; ++i) s += column[i];
    out[p] += s / double(n - 2 * k);
  }
  return out;
}

}  // namespace flare
