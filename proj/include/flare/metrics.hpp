#pragma once
// Detection quality, robustness and convergence measurements.

#include <cmath>
#include <optional>
#include <vector>

#include "flare/core.hpp"

namespace flare {

struct ConfusionCounts {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  int total() const { return tp + fp + tn + fn; }
};

struct DetectionMetrics {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  ConfusionCounts counts;
};

inline ConfusionCounts count_confusion(const std::vector<ClientState>& clients,
                                       double theta) {
  ConfusionCounts c;
  for (const ClientState& s : clients) {
    const bool predicted_malicious = s.reputation < theta / 2.0;
    const bool truly_malicious = s.role != Role::Benign;
    if (predicted_malicious && truly_malicious) ++c.tp;
    else if (predicted_malicious && !truly_malicious) ++c.fp;
    else if (!predicted_malicious && truly_malicious) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline DetectionMetrics metrics_from_counts(const ConfusionCounts& c) {
  DetectionMetrics m;
  m.counts = c;
  m.precision = (c.tp + c.fp == 0) ? 1.0 : double(c.tp) / (c.tp + c.fp);
  m.recall = (c.tp + c.fn == 0) ? 1.0 : double(c.tp) / (c.tp + c.fn);
  m.f1 = (m.precision + m.recall == 0.0)
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

// Detection verdict at the end of a run: a client is predicted malicious
// when its final reputation sits below half the final threshold.
inline DetectionMetrics detection_metrics(const std::vector<ClientState>& clients,
                                          double theta_final) {
  return metrics_from_counts(count_confusion(clients, theta_final));
}

// Fraction of rounds where accuracy falls more than 5 points below the
// clean reference run at the same round.
inline double robustness(const std::vector<double>& round_accuracies,
                         const std::vector<double>& clean_reference) {
  if (round_accuracies.size() != clean_reference.size())
    throw LengthMismatch("robustness: curves differ in length");
  if (round_accuracies.empty()) return 0.0;
  size_t degraded = 0;
  for (size_t i = 0; i < round_accuracies.size(); ++i)
    if (clean_reference[i] - round_accuracies[i] > 0.05) ++degraded;
  return double(degraded) / double(round_accuracies.size());
}

// First 1-based round index where accuracy reaches 90% of the mean over
// the final 10 rounds; nullopt when the curve never gets there.
inline std::optional<int> convergence_round(
    const std::vector<double>& round_accuracies) {
  if (round_accuracies.empty()) return std::nullopt;
  const size_t n = round_accuracies.size();
  const size_t tail = std::min<size_t>(10, n);
  double final_mean = 0.0;
  for (size_t i = n - tail; i < n; ++i) final_mean += round_accuracies[i];
  final_mean /= double(tail);
  const double target = 0.9 * final_mean;
  for (size_t i = 0; i < n; ++i)
    if (round_accuracies[i] >= target) return int(i) + 1;
  return std::nullopt;
}

}  // namespace flare
