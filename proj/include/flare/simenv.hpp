#pragma once
// Synthetic federated task: Gaussian-cluster classification with Dirichlet
// heterogeneity, local multinomial logistic regression, response-time and
// cohort-selection simulation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "flare/core.hpp"

namespace flare {

struct ClientDataset {
  std::vector<double> x;  // n x p, row major
  std::vector<int> y;
  int n = 0;
  int p = 0;

  const double* row(int i) const { return x.data() + size_t(i) * p; }
};

struct SyntheticTask {
  int classes = 10;
  int feature_dim = 0;
  double label_noise_rate = 0.0;
  std::vector<Vec> centers;  // classes x p, pairwise distance >= 2
  std::vector<ClientDataset> clients;
  ClientDataset test;
  Vec ref_model;             // centrally trained reference
  double ref_loss = 0.0;     // L*: test loss of the reference model
  double ref_accuracy = 0.0;

  int model_dim() const { return classes * (feature_dim + 1); }
};

// ---------------------------------------------------------------------------
// Multinomial logistic regression on a flattened weight vector
// ---------------------------------------------------------------------------
// Layout: model[k * (p + 1) + j] is the weight of feature j for class k;
// j = p is the bias.

namespace detail {

inline void class_logits(const Vec& model, const double* x, int classes,
                         int p, std::vector<double>& logits) {
  logits.assign(classes, 0.0);
  for (int k = 0; k < classes; ++k) {
    const double* w = model.data() + size_t(k) * (p + 1);
    double s = w[p];
    for (int j = 0; j < p; ++j) s += w[j] * x[j];
    logits[k] = s;
  }
}

inline void softmax_in_place(std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& e : v) {
    e = std::exp(e - m);
    sum += e;
  }
  for (double& e : v) e /= sum;
}

// Accumulates the mean cross-entropy gradient over [begin, end) of order.
inline void batch_gradient(const Vec& model, const ClientDataset& data,
                           const std::vector<int>& order, size_t begin,
                           size_t end, bool flip_labels, int classes,
                           Vec& grad) {
  const int p = data.p;
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> probs;
  const double inv = 1.0 / double(end - begin);
  for (size_t idx = begin; idx < end; ++idx) {
    const int i = order[idx];
    const double* x = data.row(i);
    int label = data.y[i];
    if (flip_labels) label = (label + 1) % classes;
    class_logits(model, x, classes, p, probs);
    softmax_in_place(probs);
    for (int k = 0; k < classes; ++k) {
      const double coeff = (probs[k] - (k == label ? 1.0 : 0.0)) * inv;
      double* g = grad.data() + size_t(k) * (p + 1);
      for (int j = 0; j < p; ++j) g[j] += coeff * x[j];
      g[p] += coeff;
    }
  }
}

}  // namespace detail

// Mean cross-entropy loss and top-1 accuracy of a model on a dataset.
inline std::pair<double, double> evaluate_on(const Vec& model,
                                             const ClientDataset& data,
                                             int classes) {
  std::vector<double> probs;
  double loss = 0.0;
  int correct = 0;
  for (int i = 0; i < data.n; ++i) {
    detail::class_logits(model, data.row(i), classes, data.p, probs);
    detail::softmax_in_place(probs);
    loss -= std::log(std::max(probs[data.y[i]], 1e-300));
    const int pred = int(std::max_element(probs.begin(), probs.end()) -
                         probs.begin());
    correct += pred == data.y[i] ? 1 : 0;
  }
  return {loss / std::max(data.n, 1), double(correct) / std::max(data.n, 1)};
}

inline std::pair<double, double> evaluate(const Vec& model,
                                          const SyntheticTask& task) {
  return evaluate_on(model, task.test, task.classes);
}

// E epochs of mini-batch gradient descent on cross-entropy; returns the
// delta w_local - w_global. flip_labels replaces every label y with
// (y + 1) mod classes for the whole of training.
inline Vec local_train(const Vec& global, const ClientDataset& data,
                       const HyperParams& hp, bool flip_labels,
                       std::mt19937_64& rng, int classes = 10) {
  Vec model = global;
  Vec grad(model.size(), 0.0);
  std::vector<int> order(data.n);
  std::iota(order.begin(), order.end(), 0);
  const size_t batch = size_t(std::max(hp.batch_size, 1));
  for (int epoch = 0; epoch < hp.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t b = 0; b < order.size(); b += batch) {
      const size_t e = std::min(b + batch, order.size());
      detail::batch_gradient(model, data, order, b, e, flip_labels, classes,
                             grad);
      add_in_place(model, grad, -hp.learning_rate);
    }
  }
  return subtracted(model, global);
}

// Full-batch gradient descent on pooled data; used for the reference model.
inline Vec centralized_train(const ClientDataset& data, int classes,
                             double learning_rate, int iterations) {
  Vec model(size_t(classes) * (data.p + 1), 0.0);
  Vec grad(model.size(), 0.0);
  std::vector<int> order(data.n);
  std::iota(order.begin(), order.end(), 0);
  for (int it = 0; it < iterations; ++it) {
    detail::batch_gradient(model, data, order, 0, order.size(), false,
                           classes, grad);
    add_in_place(model, grad, -learning_rate);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Federation generation
// ---------------------------------------------------------------------------

inline std::vector<double> dirichlet_draw(int k, double alpha,
                                          std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> v(k);
  double sum = 0.0;
  for (double& e : v) {
    e = gamma(rng);
    sum += e;
  }
  if (sum <= 0.0) {
    // Extremely concentrated draws can underflow; fall back to one-hot.
    std::uniform_int_distribution<int> pick(0, k - 1);
    std::fill(v.begin(), v.end(), 0.0);
    v[pick(rng)] = 1.0;
    return v;
  }
  for (double& e : v) e /= sum;
  return v;
}

// Per-client class proportions ~ Dirichlet(alpha * 1); features from the
// class-center Gaussians. Label-flip clients keep clean data here; flipping
// happens at training time.
inline SyntheticTask generate_federation(int n_clients,
                                         int samples_per_client,
                                         double dirichlet_alpha, int p,
                                         const RngStream& rng,
                                         double feature_noise = 1.0,
                                         double label_noise_rate = 0.0,
                                         int test_per_class = 200,
                                         bool train_reference = true) {
  if (n_clients < 1) throw ConfigError("n_clients must be >= 1");
  if (samples_per_client < 1)
    throw ConfigError("samples_per_client must be >= 1");
  if (!(dirichlet_alpha > 0.0))
    throw ConfigError("dirichlet_alpha must be > 0");
  if (p < 1) throw ConfigError("feature_dim must be >= 1");

  SyntheticTask task;
  task.feature_dim = p;
  task.label_noise_rate = label_noise_rate;

  // Class centers: standard Gaussian draws, rescaled if needed so that the
  // minimum pairwise distance is at least 2.
  {
    auto g = rng.derive("task.centers");
    std::normal_distribution<double> unit(0.0, 1.0);
    task.centers.assign(task.classes, Vec(p));
    for (Vec& c : task.centers)
      for (double& v : c) v = unit(g);
    double min_dist = std::numeric_limits<double>::infinity();
    for (int a = 0; a < task.classes; ++a)
      for (int b = a + 1; b < task.classes; ++b)
        min_dist = std::min(min_dist,
                            l2_norm(subtracted(task.centers[a],
                                               task.centers[b])));
    if (min_dist < 2.0 && min_dist > 0.0) {
      const double scale = 2.0 * (1.0 + 1e-9) / min_dist;
      for (Vec& c : task.centers)
        for (double& v : c) v *= scale;
    }
  }

  auto sample_into = [&](ClientDataset& ds, int count,
                         const std::vector<double>& proportions,
                         std::mt19937_64& g) {
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::discrete_distribution<int> pick_class(proportions.begin(),
                                               proportions.end());
    ds.p = p;
    ds.n = count;
    ds.x.resize(size_t(count) * p);
    ds.y.resize(count);
    for (int i = 0; i < count; ++i) {
      const int k = pick_class(g);
      int label = k;
      if (label_noise_rate > 0.0 && u01(g) < label_noise_rate) {
        std::uniform_int_distribution<int> other(0, task.classes - 2);
        int alt = other(g);
        if (alt >= label) ++alt;
        label = alt;
      }
      ds.y[i] = label;
      double* row = ds.x.data() + size_t(i) * p;
      for (int j = 0; j < p; ++j)
        row[j] = task.centers[k][j] + feature_noise * unit(g);
    }
  };

  task.clients.resize(n_clients);
  const std::vector<double> uniform_props(task.classes,
                                          1.0 / task.classes);
  for (int i = 0; i < n_clients; ++i) {
    auto g = rng.derive("task.client", std::uint64_t(i));
    const std::vector<double> props =
        dirichlet_draw(task.classes, dirichlet_alpha, g);
    sample_into(task.clients[i], samples_per_client, props, g);
  }

  {
    auto g = rng.derive("task.test");
    ClientDataset& t = task.test;
    t.p = p;
    t.n = test_per_class * task.classes;
    t.x.resize(size_t(t.n) * p);
    t.y.resize(t.n);
    std::normal_distribution<double> unit(0.0, 1.0);
    int i = 0;
    for (int k = 0; k < task.classes; ++k) {
      for (int s = 0; s < test_per_class; ++s, ++i) {
        t.y[i] = k;
        double* row = t.x.data() + size_t(i) * p;
        for (int j = 0; j < p; ++j)
          row[j] = task.centers[k][j] + feature_noise * unit(g);
      }
    }
  }

  if (train_reference) {
    ClientDataset pooled;
    pooled.p = p;
    for (const ClientDataset& c : task.clients) {
      pooled.n += c.n;
      pooled.x.insert(pooled.x.end(), c.x.begin(), c.x.end());
      pooled.y.insert(pooled.y.end(), c.y.begin(), c.y.end());
    }
    task.ref_model = centralized_train(pooled, task.classes, 0.5, 400);
    const auto [loss, acc] = evaluate(task.ref_model, task);
    task.ref_loss = loss;
    task.ref_accuracy = acc;
  }
  return task;
}

// ---------------------------------------------------------------------------
// Response times and cohort selection
// ---------------------------------------------------------------------------

// Log-normal response time with per-client location mu_log (fixed at
// setup); erratic clients use a much larger shape. The draw is appended to
// the client's response window.
inline double simulate_response(ClientState& client, double mu_log,
                                double sigma_log, std::mt19937_64& rng) {
  double t;
  if (sigma_log <= 0.0) {
    t = std::exp(mu_log);
  } else {
    std::normal_distribution<double> unit(0.0, 1.0);
    t = std::exp(mu_log + sigma_log * unit(rng));
  }
  client.response_times.push(t);
  return t;
}

inline constexpr double kBenignResponseShape = 0.1;
inline constexpr double kErraticResponseShape = 0.6;

// Sampling without replacement with probability proportional to the given
// weights. Equal weights reduce to uniform sampling.
inline std::vector<int> select_cohort_weighted(const std::vector<double>& weights,
                                               int size,
                                               std::mt19937_64& rng) {
  const int n = int(weights.size());
  if (size > n) throw CohortTooLarge("select_cohort: size exceeds clients");
  std::vector<double> w = weights;
  std::vector<int> chosen;
  chosen.reserve(size);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int pick = 0; pick < size; ++pick) {
    double total = 0.0;
    for (double v : w) total += v;
    double u = u01(rng) * total;
    int sel = -1;
    for (int i = 0; i < n; ++i) {
      if (w[i] <= 0.0) continue;
      u -= w[i];
      if (u <= 0.0) {
        sel = i;
        break;
      }
    }
    if (sel < 0) {  // numeric tail: take the last eligible
      for (int i = n - 1; i >= 0; --i)
        if (w[i] > 0.0) {
          sel = i;
          break;
        }
    }
    chosen.push_back(sel);
    w[sel] = 0.0;
  }
  return chosen;
}

// Reputation-proportional selection with a 0.05 floor so every client keeps
// a redemption pathway.
inline std::vector<int> select_cohort(const std::vector<ClientState>& clients,
                                      int size, std::mt19937_64& rng) {
  std::vector<double> w(clients.size());
  for (size_t i = 0; i < clients.size(); ++i)
    w[i] = std::max(clients[i].reputation, 0.05);
  return select_cohort_weighted(w, size, rng);
}

}  // namespace flare
