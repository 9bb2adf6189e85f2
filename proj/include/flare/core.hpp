#pragma once
// Domain types, hyperparameters and the seeded RNG contract shared by
// every other part of the simulator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flare {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyCohort : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CohortTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CohortTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LengthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownRole : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Dense vector helpers
// ---------------------------------------------------------------------------

inline void require_same_dim(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("vector dimensions differ: " +
                            std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
}

inline double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const Vec& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

inline Vec scaled(const Vec& a, double k) {
  Vec out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * k;
  return out;
}

inline void add_in_place(Vec& a, const Vec& b, double k = 1.0) {
  require_same_dim(a, b);
  for (size_t i = 0; i < a.size(); ++i) a[i] += k * b[i];
}

inline Vec subtracted(const Vec& a, const Vec& b) {
  require_same_dim(a, b);
  Vec out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Cosine of the angle between a and b. A zero-norm argument yields 0
// (neutral): zero updates occur legitimately at convergence.
inline double cosine_similarity(const Vec& a, const Vec& b) {
  require_same_dim(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Bounded history window
// ---------------------------------------------------------------------------

template <typename T>
class RingBuffer {
 public:
  explicit RingBuffer(size_t capacity) : capacity_(capacity) {}

  void push(T value) {
    items_.push_back(std::move(value));
    if (items_.size() > capacity_) items_.pop_front();
  }

  size_t size() const { return items_.size(); }
  size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  size_t capacity_;
  std::deque<T> items_;
};

// Participation window length k and response-time window length W_rt.
inline constexpr size_t kParticipationWindow = 10;
inline constexpr size_t kResponseWindow = 20;

// ---------------------------------------------------------------------------
// Client state
// ---------------------------------------------------------------------------

enum class Role {
  Benign,
  LabelFlip,
  ByzantineGradient,
  GradientScaling,
  Adaptive,
  Alie,
  Sm,
};

inline std::string role_name(Role r) {
  switch (r) {
    case Role::Benign: return "benign";
    case Role::LabelFlip: return "labelflip";
    case Role::ByzantineGradient: return "byzantine";
    case Role::GradientScaling: return "scaling";
    case Role::Adaptive: return "adaptive";
    case Role::Alie: return "alie";
    case Role::Sm: return "sm";
  }
  return "unknown";
}

inline Role role_from_name(std::string_view name) {
  if (name == "benign") return Role::Benign;
  if (name == "labelflip") return Role::LabelFlip;
  if (name == "byzantine") return Role::ByzantineGradient;
  if (name == "scaling") return Role::GradientScaling;
  if (name == "adaptive") return Role::Adaptive;
  if (name == "alie") return Role::Alie;
  if (name == "sm") return Role::Sm;
  throw UnknownRole("unknown role: " + std::string(name));
}

struct ClientState {
  int id = 0;
  Role role = Role::Benign;
  // Composite reputation R_i, always clamped to [0,1].
  double reputation = 0.5;
  // Stored evidence scores [r1, r2, r3], each in [0,1].
  std::array<double, 3> components{0.5, 1.0, 1.0};
  // Internal state of the consistency recursion (cosine scale, [-1,1]).
  double consistency_raw = 0.0;
  std::optional<Vec> update_ema;
  RingBuffer<bool> participation{kParticipationWindow};
  RingBuffer<double> response_times{kResponseWindow};
  int n_samples = 1;

  void set_reputation(double r) { reputation = clamp01(r); }

  // Fraction of the last k rounds in which the client was selected and
  // responded; rounds not yet recorded count as absences.
  double participation_rate() const {
    size_t hits = 0;
    for (bool b : participation) hits += b ? 1 : 0;
    return double(hits) / double(participation.capacity());
  }

  // Sample standard deviation of the response-time window; 0 with fewer
  // than two observations.
  double response_time_std() const {
    const size_t n = response_times.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double t : response_times) mean += t;
    mean /= double(n);
    double ss = 0.0;
    for (double t : response_times) ss += (t - mean) * (t - mean);
    return std::sqrt(ss / double(n - 1));
  }
};

// ---------------------------------------------------------------------------
// Hyperparameters
// ---------------------------------------------------------------------------

struct HyperParams {
  double alpha = 0.7;       // consistency decay
  double beta = 0.7;        // temporal weight
  double tau_d = 2.5;       // anomaly threshold
  double lambda = 0.5;      // penalty severity
  double gamma = 0.4;       // convergence influence on the threshold
  double delta = 0.5;       // anomaly-rate influence on the threshold
  double theta_base = 0.5;
  double rho_up = 0.05;
  double rho_down = 0.15;
  double alpha_cov = 0.9;   // variance EMA decay
  double tau_conv = 0.8;    // convergence branch threshold
  double theta_min = 0.1;
  double theta_max = 0.9;
  double sigma_ldp = 0.0;   // LDP noise multiplier
  double c_ldp = 1.0;       // client-side sensitivity clip
  int rounds = 200;
  int cohort_size = 10;
  int local_epochs = 5;
  double learning_rate = 0.001;
  int batch_size = 32;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending field and bound.
  void check() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(alpha)) throw ConfigError("alpha must be in [0,1]");
    if (!in01(beta)) throw ConfigError("beta must be in [0,1]");
    if (!in01(alpha_cov)) throw ConfigError("alpha_cov must be in [0,1]");
    if (!(rho_up < rho_down))
      throw ConfigError("rho_up must be strictly less than rho_down");
    if (!(theta_min >= 0.0 && theta_min <= theta_base &&
          theta_base <= theta_max && theta_max <= 1.0))
      throw ConfigError(
          "thresholds must satisfy 0 <= theta_min <= theta_base <= "
          "theta_max <= 1");
    if (!(tau_d > 0.0)) throw ConfigError("tau_d must be > 0");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    if (!(sigma_ldp >= 0.0)) throw ConfigError("sigma_ldp must be >= 0");
    if (!(c_ldp > 0.0)) throw ConfigError("c_ldp must be > 0");
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (cohort_size < 1) throw ConfigError("cohort_size must be >= 1");
    if (local_epochs < 0) throw ConfigError("local_epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Seeded RNG contract
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives independent substreams keyed by (purpose, client, round) so that
// identical keys replay identical draw sequences regardless of cohort
// composition or call order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master_seed() const { return master_; }

  std::mt19937_64 derive(std::string_view purpose, std::uint64_t client = 0,
                         std::uint64_t round = 0) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : purpose) h = (h ^ std::uint64_t(std::uint8_t(c))) * 1099511628211ULL;
    std::uint64_t s = splitmix64(master_ ^ h);
    s = splitmix64(s ^ (client + 0x9e3779b97f4a7c15ULL));
    s = splitmix64(s ^ (round + 0xd1b54a32d192ed03ULL));
    return std::mt19937_64(s);
  }

 private:
  std::uint64_t master_;
};

}  // namespace flare
