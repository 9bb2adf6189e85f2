#include <catch2/catch_amalgamated.hpp>

#include "flare/aggregation.hpp"

using namespace flare;

namespace {

std::vector<Vec> random_updates(int n, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Vec> out(n, Vec(d));
  for (Vec& u : out)
    for (double& v : u) v = unit(rng);
  return out;
}

// Brute-force trimmed mean: full sort per coordinate, drop k each side.
Vec trimmed_oracle(const Vec& w_prev, const std::vector<Vec>& updates,
                   double trim) {
  const size_t n = updates.size();
  const size_t k = size_t(trim * double(n));
  Vec out = w_prev;
  for (size_t p = 0; p < w_prev.size(); ++p) {
    std::vector<double> col;
    for (const Vec& u : updates) col.push_back(u[p]);
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (size_t i = k; i < n - k; ++i) s += col[i];
    out[p] += s / double(n - 2 * k);
  }
  return out;
}

// O(n^2 d) Krum oracle with explicit neighbor sums.
size_t krum_oracle(const std::vector<Vec>& updates, int f) {
  const size_t n = updates.size();
  size_t best = 0;
  double best_score = 1e300;
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> dists;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (size_t p = 0; p < updates[i].size(); ++p) {
        const double diff = updates[i][p] - updates[j][p];
        d2 += diff * diff;
      }
      dists.push_back(d2);
    }
    std::sort(dists.begin(), dists.end());
    double score = 0.0;
    const size_t keep = n - size_t(f) - 2;
    for (size_t k = 0; k < keep; ++k) score += dists[k];
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// clip_update / median_norm
// ---------------------------------------------------------------------------

TEST_CASE("clipping basics") {
  CHECK(clip_update({0.3, 0.4}, 1.0) == Vec{0.3, 0.4});  // norm 0.5
  const Vec clipped = clip_update({0.0, 2.0}, 1.0);
  CHECK(l2_norm(clipped) == Catch::Approx(1.0));
  CHECK(clipped[1] == Catch::Approx(1.0));
  CHECK(clip_update({3.0, 4.0}, 10.0) == Vec{3.0, 4.0});  // norm 5 <= 10
  CHECK(clip_update({0.0, 0.0}, 1.0) == Vec{0.0, 0.0});
}

TEST_CASE("clipping never increases the norm") {
  std::mt19937_64 rng(17);
  for (const Vec& u : random_updates(100, 6, rng)) {
    const double c = 0.1 + double(rng() % 100) / 50.0;
    CHECK(l2_norm(clip_update(u, c)) <= c + 1e-12);
    CHECK(l2_norm(clip_update(u, c)) <= l2_norm(u) + 1e-12);
  }
}

TEST_CASE("median norm uses the lower median") {
  auto with_norms = [](std::vector<double> norms) {
    std::vector<Vec> out;
    for (double n : norms) out.push_back({n, 0.0});
    return out;
  };
  CHECK(median_norm(with_norms({1, 2, 3})) == Catch::Approx(2.0));
  CHECK(median_norm(with_norms({1, 2, 3, 100})) == Catch::Approx(2.0));
  CHECK(median_norm(with_norms({7})) == Catch::Approx(7.0));
  CHECK_THROWS_AS(median_norm({}), EmptyCohort);
}

// ---------------------------------------------------------------------------
// apply_ldp
// ---------------------------------------------------------------------------

TEST_CASE("sigma 0 reduces the mechanism to plain clipping") {
  std::mt19937_64 rng(0);
  const Vec u{3.0, -4.0};
  CHECK(apply_ldp(u, 1.0, 0.0, rng) == clip_update(u, 1.0));
}

TEST_CASE("ldp noise is calibrated: variance within 2% over 1e5 draws") {
  std::mt19937_64 rng(42);
  const Vec zero(4, 0.0);
  const int n = 100000;
  std::vector<double> mean(4, 0.0), m2(4, 0.0);
  for (int i = 0; i < n; ++i) {
    const Vec out = apply_ldp(zero, 1.0, 1.0, rng);
    for (int p = 0; p < 4; ++p) {
      mean[p] += out[p];
      m2[p] += out[p] * out[p];
    }
  }
  for (int p = 0; p < 4; ++p) {
    mean[p] /= n;
    const double var = m2[p] / n - mean[p] * mean[p];
    CHECK(var == Catch::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(mean[p]) <= 3.0 / std::sqrt(double(n)));
  }
}

// ---------------------------------------------------------------------------
// flare_aggregate
// ---------------------------------------------------------------------------

TEST_CASE("single trusted client moves the model by its delta") {
  const Vec w{1.0, 1.0};
  const Vec out = flare_aggregate(w, {{Vec{0.5, -0.5}, 0.37, 421}});
  CHECK(out[0] == Catch::Approx(1.5));
  CHECK(out[1] == Catch::Approx(0.5));
}

TEST_CASE("symmetric clients average their deltas") {
  const Vec out = flare_aggregate(Vec{0.0, 0.0},
                                  {{Vec{1.0, 0.0}, 0.8, 10},
                                   {Vec{0.0, 1.0}, 0.8, 10}});
  CHECK(out[0] == Catch::Approx(0.5));
  CHECK(out[1] == Catch::Approx(0.5));
}

TEST_CASE("reputation-weighted 1-D hand value") {
  const Vec out = flare_aggregate(Vec{0.0},
                                  {{Vec{1.0}, 0.8, 100},
                                   {Vec{-1.0}, 0.2, 100}});
  CHECK(out[0] == Catch::Approx(0.6));
}

TEST_CASE("empty trusted set stalls") {
  const Vec w{3.0, 4.0};
  CHECK(flare_aggregate(w, {}) == w);
  CHECK(flare_aggregate(w, {{Vec{1.0, 1.0}, 0.0, 10}}) == w);
}

TEST_CASE("flare aggregate stays in the per-coordinate convex hull") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u01(0.01, 1.0);
  for (int it = 0; it < 200; ++it) {
    const int n = 1 + int(rng() % 8);
    const Vec w = random_updates(1, 5, rng)[0];
    std::vector<TrustedUpdate> in;
    for (int i = 0; i < n; ++i)
      in.push_back({random_updates(1, 5, rng)[0], u01(rng),
                    1 + int(rng() % 50)});
    const Vec out = flare_aggregate(w, in);
    for (size_t p = 0; p < w.size(); ++p) {
      double lo = 1e300, hi = -1e300;
      for (const TrustedUpdate& u : in) {
        lo = std::min(lo, w[p] + u.delta[p]);
        hi = std::max(hi, w[p] + u.delta[p]);
      }
      REQUIRE(out[p] >= lo - 1e-9);
      REQUIRE(out[p] <= hi + 1e-9);
    }
  }
}

TEST_CASE("equal reputations and samples reduce to fedavg") {
  std::mt19937_64 rng(29);
  const std::vector<Vec> updates = random_updates(6, 4, rng);
  const Vec w = random_updates(1, 4, rng)[0];
  std::vector<TrustedUpdate> t_in;
  std::vector<SampleUpdate> f_in;
  for (const Vec& u : updates) {
    t_in.push_back({u, 0.42, 17});
    f_in.push_back({u, 17});
  }
  const Vec a = flare_aggregate(w, t_in);
  const Vec b = fedavg_aggregate(w, f_in);
  for (size_t p = 0; p < w.size(); ++p)
    CHECK(a[p] == Catch::Approx(b[p]).margin(1e-12));
}

TEST_CASE("bias vanishes when malicious reputations hit zero") {
  std::mt19937_64 rng(31);
  const std::vector<Vec> benign = random_updates(5, 4, rng);
  const std::vector<Vec> malicious = random_updates(3, 4, rng);
  const Vec w = random_updates(1, 4, rng)[0];
  std::vector<TrustedUpdate> mixed;
  std::vector<SampleUpdate> benign_only;
  for (const Vec& u : benign) {
    mixed.push_back({u, 1.0, 20});
    benign_only.push_back({u, 20});
  }
  for (const Vec& u : malicious) mixed.push_back({u, 0.0, 20});
  const Vec a = flare_aggregate(w, mixed);
  const Vec b = fedavg_aggregate(w, benign_only);
  for (size_t p = 0; p < w.size(); ++p)
    CHECK(a[p] == Catch::Approx(b[p]).margin(1e-12));
}

// ---------------------------------------------------------------------------
// fedavg_aggregate
// ---------------------------------------------------------------------------

TEST_CASE("fedavg basics") {
  const Vec mean = fedavg_aggregate(Vec{0.0},
                                    {{Vec{2.0}, 5}, {Vec{4.0}, 5}});
  CHECK(mean[0] == Catch::Approx(3.0));
  const Vec weighted = fedavg_aggregate(Vec{0.0},
                                        {{Vec{4.0}, 3}, {Vec{0.0}, 1}});
  CHECK(weighted[0] == Catch::Approx(3.0));
  const Vec single = fedavg_aggregate(Vec{1.0}, {{Vec{0.5}, 9}});
  CHECK(single[0] == Catch::Approx(1.5));
  CHECK_THROWS_AS(fedavg_aggregate(Vec{1.0}, {}), EmptyCohort);
}

// ---------------------------------------------------------------------------
// krum_select
// ---------------------------------------------------------------------------

TEST_CASE("krum hand instance") {
  const std::vector<Vec> updates{{0.0}, {0.1}, {-0.1}, {10.0}};
  CHECK(krum_select(updates, 1) == 0);
}

TEST_CASE("krum degenerate ties pick the lowest index") {
  const std::vector<Vec> updates(5, Vec{1.0, 2.0});
  CHECK(krum_select(updates, 1) == 0);
}

TEST_CASE("krum rejects too-small cohorts") {
  CHECK_THROWS_AS(krum_select({{0.0}, {1.0}, {2.0}}, 1), CohortTooSmall);
}

TEST_CASE("krum selected vector is permutation invariant") {
  std::mt19937_64 rng(37);
  for (int it = 0; it < 50; ++it) {
    const int n = 5 + int(rng() % 6);
    std::vector<Vec> updates = random_updates(n, 3, rng);
    const Vec chosen = updates[krum_select(updates, 1)];
    std::shuffle(updates.begin(), updates.end(), rng);
    const Vec chosen_p = updates[krum_select(updates, 1)];
    CHECK(chosen == chosen_p);
  }
}

TEST_CASE("krum matches the brute-force oracle") {
  std::mt19937_64 rng(41);
  for (int it = 0; it < 100; ++it) {
    const int n = 4 + int(rng() % 9);  // up to 12
    const int f = std::min(1 + int(rng() % 3), n - 3);
    const std::vector<Vec> updates = random_updates(n, 4, rng);
    CHECK(krum_select(updates, f) == krum_oracle(updates, f));
  }
}

// ---------------------------------------------------------------------------
// trimmed_mean_aggregate
// ---------------------------------------------------------------------------

TEST_CASE("trimmed mean hand values") {
  const std::vector<Vec> u{{1.0}, {2.0}, {3.0}, {100.0}};
  CHECK(trimmed_mean_aggregate(Vec{0.0}, u, 0.25)[0] == Catch::Approx(2.5));
  CHECK(trimmed_mean_aggregate(Vec{0.0}, u, 0.0)[0] == Catch::Approx(26.5));
  const std::vector<Vec> same(4, Vec{3.3});
  CHECK(trimmed_mean_aggregate(Vec{0.0}, same, 0.25)[0] == Catch::Approx(3.3));
  CHECK_THROWS_AS(trimmed_mean_aggregate(Vec{0.0}, u, 0.5), CohortTooSmall);
}

TEST_CASE("trimmed mean matches the full-sort oracle on random instances") {
  std::mt19937_64 rng(43);
  for (int it = 0; it < 100; ++it) {
    const std::vector<Vec> updates = random_updates(8, 5, rng);
    const Vec w = random_updates(1, 5, rng)[0];
    const Vec a = trimmed_mean_aggregate(w, updates, 0.25);
    const Vec b = trimmed_oracle(w, updates, 0.25);
    for (size_t p = 0; p < w.size(); ++p)
      CHECK(a[p] == Catch::Approx(b[p]).margin(1e-12));
  }
}
