#include <catch2/catch_amalgamated.hpp>

#include "flare/simenv.hpp"

using namespace flare;

// ---------------------------------------------------------------------------
// generate_federation
// ---------------------------------------------------------------------------

TEST_CASE("near-infinite dirichlet alpha is the IID limit") {
  const RngStream rng(1);
  const SyntheticTask task =
      generate_federation(5, 2000, 1e6, 4, rng, 1.0, 0.0, 10,
                          /*train_reference=*/false);
  for (const ClientDataset& c : task.clients) {
    std::vector<int> counts(10, 0);
    for (int y : c.y) ++counts[y];
    const double expected = c.n / 10.0;
    const double tol = 3.0 * std::sqrt(c.n * 0.1 * 0.9);
    for (int k = 0; k < 10; ++k)
      CHECK(std::abs(counts[k] - expected) <= tol);
  }
}

TEST_CASE("small dirichlet alpha concentrates client labels") {
  const RngStream rng(2);
  const SyntheticTask task =
      generate_federation(100, 200, 0.1, 4, rng, 1.0, 0.0, 10, false);
  double mean_max_share = 0.0;
  for (const ClientDataset& c : task.clients) {
    std::vector<int> counts(10, 0);
    for (int y : c.y) ++counts[y];
    mean_max_share +=
        double(*std::max_element(counts.begin(), counts.end())) / c.n;
  }
  mean_max_share /= task.clients.size();
  CHECK(mean_max_share > 0.5);
}

TEST_CASE("dirichlet alpha controls label entropy monotonically") {
  const RngStream rng(3);
  double prev_entropy = -1.0;
  for (double alpha : {0.1, 0.3, 0.5, 0.7}) {
    const SyntheticTask task =
        generate_federation(60, 300, alpha, 4, rng, 1.0, 0.0, 10, false);
    double mean_entropy = 0.0;
    for (const ClientDataset& c : task.clients) {
      std::vector<int> counts(10, 0);
      for (int y : c.y) ++counts[y];
      double h = 0.0;
      for (int k = 0; k < 10; ++k) {
        if (counts[k] == 0) continue;
        const double p = double(counts[k]) / c.n;
        h -= p * std::log(p);
      }
      mean_entropy += h;
    }
    mean_entropy /= task.clients.size();
    CHECK(mean_entropy > prev_entropy);
    prev_entropy = mean_entropy;
  }
}

TEST_CASE("federation replays byte-identically under a fixed seed") {
  const RngStream rng(77);
  const SyntheticTask a =
      generate_federation(6, 40, 0.5, 5, rng, 1.0, 0.0, 10, false);
  const SyntheticTask b =
      generate_federation(6, 40, 0.5, 5, rng, 1.0, 0.0, 10, false);
  CHECK(a.test.x == b.test.x);
  for (int i = 0; i < 6; ++i) {
    CHECK(a.clients[i].x == b.clients[i].x);
    CHECK(a.clients[i].y == b.clients[i].y);
  }
}

TEST_CASE("class centers are unit separated") {
  const RngStream rng(5);
  const SyntheticTask task =
      generate_federation(2, 10, 0.5, 3, rng, 1.0, 0.0, 5, false);
  for (int a = 0; a < task.classes; ++a)
    for (int b = a + 1; b < task.classes; ++b)
      CHECK(l2_norm(subtracted(task.centers[a], task.centers[b])) >= 2.0);
}

TEST_CASE("invalid federation parameters are rejected") {
  const RngStream rng(6);
  CHECK_THROWS_AS(generate_federation(0, 10, 0.5, 3, rng), ConfigError);
  CHECK_THROWS_AS(generate_federation(2, 10, 0.0, 3, rng), ConfigError);
}

// ---------------------------------------------------------------------------
// local_train / evaluate
// ---------------------------------------------------------------------------

namespace {

SyntheticTask small_task(std::uint64_t seed, int clients = 1,
                         int samples = 200, bool reference = false) {
  const RngStream rng(seed);
  return generate_federation(clients, samples, 1000.0, 8, rng, 1.0, 0.0, 50,
                             reference);
}

}  // namespace

TEST_CASE("zero local epochs produce a zero delta") {
  const SyntheticTask task = small_task(10);
  HyperParams hp;
  hp.local_epochs = 0;
  auto g = RngStream(1).derive("t");
  const Vec delta =
      local_train(Vec(task.model_dim(), 0.0), task.clients[0], hp, false, g);
  CHECK(l2_norm(delta) == 0.0);
}

TEST_CASE("full-batch loss is non-increasing for a small step size") {
  const SyntheticTask task = small_task(11);
  HyperParams hp;
  hp.local_epochs = 1;
  hp.batch_size = 100000;  // full batch
  hp.learning_rate = 0.01;
  Vec model(task.model_dim(), 0.0);
  double prev_loss = evaluate_on(model, task.clients[0], task.classes).first;
  for (int epoch = 0; epoch < 20; ++epoch) {
    auto g = RngStream(2).derive("t", 0, std::uint64_t(epoch));
    add_in_place(model, local_train(model, task.clients[0], hp, false, g));
    const double loss =
        evaluate_on(model, task.clients[0], task.classes).first;
    CHECK(loss <= prev_loss + 1e-12);
    prev_loss = loss;
  }
}

TEST_CASE("training replays are bit identical") {
  const SyntheticTask task = small_task(12);
  HyperParams hp;
  hp.learning_rate = 0.05;
  auto g1 = RngStream(3).derive("t", 4, 9);
  auto g2 = RngStream(3).derive("t", 4, 9);
  const Vec zero(task.model_dim(), 0.0);
  CHECK(local_train(zero, task.clients[0], hp, false, g1) ==
        local_train(zero, task.clients[0], hp, false, g2));
}

TEST_CASE("label-flipped self-training unlearns the original labels") {
  const SyntheticTask task = small_task(13);
  HyperParams hp;
  hp.learning_rate = 0.1;
  hp.local_epochs = 5;
  Vec model(task.model_dim(), 0.0);
  for (int round = 1; round <= 50; ++round) {
    auto g = RngStream(4).derive("t", 0, std::uint64_t(round));
    add_in_place(model, local_train(model, task.clients[0], hp, true, g));
  }
  const double acc_original =
      evaluate_on(model, task.clients[0], task.classes).second;
  CHECK(acc_original < 0.2);
}

TEST_CASE("zero model scores at chance on the balanced test set") {
  const SyntheticTask task = small_task(14);
  const auto [loss, acc] = evaluate(Vec(task.model_dim(), 0.0), task);
  CHECK(acc == Catch::Approx(0.1).margin(0.02));
  CHECK(loss == Catch::Approx(std::log(10.0)).margin(1e-9));
}

TEST_CASE("centralized reference is strong and defines L*") {
  const RngStream rng(15);
  const SyntheticTask task =
      generate_federation(5, 200, 1000.0, 20, rng, 1.0, 0.0, 100, true);
  CHECK(task.ref_accuracy >= 0.9);
  const auto [loss, acc] = evaluate(task.ref_model, task);
  CHECK(loss == task.ref_loss);
  CHECK(acc == task.ref_accuracy);
}

// ---------------------------------------------------------------------------
// simulate_response / select_cohort
// ---------------------------------------------------------------------------

TEST_CASE("zero shape gives constant response times") {
  ClientState c;
  auto g = RngStream(16).derive("r");
  const double a = simulate_response(c, std::log(2.0), 0.0, g);
  const double b = simulate_response(c, std::log(2.0), 0.0, g);
  CHECK(a == Catch::Approx(2.0));
  CHECK(a == b);
  CHECK(c.response_time_std() == 0.0);
}

TEST_CASE("benign windows are steadier than erratic windows") {
  const RngStream rng(17);
  int benign_steadier = 0;
  const int trials = 100;
  for (int s = 0; s < trials; ++s) {
    ClientState benign, erratic;
    auto g1 = rng.derive("benign", std::uint64_t(s));
    auto g2 = rng.derive("erratic", std::uint64_t(s));
    for (int i = 0; i < 20; ++i) {
      simulate_response(benign, 0.0, kBenignResponseShape, g1);
      simulate_response(erratic, 0.0, kErraticResponseShape, g2);
    }
    if (benign.response_time_std() < erratic.response_time_std())
      ++benign_steadier;
  }
  CHECK(benign_steadier >= 95);
}

TEST_CASE("equal reputations select uniformly") {
  std::vector<ClientState> clients(20);
  for (int i = 0; i < 20; ++i) clients[i].id = i;
  auto g = RngStream(18).derive("cohort");
  std::vector<int> counts(20, 0);
  const int draws = 10000;
  for (int d = 0; d < draws; ++d)
    for (int idx : select_cohort(clients, 4, g)) ++counts[idx];
  const double expected = draws * 4.0 / 20.0;
  const double tol = 3.0 * std::sqrt(draws * 0.2 * 0.8);
  for (int c : counts) CHECK(std::abs(c - expected) <= tol);
}

TEST_CASE("selection respects the reputation floor") {
  std::vector<ClientState> clients(10);
  clients[0].set_reputation(1.0);
  for (int i = 1; i < 10; ++i) clients[i].set_reputation(0.0);
  auto g = RngStream(19).derive("cohort");
  int hot = 0;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d)
    hot += select_cohort(clients, 1, g)[0] == 0 ? 1 : 0;
  const double share = 1.0 / (1.0 + 9.0 * 0.05);
  CHECK(double(hot) / draws == Catch::Approx(share).epsilon(0.05));
}

TEST_CASE("full-size cohorts take everyone") {
  std::vector<ClientState> clients(7);
  clients[3].set_reputation(0.0);
  auto g = RngStream(20).derive("cohort");
  std::vector<int> cohort = select_cohort(clients, 7, g);
  std::sort(cohort.begin(), cohort.end());
  CHECK(cohort == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
  CHECK_THROWS_AS(select_cohort(clients, 8, g), CohortTooLarge);
}
