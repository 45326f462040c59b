#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "platoon/connectivity.hpp"
#include "platoon/errors.hpp"
#include "platoon/estimation.hpp"

using namespace platoon;

namespace {

// Plain x[k+1] = W x[k] + phi[k] loop, independent of the library's row
// evaluation order.
StateTrace naive_simulation(const Eigen::MatrixXd& w, const Eigen::VectorXd& x0,
                            const std::vector<FaultInjection>& injections, int horizon) {
  StateTrace out{x0};
  for (int k = 0; k < horizon; ++k) {
    Eigen::VectorXd next = w * out.back();
    for (const auto& inj : injections)
      if (inj.step == k) next(inj.vehicle) += inj.value;
    out.push_back(next);
  }
  return out;
}

struct Trial {
  Graph graph;
  WeightMatrix w;
  Eigen::VectorXd x0;
  FaultScenario scenario;
  int observer;
};

// Random fault vehicles (never the observer) with bounded phi at every step.
Trial random_trial(int n, int k, int faults, std::uint64_t seed) {
  const Graph g = build_knn_platoon({n, k});
  std::mt19937_64 rng(seed);
  const int observer = std::uniform_int_distribution<int>(0, n - 1)(rng);
  std::vector<int> pool;
  for (int v = 0; v < n; ++v)
    if (v != observer) pool.push_back(v);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<int> faulty(pool.begin(), pool.begin() + faults);
  std::vector<FaultInjection> inj;
  std::uniform_real_distribution<double> phi(-5.0, 5.0);
  for (int v : faulty)
    for (int s = 0; s < n; ++s) inj.push_back({v, s, phi(rng)});
  return Trial{g, random_weights(g, seed), random_state(n, seed), FaultScenario(faulty, n, inj), observer};
}

}  // namespace

TEST_SUITE("estimation") {

TEST_CASE("random weights live on the support and are reproducible") {
  const Graph g = build_knn_platoon({8, 2});
  const WeightMatrix a = random_weights(g, 42);
  const WeightMatrix b = random_weights(g, 42);
  const WeightMatrix c = random_weights(g, 43);
  CHECK(a.matrix() == b.matrix());
  CHECK(a.matrix() != c.matrix());
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      if (i == j || g.adjacent(i, j)) {
        CHECK(a(i, j) >= 0.2);
        CHECK(a(i, j) <= 1.0);
      } else {
        CHECK(a(i, j) == 0.0);
      }
    }
  }
  CHECK(random_state(8, 5) == random_state(8, 5));
  CHECK(random_state(8, 5) != random_state(8, 6));
}

TEST_CASE("weights off the graph support are rejected") {
  const Graph g = path_graph(3);
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(3, 3);
  w(0, 2) = 0.5;
  CHECK_THROWS_AS(WeightMatrix(g, w), ValidationError);
}

TEST_CASE("faulty simulation matches a plain matrix iteration") {
  const Graph g = build_knn_platoon({9, 2});
  const WeightMatrix w = random_weights(g, 1);
  const Eigen::VectorXd x0 = random_state(9, 1);
  const std::vector<FaultInjection> inj{{3, 0, 2.0}, {3, 4, -1.5}, {7, 2, 0.25}};
  const StateTrace trace = simulate_faulty(w, x0, FaultScenario({3, 7}, 9, inj));
  const StateTrace expected = naive_simulation(w.matrix(), x0, inj, 9);
  REQUIRE(trace.size() == expected.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double scale = 1.0 + expected[k].lpNorm<Eigen::Infinity>();
    CHECK((trace[k] - expected[k]).lpNorm<Eigen::Infinity>() <= 1e-12 * scale);
  }
}

TEST_CASE("measurements select the observer's closed neighborhood") {
  const Graph g = build_knn_platoon({7, 2});
  const Eigen::MatrixXd c = observer_selection(g, 3);
  REQUIRE(c.rows() == 5);
  const int expected[] = {1, 2, 3, 4, 5};
  for (int r = 0; r < 5; ++r) {
    CHECK(c.row(r).sum() == 1.0);
    CHECK(c(r, expected[r]) == 1.0);
  }
}

TEST_CASE("stacked measurements equal O x0 + J Phi") {
  for (auto [n, k] : {std::pair{8, 3}, {10, 3}, {10, 5}, {12, 5}, {6, 1}}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Trial t = random_trial(n, k, max_tolerable_faults(k) + 1, seed);
      const StateTrace trace = simulate_faulty(t.w, t.x0, t.scenario);
      const MeasurementTrace m = measure(t.graph, trace, t.observer, n);
      const ObservationModel model = observation_model(t.w, t.observer, n, t.scenario.faulty());

      // O built independently as C W^t.
      const Eigen::Index rows = m.selection.rows();
      Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
      for (int s = 0; s < n; ++s) {
        const Eigen::MatrixXd block = m.selection * power;
        const double scale = 1.0 + block.cwiseAbs().maxCoeff();
        CHECK((model.O.middleRows(rows * s, rows) - block).cwiseAbs().maxCoeff() <= 1e-12 * scale);
        power = t.w.matrix() * power;
      }

      const auto f = static_cast<Eigen::Index>(t.scenario.faulty().size());
      Eigen::VectorXd phi(f * (n - 1));
      for (int s = 0; s < n - 1; ++s)
        for (Eigen::Index i = 0; i < f; ++i)
          phi(s * f + i) = t.scenario.phi(t.scenario.faulty()[static_cast<std::size_t>(i)], s);
      const Eigen::VectorXd y = m.stacked();
      const Eigen::VectorXd predicted = model.O * t.x0 + model.J * phi;
      for (int s = 0; s < n; ++s) {
        const double scale = 1.0 + y.segment(rows * s, rows).lpNorm<Eigen::Infinity>();
        CHECK((y - predicted).segment(rows * s, rows).lpNorm<Eigen::Infinity>() <= 1e-10 * scale);
      }
    }
  }
}

TEST_CASE("packet drops equal a row with its neighbor weights removed") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 6 + static_cast<int>(seed % 5);
    const int k = 1 + static_cast<int>(seed % 3);
    const Graph g = build_knn_platoon({n, k});
    const WeightMatrix w = random_weights(g, seed);
    const Eigen::VectorXd x0 = random_state(n, seed);
    const int v = static_cast<int>(seed * 7 % static_cast<std::uint64_t>(n));
    const AdaptiveRun run = simulate_faulty(w, x0, {v}, n, packet_drop_fault);
    const StateTrace silent = simulate_faulty(w.without_neighbor_inputs(v), x0, FaultScenario({}, n));
    REQUIRE(run.trace.size() == silent.size());
    for (std::size_t s = 0; s < silent.size(); ++s) CHECK(run.trace[s] == silent[s]);
  }
}

TEST_CASE("recovery is exact when the fault budget suits the connectivity") {
  for (auto [n, k] : {std::pair{8, 3}, {10, 3}, {10, 5}, {12, 5}}) {
    const int f = max_tolerable_faults(k);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      CAPTURE(n);
      CAPTURE(k);
      CAPTURE(seed);
      const Trial t = random_trial(n, k, f, 1000 + seed);
      const StateTrace trace = simulate_faulty(t.w, t.x0, t.scenario);
      const MeasurementTrace m = measure(t.graph, trace, t.observer, default_horizon(t.graph));
      const RecoveryResult r = recover_initial_state(m, t.w, f);
      REQUIRE(r.unique());
      CHECK((r.x0 - t.x0).lpNorm<Eigen::Infinity>() < 1e-6);
    }
  }
}

TEST_CASE("a unique recovery replays to the observed measurements") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Trial t = random_trial(10, 3, 1, 500 + seed);
    const StateTrace trace = simulate_faulty(t.w, t.x0, t.scenario);
    const MeasurementTrace m = measure(t.graph, trace, t.observer, 10);
    const RecoveryResult r = recover_initial_state(m, t.w, 1);
    REQUIRE(r.unique());
    const double rho = std::max(1.0, t.w.matrix().cwiseAbs().rowwise().sum().maxCoeff());
    for (const RecoveryCandidate& c : r.consistent) {
      const StateTrace replay = simulate_faulty(t.w, c.x0, c.scenario(10));
      const MeasurementTrace again = measure(t.graph, replay, t.observer, 10);
      double scale = 1.0;
      for (int s = 0; s < 10; ++s, scale *= rho) {
        CHECK((again.y[static_cast<std::size_t>(s)] - m.y[static_cast<std::size_t>(s)])
                  .lpNorm<Eigen::Infinity>() <= 10.0 * r.tolerance * scale);
      }
    }
  }
}

TEST_CASE("consistent candidates come size first, then lexicographically") {
  const Trial t = random_trial(8, 3, 0, 77);
  const StateTrace trace = simulate_faulty(t.w, t.x0, t.scenario);
  const MeasurementTrace m = measure(t.graph, trace, t.observer, 8);
  const RecoveryResult r = recover_initial_state(m, t.w, 1);
  REQUIRE(!r.consistent.empty());
  CHECK(r.consistent.front().fault_set.empty());
  for (std::size_t i = 1; i < r.consistent.size(); ++i) {
    const auto& a = r.consistent[i - 1].fault_set;
    const auto& b = r.consistent[i].fault_set;
    CHECK((a.size() < b.size() || (a.size() == b.size() && a < b)));
  }
  for (const auto& c : r.consistent)
    CHECK(std::find(c.fault_set.begin(), c.fault_set.end(), t.observer) == c.fault_set.end());
}

TEST_CASE("data no candidate can explain raises a model mismatch") {
  const Trial t = random_trial(8, 3, 2, 5);
  const StateTrace trace = simulate_faulty(t.w, t.x0, t.scenario);
  const MeasurementTrace m = measure(t.graph, trace, t.observer, 8);
  CHECK_THROWS_AS(recover_initial_state(m, t.w, 0), ModelMismatch);
}

TEST_CASE("an undersized network can leave the initial state ambiguous") {
  // In a path, a faulty neighbour can mask everything behind it.
  const Graph g = path_graph(6);
  const WeightMatrix w = random_weights(g, 3);
  const Eigen::VectorXd x0 = random_state(6, 3);
  const std::vector<FaultInjection> inj{{1, 0, 1.0}, {1, 2, -2.0}};
  const StateTrace trace = simulate_faulty(w, x0, FaultScenario({1}, 6, inj));
  const RecoveryResult r = recover_initial_state(measure(g, trace, 0, 6), w, 1);
  CHECK_FALSE(r.unique());
}

TEST_CASE("error curve ends at zero for a recoverable scenario") {
  const Trial t = random_trial(10, 3, 1, 2024);
  const StateTrace trace = simulate_faulty(t.w, t.x0, t.scenario);
  const MeasurementTrace m = measure(t.graph, trace, t.observer, 10);
  const std::vector<double> errors = estimation_error_curve(m, t.w, 1, t.x0);
  REQUIRE(errors.size() == 10);
  CHECK(errors.front() > 1e-3);
  CHECK(errors.back() < 1e-6);
}

TEST_CASE("measurement truncation keeps the leading steps") {
  const Trial t = random_trial(8, 2, 0, 9);
  const MeasurementTrace m = measure(t.graph, simulate_faulty(t.w, t.x0, t.scenario), t.observer, 8);
  const MeasurementTrace head = m.truncated(3);
  CHECK(head.horizon() == 3);
  CHECK(head.stacked() == m.stacked().head(head.stacked().size()));
}

}  // TEST_SUITE
