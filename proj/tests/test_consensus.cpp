#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "platoon/connectivity.hpp"
#include "platoon/consensus.hpp"
#include "platoon/errors.hpp"
#include "platoon/estimation.hpp"

using namespace platoon;

namespace {

// A value above `own` is dropped when fewer than f others are more extreme
// than it (larger, or equal with a higher id); symmetric below.
std::set<int> retained_by_rank(double own, const std::vector<NeighborValue>& nb, int f) {
  std::set<int> kept;
  for (const auto& a : nb) {
    int more_extreme = 0;
    for (const auto& b : nb) {
      if (a.value > own && b.value > own)
        more_extreme += b.value > a.value || (b.value == a.value && b.id > a.id);
      if (a.value < own && b.value < own)
        more_extreme += b.value < a.value || (b.value == a.value && b.id > a.id);
    }
    if (a.value == own || more_extreme >= f) kept.insert(a.id);
  }
  return kept;
}

std::vector<AdversaryModel> with_strategy(const std::vector<int>& vehicles, int kind, std::uint64_t seed) {
  std::vector<AdversaryModel> out;
  for (int v : vehicles) {
    AdversaryModel a;
    a.vehicle = v;
    switch (kind) {
      case 0: a.strategy = strategy::Constant{25.0}; break;
      case 1: a.strategy = strategy::Ramp{-3.0, 0.2}; break;
      case 2: a.strategy = strategy::Sinusoid{40.0, 0.7, 0.1}; break;
      default: a.strategy = strategy::SeededRandom{-50.0, 50.0, seed + static_cast<std::uint64_t>(v)}; break;
    }
    out.push_back(a);
  }
  return out;
}

std::vector<int> random_local_placement(const Graph& g, int f, std::mt19937_64& rng) {
  const int n = g.order();
  const int target = std::uniform_int_distribution<int>(1, 2)(rng);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<int> set;
    while (static_cast<int>(set.size()) < target) {
      const int v = std::uniform_int_distribution<int>(0, n - 1)(rng);
      if (std::find(set.begin(), set.end(), v) == set.end()) set.push_back(v);
    }
    std::sort(set.begin(), set.end());
    if (is_f_local(g, set, f)) return set;
  }
  return {std::uniform_int_distribution<int>(0, n - 1)(rng)};
}

}  // namespace

TEST_SUITE("consensus") {

TEST_CASE("trimming drops strict extremes and breaks ties by index") {
  const std::vector<NeighborValue> nb{{1, 5.0}, {2, 5.0}, {3, -1.0}, {4, 0.0}};
  const auto kept = wmsr_retained(0.0, nb, 1);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == 1);
  CHECK(kept[1].id == 4);
  CHECK(wmsr_update(0.0, nb, 1) == doctest::Approx(5.0 / 3.0));
  CHECK(wmsr_retained(0.0, nb, 0).size() == 4);
  CHECK(wmsr_retained(0.0, nb, 3).size() == 1);
  CHECK_THROWS_AS(wmsr_retained(0.0, nb, -1), ValidationError);
}

TEST_CASE("values equal to one's own are never trimmed") {
  const std::vector<NeighborValue> nb{{0, 2.0}, {1, 2.0}, {2, 2.0}};
  CHECK(wmsr_retained(2.0, nb, 2).size() == 3);
  CHECK(wmsr_update(2.0, nb, 2) == 2.0);
}

TEST_CASE("trimming agrees with the rank formulation") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> small(-3, 3);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 1 + trial % 8;
    const int f = trial % 4;
    std::vector<NeighborValue> nb;
    for (int j = 0; j < m; ++j) nb.push_back({j * 3 % 11, static_cast<double>(small(rng))});
    const double own = small(rng);
    std::set<int> got;
    for (const auto& v : wmsr_retained(own, nb, f)) got.insert(v.id);
    CHECK(got == retained_by_rank(own, nb, f));
  }
}

TEST_CASE("f-local sets") {
  const Graph g = build_knn_platoon({10, 3});
  const std::vector<int> ends{0, 9};
  const std::vector<int> close{0, 5};
  CHECK(is_f_local(g, ends, 1));
  CHECK_FALSE(is_f_local(g, close, 1));
  CHECK(is_f_local(g, close, 2));
}

TEST_CASE("adversary strategies") {
  CHECK(AdversaryModel{0, strategy::Constant{3.0}}.broadcast(17) == 3.0);
  CHECK(AdversaryModel{0, strategy::Ramp{1.0, 0.5}}.broadcast(4) == 3.0);
  CHECK(AdversaryModel{0, strategy::Sinusoid{2.0, 0.0, 0.0}}.broadcast(9) == 0.0);
  const AdversaryModel r{0, strategy::SeededRandom{-1.0, 1.0, 12}};
  CHECK(r.broadcast(3) == r.broadcast(3));
  CHECK(r.broadcast(3) != r.broadcast(4));
  CHECK(std::abs(r.broadcast(3)) <= 1.0);
}

TEST_CASE("resilient consensus on sufficiently robust platoons") {
  for (auto [n, k] : {std::pair{10, 3}, {12, 5}}) {
    const Graph g = build_knn_platoon({n, k});
    const int f = max_tolerable_faults(k);
    std::mt19937_64 rng(static_cast<std::uint64_t>(100 * n + k));
    for (int kind = 0; kind < 4; ++kind) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(n);
        CAPTURE(kind);
        CAPTURE(seed);
        const auto placement = random_local_placement(g, f, rng);
        const auto adversaries = with_strategy(placement, kind, seed);
        const Eigen::VectorXd x0 = random_state(n, seed);
        const ConsensusTrace t = run_wmsr(g, x0, adversaries, f);
        CHECK(t.adversaries_f_local);
        CHECK(t.safety_violations == 0);
        REQUIRE(t.converged_at.has_value());
        CHECK(*t.converged_at <= 500);
        const auto [lo, hi] = t.normal_hull(0);
        const auto [flo, fhi] = t.normal_hull(t.steps());
        CHECK(flo >= lo);
        CHECK(fhi <= hi);
      }
    }
  }
}

TEST_CASE("adversaries start from their own broadcast") {
  const Graph g = build_knn_platoon({6, 2});
  const std::vector<AdversaryModel> adv{{2, strategy::Constant{99.0}}};
  const ConsensusTrace t = run_wmsr(g, Eigen::VectorXd::Zero(6), adv, 1, 5);
  CHECK(t.values[0](2) == 99.0);
  CHECK(t.normal == std::vector<int>{0, 1, 3, 4, 5});
  CHECK(t.adversaries == std::vector<int>{2});
  for (int i : t.normal) CHECK(t.values.back()(i) == 0.0);
}

TEST_CASE("non-local adversary sets produce a warning") {
  const Graph g = build_knn_platoon({10, 3});
  const auto adv = with_strategy({3, 4}, 0, 0);
  const ConsensusTrace t = run_wmsr(g, random_state(10, 1), adv, 1, 10);
  CHECK_FALSE(t.adversaries_f_local);
  CHECK(t.warnings.size() == 1);
}

TEST_CASE("identical inputs give bitwise identical traces") {
  const Graph g = build_knn_platoon({10, 2});
  const auto adv = with_strategy({4}, 3, 17);
  const ConsensusTrace a = run_wmsr(g, random_state(10, 17), adv, 1);
  const ConsensusTrace b = run_wmsr(g, random_state(10, 17), adv, 1);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t s = 0; s < a.values.size(); ++s) CHECK(a.values[s] == b.values[s]);
  CHECK(a.converged_at == b.converged_at);
}

TEST_CASE("safety holds on every run, including P(10,2)") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto adv = with_strategy({4}, static_cast<int>(seed % 4), seed);
    const ConsensusTrace t = run_wmsr(build_knn_platoon({10, 2}), random_state(10, seed), adv, 1);
    CHECK(t.safety_violations == 0);
  }
}

TEST_CASE("invalid consensus inputs") {
  const Graph g = path_graph(4);
  CHECK_THROWS_AS(run_wmsr(g, Eigen::VectorXd::Zero(3), {}, 0), ValidationError);
  const std::vector<AdversaryModel> twice{{1, strategy::Constant{}}, {1, strategy::Constant{}}};
  CHECK_THROWS_AS(run_wmsr(g, Eigen::VectorXd::Zero(4), twice, 1), ValidationError);
  const std::vector<AdversaryModel> outside{{4, strategy::Constant{}}};
  CHECK_THROWS_AS(run_wmsr(g, Eigen::VectorXd::Zero(4), outside, 1), ValidationError);
}

}  // TEST_SUITE
