#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "oracles.hpp"
#include "platoon/connectivity.hpp"
#include "platoon/errors.hpp"
#include "platoon/formation.hpp"

using namespace platoon;

namespace {

struct Gains {
  double kp;
  double ku;
};

const std::vector<int> kGridN{5, 10, 20};
const std::vector<int> kGridK{1, 2, 4};
const std::vector<Gains> kGridGains{{1.0, 1.0}, {5.0, 10.0}, {10.0, 2.0}};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_SUITE("formation") {

TEST_CASE("state-space blocks") {
  const Graph g = build_knn_platoon({5, 2});
  const FormationSystem sys = build_formation(g, 2.0, 3.0, 10.0);
  const Eigen::MatrixXd l = g.laplacian();
  CHECK(sys.A.topLeftCorner(5, 5).isZero());
  CHECK(sys.A.topRightCorner(5, 5).isIdentity());
  CHECK(sys.A.bottomLeftCorner(5, 5).isApprox(-2.0 * l));
  CHECK(sys.A.bottomRightCorner(5, 5).isApprox(-3.0 * l));
  CHECK(sys.F.topRows(5).isZero());
  CHECK(sys.F.bottomRows(5).isIdentity());
  CHECK(sys.C.leftCols(5) == g.incidence().transpose().cast<double>());
  CHECK(sys.C.rightCols(5).isZero());
  CHECK(sys.spacing_offset(1, 3) == 20.0);
  CHECK(sys.affine.head(5).isZero());
}

TEST_CASE("the desired formation is an equilibrium") {
  for (int k = 1; k <= 3; ++k) {
    const FormationSystem sys = build_formation(build_knn_platoon({8, k}), 5.0, 10.0);
    const Eigen::VectorXd xd = sys.desired_state();
    CHECK((sys.A * xd + sys.affine).lpNorm<Eigen::Infinity>() < 1e-12);
    const Eigen::VectorXd p = sys.desired_positions();
    for (int i = 0; i < 8; ++i) CHECK(p(i) == -10.0 * i);
  }
}

TEST_CASE("invalid formation inputs") {
  CHECK_THROWS_AS(build_formation(Graph(4, {{0, 1}, {2, 3}}), 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(build_formation(path_graph(4), 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(build_formation(path_graph(4), 1.0, -1.0), ValidationError);
  CHECK_THROWS_AS(hinf_closed_form(0.0, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(modal_hinf(-1.0, 1.0, 1.0), ValidationError);
}

TEST_CASE("modal norm matches a dense frequency scan") {
  for (double lambda : {0.01, 0.1, 0.5, 1.0, 3.0, 9.0}) {
    for (const Gains& gains : kGridGains) {
      CAPTURE(lambda);
      CAPTURE(gains.kp);
      CHECK(rel(modal_hinf(lambda, gains.kp, gains.ku), oracle::modal_peak_scan(lambda, gains.kp, gains.ku)) < 1e-6);
    }
  }
  CHECK(modal_hinf(0.0, 1.0, 1.0) == 0.0);
}

TEST_CASE("closed form is continuous across the branch boundary") {
  for (const Gains& gains : kGridGains) {
    const double boundary = 2.0 * gains.kp / (gains.ku * gains.ku);
    const ClosedFormHinf at = hinf_closed_form(boundary, gains.kp, gains.ku);
    const double static_gain = 1.0 / (gains.kp * std::sqrt(boundary));
    const double peak = 2.0 / (gains.ku * boundary * std::sqrt(4.0 * gains.kp - gains.ku * gains.ku * boundary));
    CHECK(rel(static_gain, peak) < 1e-12);
    CHECK(rel(at.value, static_gain) < 1e-12);
    const double below = hinf_closed_form(boundary * (1 - 1e-9), gains.kp, gains.ku).value;
    const double above = hinf_closed_form(boundary * (1 + 1e-9), gains.kp, gains.ku).value;
    CHECK(rel(below, at.value) < 1e-8);
    CHECK(rel(above, at.value) < 1e-8);
    CHECK(hinf_closed_form(boundary * 0.5, gains.kp, gains.ku).branch == HinfBranch::UnderdampedPeak);
    CHECK(hinf_closed_form(boundary * 2.0, gains.kp, gains.ku).branch == HinfBranch::StaticGain);
  }
}

TEST_CASE("closed form agrees with the frequency sweep on the grid") {
  for (int n : kGridN) {
    for (int k : kGridK) {
      if (k >= n) continue;
      for (const Gains& gains : kGridGains) {
        CAPTURE(n);
        CAPTURE(k);
        CAPTURE(gains.kp);
        const FormationSystem sys = build_formation(build_knn_platoon({n, k}), gains.kp, gains.ku);
        const double l2 = algebraic_connectivity(sys.graph);
        const double closed = hinf_closed_form(l2, gains.kp, gains.ku).value;
        const SweepResult incidence = hinf_sweep(sys);
        const SweepResult root = hinf_sweep(sys, {}, PerformanceOutput::LaplacianSqrt);
        CHECK(rel(incidence.value, closed) <= 1e-3);
        CHECK(rel(root.value, incidence.value) <= 1e-6);
      }
    }
  }
}

TEST_CASE("the norm is the largest modal norm, reached at lambda2") {
  for (int n : kGridN) {
    for (int k : kGridK) {
      for (const Gains& gains : kGridGains) {
        const Eigen::VectorXd lam = laplacian_spectrum(build_knn_platoon({n, k}));
        double best = 0.0;
        for (Eigen::Index i = 1; i < lam.size(); ++i) best = std::max(best, modal_hinf(lam(i), gains.kp, gains.ku));
        const double closed = hinf_closed_form(lam(1), gains.kp, gains.ku).value;
        CHECK(rel(best, closed) <= 1e-9);
        CHECK(rel(modal_hinf(lam(1), gains.kp, gains.ku), closed) <= 1e-9);
      }
    }
  }
}

TEST_CASE("report lists every mode, the rigid one with zero gain") {
  const FormationSystem sys = build_formation(build_knn_platoon({10, 2}), 5.0, 10.0);
  const HinfReport r = hinf_report(sys);
  REQUIRE(r.per_mode.size() == 10);
  CHECK(r.per_mode.front().lambda == 0.0);
  CHECK(r.per_mode.front().norm == 0.0);
  double best = 0.0;
  for (const auto& m : r.per_mode) best = std::max(best, m.norm);
  CHECK(rel(best, r.closed_form) < 1e-12);
  CHECK(rel(r.sweep_value, r.closed_form) < 1e-3);
  CHECK(r.branch == HinfBranch::StaticGain);
  CHECK(r.peak_frequency == 0.0);
}

TEST_CASE("worse with length, better with reach") {
  for (const Gains& gains : kGridGains) {
    for (int k : kGridK) {
      double previous = 0.0;
      for (int n = k + 1; n <= 30; ++n) {
        const double v = hinf_closed_form(algebraic_connectivity(build_knn_platoon({n, k})), gains.kp, gains.ku).value;
        CHECK(v >= previous * (1 - 1e-12));
        previous = v;
      }
    }
    for (int n : kGridN) {
      double previous = INFINITY;
      for (int k = 1; k < n; ++k) {
        const double v = hinf_closed_form(algebraic_connectivity(build_knn_platoon({n, k})), gains.kp, gains.ku).value;
        CHECK(v <= previous * (1 + 1e-12));
        previous = v;
      }
    }
  }
}

TEST_CASE("lambda2 bounds bracket the static-gain value") {
  int checked = 0;
  for (const Gains& gains : kGridGains) {
    for (int n = 4; n <= 30; ++n) {
      for (int k = 1; k <= n / 2; ++k) {
        const Lambda2Bounds b = lambda2_bounds({n, k});
        const double l2 = algebraic_connectivity(build_knn_platoon({n, k}));
        auto is_static = [&](double l) { return l > 0 && hinf_closed_form(l, gains.kp, gains.ku).branch == HinfBranch::StaticGain; };
        if (!(is_static(l2) && is_static(b.lower) && is_static(b.upper))) continue;
        const double v = hinf_closed_form(l2, gains.kp, gains.ku).value;
        CHECK(1.0 / (gains.kp * std::sqrt(b.upper)) <= v * (1 + 1e-12));
        CHECK(v <= 1.0 / (gains.kp * std::sqrt(b.lower)) * (1 + 1e-12));
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("twenty-vehicle platoon values") {
  auto value = [](int k) { return hinf_closed_form(algebraic_connectivity(build_knn_platoon({20, k})), 5.0, 10.0); };
  CHECK(value(1).value == doctest::Approx(1.94).epsilon(0.01));
  CHECK(value(1).branch == HinfBranch::UnderdampedPeak);
  CHECK(value(2).value < 1.0);
  CHECK(value(4).value < 0.5);
}

TEST_CASE("frequency gain at DC is the pseudo-inverse limit") {
  const FormationSystem sys = build_formation(build_knn_platoon({6, 2}), 5.0, 10.0);
  const Eigen::MatrixXd l = sys.graph.laplacian();
  const Eigen::MatrixXd pinv = l.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd g0 = sys.graph.incidence().transpose().cast<double>() * pinv / 5.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g0);
  CHECK(rel(frequency_gain(sys, 0.0), svd.singularValues()(0)) < 1e-12);
  CHECK(rel(frequency_gain(sys, 1e-4), frequency_gain(sys, 0.0)) < 1e-6);
}

TEST_CASE("RK4 trajectory matches the matrix exponential") {
  const FormationSystem sys = build_formation(build_knn_platoon({5, 2}), 5.0, 10.0);
  Eigen::VectorXd x0 = sys.desired_state();
  x0(2) += 1.5;
  x0(6) -= 0.5;
  const double duration = 2.0;
  const FormationTrace t = simulate_formation(sys, no_disturbance(5), duration, 1e-3, 100, x0);
  const Eigen::MatrixXd expm = (sys.A * duration).exp();
  const Eigen::VectorXd exact = sys.desired_state() + expm * (x0 - sys.desired_state());
  CHECK(std::abs(t.time.back() - duration) < 1e-12);
  CHECK((t.positions.back() - exact.head(5)).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK((t.velocities.back() - exact.tail(5)).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("an undisturbed formation does not drift") {
  const FormationSystem sys = build_formation(build_knn_platoon({10, 3}), 5.0, 10.0);
  const FormationTrace t = simulate_formation(sys, no_disturbance(10), 20.0, 1e-3, 1000);
  for (std::size_t s = 0; s < t.time.size(); ++s) {
    CHECK(t.spacing_error[s].lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK((t.positions[s] - sys.desired_positions()).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("integration steps outside the stability region are refused") {
  const FormationSystem sys = build_formation(complete_graph(10), 5.0, 10.0);
  CHECK_THROWS_AS(simulate_formation(sys, no_disturbance(10), 1.0, 0.1), ValidationError);
}

TEST_CASE("steady-state amplification stays under the norm") {
  const FormationSystem p10 = build_formation(build_knn_platoon({10, 2}), 5.0, 10.0);
  const double bound10 = hinf_closed_form(algebraic_connectivity(p10.graph), 5.0, 10.0).value;
  for (int v : {0, 4}) CHECK(steady_state_gain(p10, v, 0.0) <= bound10 * 1.02);

  const FormationSystem p20 = build_formation(path_graph(20), 5.0, 10.0);
  const double l2 = algebraic_connectivity(p20.graph);
  const double bound20 = hinf_closed_form(l2, 5.0, 10.0).value;
  const double w = modal_peak_frequency(l2, 5.0, 10.0);
  CHECK(w > 0.0);
  CHECK(steady_state_gain(p20, 0, w, 1e-2) <= bound20 * 1.02);
}

TEST_CASE("hinf grid rows") {
  const std::vector<int> ns{5, 6};
  const std::vector<int> ks{1, 2, 5};
  const auto rows = hinf_grid(ns, ks, 5.0, 10.0, 1);
  CHECK(rows.size() == 5);
  for (const auto& r : rows) {
    CHECK(r.k < r.n);
    REQUIRE(r.sweep.has_value());
    CHECK(rel(*r.sweep, r.hinf) < 1e-3);
    const Lambda2Bounds b = lambda2_bounds({r.n, r.k});
    CHECK(r.lower == b.lower);
    CHECK(r.upper == b.upper);
  }
}

}  // TEST_SUITE
