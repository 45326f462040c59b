#include "platoon/formation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "platoon/connectivity.hpp"
#include "platoon/errors.hpp"

namespace platoon {

Eigen::VectorXd FormationSystem::desired_positions() const {
  Eigen::VectorXd p(vehicles());
  for (int i = 0; i < vehicles(); ++i) p(i) = -d0 * i;
  return p;
}

Eigen::VectorXd FormationSystem::desired_state() const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * vehicles());
  x.head(vehicles()) = desired_positions();
  return x;
}

FormationSystem build_formation(const Graph& g, double kp, double ku, double d0) {
  if (!(kp > 0.0) || !(ku > 0.0)) throw ValidationError("gains kp and ku must be positive");
  if (g.order() < 2 || !g.is_connected())
    throw ValidationError("formation control needs a connected graph with n >= 2");

  const int n = g.order();
  FormationSystem sys;
  sys.graph = g;
  sys.kp = kp;
  sys.ku = ku;
  sys.d0 = d0;

  sys.delta = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j : g.neighbors(i)) sys.delta(i) += sys.spacing_offset(i, j);

  const Eigen::MatrixXd l = g.laplacian();
  sys.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  sys.A.topRightCorner(n, n).setIdentity();
  sys.A.bottomLeftCorner(n, n) = -kp * l;
  sys.A.bottomRightCorner(n, n) = -ku * l;

  sys.affine = Eigen::VectorXd::Zero(2 * n);
  sys.affine.tail(n) = kp * sys.delta;

  sys.F = Eigen::MatrixXd::Zero(2 * n, n);
  sys.F.bottomRows(n).setIdentity();

  sys.C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()), 2 * n);
  sys.C.leftCols(n) = g.incidence().cast<double>().transpose();
  return sys;
}

std::string to_string(HinfBranch b) {
  return b == HinfBranch::UnderdampedPeak ? "underdamped-peak" : "static-gain";
}

ClosedFormHinf hinf_closed_form(double lambda2, double kp, double ku) {
  if (!(lambda2 > 0.0)) throw ValidationError("closed-form H-infinity norm needs lambda2 > 0");
  if (lambda2 * ku * ku / (2.0 * kp) <= 1.0) {
    return {2.0 / (ku * lambda2 * std::sqrt(4.0 * kp - ku * ku * lambda2)),
            HinfBranch::UnderdampedPeak};
  }
  return {1.0 / (kp * std::sqrt(lambda2)), HinfBranch::StaticGain};
}

double modal_hinf(double lambda, double kp, double ku) {
  if (lambda < 0.0) throw ValidationError("modal norm needs lambda >= 0");
  if (lambda == 0.0) return 0.0;
  return hinf_closed_form(lambda, kp, ku).value;
}

double modal_peak_frequency(double lambda, double kp, double ku) {
  const double sq = kp * lambda - 0.5 * ku * ku * lambda * lambda;
  return sq > 0.0 ? std::sqrt(sq) : 0.0;
}

namespace {

using Complex = std::complex<double>;

// Evaluates sigma_max of the disturbance-to-output map at many frequencies.
class GainEvaluator {
 public:
  GainEvaluator(const FormationSystem& sys, PerformanceOutput output) : n_(sys.vehicles()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.graph.laplacian());
    const Eigen::VectorXd lam = eig.eigenvalues();
    const Eigen::MatrixXd& v = eig.eigenvectors();

    Eigen::MatrixXd position_output;
    if (output == PerformanceOutput::Incidence) {
      position_output = sys.C.leftCols(n_);
    } else {
      Eigen::VectorXd root = lam.cwiseMax(0.0).cwiseSqrt();
      root(0) = 0.0;  // the consensus mode
      position_output = v * root.asDiagonal() * v.transpose();
    }
    c_ = Eigen::MatrixXcd::Zero(position_output.rows(), 2 * n_);
    c_.leftCols(n_) = position_output.cast<Complex>();
    a_ = sys.A.cast<Complex>();
    f_ = sys.F.cast<Complex>();

    Eigen::VectorXd pinv = Eigen::VectorXd::Zero(n_);
    for (int i = 1; i < n_; ++i) pinv(i) = 1.0 / lam(i);
    dc_ = position_output * v * pinv.asDiagonal() * v.transpose() / sys.kp;
  }

  double operator()(double omega) const {
    Eigen::MatrixXcd g;
    if (omega == 0.0) {
      g = dc_.cast<Complex>();
    } else {
      Eigen::MatrixXcd m = -a_;
      m.diagonal().array() += Complex(0.0, omega);
      g = c_ * m.partialPivLu().solve(f_);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g.adjoint() * g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
  }

 private:
  int n_;
  Eigen::MatrixXcd a_;
  Eigen::MatrixXcd f_;
  Eigen::MatrixXcd c_;
  Eigen::MatrixXd dc_;
};

template <typename Fn>
std::pair<double, double> golden_max(const Fn& fn, double a, double b, int iterations = 80) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c);
  double fd = fn(d);
  for (int it = 0; it < iterations && b - a > 1e-14 * b; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  return fc > fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

double frequency_gain(const FormationSystem& sys, double omega, PerformanceOutput output) {
  return GainEvaluator(sys, output)(omega);
}

SweepResult hinf_sweep(const FormationSystem& sys, const SweepGrid& grid, PerformanceOutput output) {
  const GainEvaluator gain(sys, output);

  std::vector<double> omegas{0.0};
  const double lmin = std::log10(grid.min_frequency);
  const double lmax = std::log10(grid.max_frequency);
  for (int i = 0; i < grid.log_points; ++i) {
    double t = grid.log_points > 1 ? static_cast<double>(i) / (grid.log_points - 1) : 0.0;
    omegas.push_back(std::pow(10.0, lmin + t * (lmax - lmin)));
  }
  const Eigen::VectorXd lam = laplacian_spectrum(sys.graph);
  for (int i = 1; i < lam.size(); ++i) {
    const double peak = modal_peak_frequency(lam(i), sys.kp, sys.ku);
    if (peak <= 0.0) continue;
    for (int p = 0; p < grid.window_points; ++p) {
      double t = grid.window_points > 1 ? static_cast<double>(p) / (grid.window_points - 1) : 0.5;
      omegas.push_back(peak * (1.0 - grid.window + 2.0 * grid.window * t));
    }
  }
  // Off-DC points below the grid floor are dropped: there the rigid-body
  // pole's 1/omega^2 amplifies rounding in the solve past the true gain.
  std::erase_if(omegas, [&](double w) { return w != 0.0 && w < grid.min_frequency; });
  std::sort(omegas.begin(), omegas.end());
  omegas.erase(std::unique(omegas.begin(), omegas.end()), omegas.end());

  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const double value = gain(omegas[i]);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }

  SweepResult result{best_value, omegas[best]};
  // Never refine toward DC, for the same reason.
  if (grid.refine && best > 0) {
    const double lo = omegas[best - 1] > 0.0 ? omegas[best - 1] : omegas[best];
    const double hi = best + 1 < omegas.size() ? omegas[best + 1] : omegas[best];
    auto [w, value] = golden_max(gain, lo, hi);
    if (value > result.value) result = {value, w};
  }
  return result;
}

HinfReport hinf_report(const FormationSystem& sys, const SweepGrid& grid) {
  HinfReport report;
  const Eigen::VectorXd lam = laplacian_spectrum(sys.graph);
  report.lambda2 = lam(1);
  const auto closed = hinf_closed_form(report.lambda2, sys.kp, sys.ku);
  report.closed_form = closed.value;
  report.branch = closed.branch;
  for (int i = 0; i < lam.size(); ++i) {
    const double l = i == 0 ? 0.0 : lam(i);
    report.per_mode.push_back({l, modal_hinf(l, sys.kp, sys.ku)});
  }
  const auto sweep = hinf_sweep(sys, grid);
  report.sweep_value = sweep.value;
  report.peak_frequency = sweep.peak_frequency;
  return report;
}

Disturbance no_disturbance(int n) {
  return [n](double) { return Eigen::VectorXd::Zero(n).eval(); };
}

Disturbance cosine_on_vehicle(int n, int vehicle, double amplitude, double omega) {
  if (vehicle < 0 || vehicle >= n) throw ValidationError("disturbed vehicle out of range");
  return [=](double t) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    w(vehicle) = amplitude * std::cos(omega * t);
    return w;
  };
}

Eigen::VectorXcd formation_poles(const FormationSystem& sys) {
  Eigen::EigenSolver<Eigen::MatrixXd> eig(sys.A, false);
  return eig.eigenvalues();
}

FormationTrace simulate_formation(const FormationSystem& sys, const Disturbance& w, double duration,
                                  double h, int record_every,
                                  const std::optional<Eigen::VectorXd>& initial) {
  if (!(h > 0.0)) throw ValidationError("integration step must be positive");
  if (record_every < 1) throw ValidationError("record_every must be >= 1");
  const double fastest = formation_poles(sys).cwiseAbs().maxCoeff();
  // RK4's stability region reaches about 2.78 along the negative real axis
  if (h * fastest > 2.5) {
    throw ValidationError("step h=" + std::to_string(h) + " is unstable for poles of magnitude " +
                          std::to_string(fastest));
  }

  const int n = sys.vehicles();
  Eigen::VectorXd x = initial ? *initial : sys.desired_state();
  if (x.size() != 2 * n) throw ValidationError("initial state must have 2n entries");
  const Eigen::MatrixXd bt = sys.C.leftCols(n);
  const Eigen::VectorXd desired_spacing = bt * sys.desired_positions();

  auto rhs = [&](double t, const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return sys.A * s + sys.affine + sys.F * w(t);
  };

  FormationTrace trace;
  auto record = [&](double t) {
    trace.time.push_back(t);
    trace.positions.push_back(x.head(n));
    trace.velocities.push_back(x.tail(n));
    trace.spacing_error.push_back(bt * x.head(n) - desired_spacing);
  };

  const auto steps = static_cast<long>(std::llround(duration / h));
  record(0.0);
  for (long s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    const Eigen::VectorXd k1 = rhs(t, x);
    const Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if ((s + 1) % record_every == 0 || s + 1 == steps) record(static_cast<double>(s + 1) * h);
  }
  return trace;
}

double steady_state_gain(const FormationSystem& sys, int vehicle, double omega, double h) {
  // Slowest decay among the modes visible in the spacing errors. The
  // rigid-body mode (lambda_1 = 0) is a double pole at 0 and is skipped.
  const Eigen::VectorXd lam = laplacian_spectrum(sys.graph);
  double slowest = std::numeric_limits<double>::infinity();
  for (int i = 1; i < lam.size(); ++i) {
    const Complex b(sys.ku * lam(i), 0.0);
    const Complex disc = std::sqrt(b * b - 4.0 * sys.kp * lam(i));
    slowest = std::min({slowest, -(-b + disc).real() / 2.0, -(-b - disc).real() / 2.0});
  }
  if (!(slowest > 0.0)) throw ValidationError("formation is not asymptotically stable");

  const double settle = 30.0 / slowest;  // transients below e^-30
  const double period = omega > 0.0 ? 2.0 * std::numbers::pi / omega : 0.0;
  const auto trace = simulate_formation(sys, cosine_on_vehicle(sys.vehicles(), vehicle, 1.0, omega),
                                        settle + period, h);

  const auto edges = static_cast<Eigen::Index>(sys.graph.size());
  if (omega == 0.0) return trace.spacing_error.back().norm();

  Eigen::VectorXd hi = Eigen::VectorXd::Constant(edges, -std::numeric_limits<double>::infinity());
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(edges, std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < trace.time.size(); ++s) {
    if (trace.time[s] < settle) continue;
    hi = hi.cwiseMax(trace.spacing_error[s]);
    lo = lo.cwiseMin(trace.spacing_error[s]);
  }
  return (0.5 * (hi - lo)).norm();
}

std::vector<HinfGridRow> hinf_grid(std::span<const int> n_values, std::span<const int> k_values,
                                   double kp, double ku, int sweep_stride) {
  std::vector<HinfGridRow> rows;
  for (int n : n_values) {
    for (int k : k_values) {
      if (k < 1 || k > n - 1) continue;
      const PlatoonSpec spec{n, k};
      const Graph g = build_knn_platoon(spec);
      HinfGridRow row;
      row.n = n;
      row.k = k;
      row.kp = kp;
      row.ku = ku;
      row.lambda2 = algebraic_connectivity(g);
      const auto bounds = lambda2_bounds(spec);
      row.lower = bounds.lower;
      row.upper = bounds.upper;
      const auto closed = hinf_closed_form(row.lambda2, kp, ku);
      row.hinf = closed.value;
      row.branch = closed.branch;
      if (sweep_stride > 0 && rows.size() % static_cast<std::size_t>(sweep_stride) == 0)
        row.sweep = hinf_sweep(build_formation(g, kp, ku)).value;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace platoon
