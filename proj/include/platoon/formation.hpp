#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "platoon/graph.hpp"

namespace platoon {

/// Double-integrator formation under the consensus-type spacing law
///   p_i'' = sum_j kp (p_j - p_i + D_ij) + ku (u_j - u_i) + w_i,
/// written as x' = A x + affine + F w with x = (p, u) and D_ij = d0 (j - i).
struct FormationSystem {
  Graph graph;
  double kp = 0.0;
  double ku = 0.0;
  double d0 = 0.0;
  Eigen::VectorXd delta;   // D_i = sum_{j in N_i} D_ij
  Eigen::MatrixXd A;       // [[0, I], [-kp L, -ku L]]
  Eigen::VectorXd affine;  // [0; kp D]
  Eigen::MatrixXd F;       // [0; I]
  Eigen::MatrixXd C;       // [B^T, 0], one row per edge

  int vehicles() const { return graph.order(); }
  double spacing_offset(int i, int j) const { return d0 * (j - i); }

  /// p_i = -d0 * i: vehicle 0 leads, each follower d0 behind the previous.
  Eigen::VectorXd desired_positions() const;
  /// (desired positions, zero velocities)
  Eigen::VectorXd desired_state() const;
};

/// Throws ValidationError unless kp, ku > 0 and g is connected.
FormationSystem build_formation(const Graph& g, double kp, double ku, double d0 = 10.0);

enum class HinfBranch { UnderdampedPeak, StaticGain };

std::string to_string(HinfBranch b);

struct ClosedFormHinf {
  double value = 0.0;
  HinfBranch branch = HinfBranch::StaticGain;
};

/// ||G||_inf of the whole formation as a function of lambda_2:
///   lambda ku^2 / (2 kp) <= 1:  2 / (ku lambda sqrt(4 kp - ku^2 lambda))
///   otherwise:                  1 / (kp sqrt(lambda))
/// Throws ValidationError for lambda2 <= 0.
ClosedFormHinf hinf_closed_form(double lambda2, double kp, double ku);

/// Peak gain of sqrt(lambda) / (s^2 + ku lambda s + kp lambda); 0 for lambda = 0.
double modal_hinf(double lambda, double kp, double ku);

/// sqrt(kp lambda - ku^2 lambda^2 / 2) when that is real and positive, else 0
/// (the modal gain then peaks at DC).
double modal_peak_frequency(double lambda, double kp, double ku);

/// Which output the sweep measures: spacing errors B^T P, or L^{1/2} P.
enum class PerformanceOutput { Incidence, LaplacianSqrt };

/// sigma_max(C (j omega I - A)^{-1} F). At omega = 0 the limit
/// C_P L^+ / kp is used, since the rigid-body mode is invisible to C.
double frequency_gain(const FormationSystem& sys, double omega,
                      PerformanceOutput output = PerformanceOutput::Incidence);

struct SweepGrid {
  double min_frequency = 1e-3;
  double max_frequency = 1e3;
  int log_points = 2000;
  int window_points = 50;  // per mode, linear over [1 - window, 1 + window] * peak
  double window = 0.2;
  bool refine = true;  // golden-section polish between the best point's neighbors
};

struct SweepResult {
  double value = 0.0;
  double peak_frequency = 0.0;
};

SweepResult hinf_sweep(const FormationSystem& sys, const SweepGrid& grid = {},
                       PerformanceOutput output = PerformanceOutput::Incidence);

struct ModalNorm {
  double lambda = 0.0;
  double norm = 0.0;
};

struct HinfReport {
  double lambda2 = 0.0;
  double closed_form = 0.0;
  HinfBranch branch = HinfBranch::StaticGain;
  double sweep_value = 0.0;
  double peak_frequency = 0.0;  // from the sweep
  std::vector<ModalNorm> per_mode;
};

HinfReport hinf_report(const FormationSystem& sys, const SweepGrid& grid = {});

using Disturbance = std::function<Eigen::VectorXd(double t)>;

Disturbance no_disturbance(int n);
/// amplitude * cos(omega t) on one vehicle (a step when omega = 0).
Disturbance cosine_on_vehicle(int n, int vehicle, double amplitude, double omega);

struct FormationTrace {
  std::vector<double> time;
  std::vector<Eigen::VectorXd> positions;
  std::vector<Eigen::VectorXd> velocities;
  std::vector<Eigen::VectorXd> spacing_error;  // B^T (P - P_desired)
};

/// Classical RK4 with fixed step h, affine term included. Samples every
/// `record_every` steps plus the final time. Starts from the desired
/// formation unless `initial` is given. Throws ValidationError when h times
/// the fastest pole magnitude leaves the RK4 stability interval.
FormationTrace simulate_formation(const FormationSystem& sys, const Disturbance& w, double duration,
                                  double h = 1e-3, int record_every = 1,
                                  const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// Eigenvalues of A.
Eigen::VectorXcd formation_poles(const FormationSystem& sys);

/// Steady-state ||spacing amplitude||_2 / amplitude under a cosine on one
/// vehicle, measured over the last period after transients have decayed.
double steady_state_gain(const FormationSystem& sys, int vehicle, double omega, double h = 1e-3);

struct HinfGridRow {
  int n = 0;
  int k = 0;
  double kp = 0.0;
  double ku = 0.0;
  double lambda2 = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double hinf = 0.0;
  HinfBranch branch = HinfBranch::StaticGain;
  std::optional<double> sweep;  // spot checks only
};

/// One row per valid (n, k). Every `sweep_stride`-th row also gets a
/// frequency-sweep value (0 disables spot checks).
std::vector<HinfGridRow> hinf_grid(std::span<const int> n_values, std::span<const int> k_values,
                                   double kp, double ku, int sweep_stride = 0);

}  // namespace platoon
