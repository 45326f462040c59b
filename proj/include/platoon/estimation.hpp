#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "platoon/graph.hpp"

namespace platoon {

/// Iteration matrix of the linear iterative strategy. Nonzeros are only
/// allowed on the graph's edges and on the diagonal.
class WeightMatrix {
 public:
  WeightMatrix(Graph g, Eigen::MatrixXd w);

  int size() const noexcept { return graph_.order(); }
  const Graph& graph() const noexcept { return graph_; }
  const Eigen::MatrixXd& matrix() const noexcept { return w_; }
  double operator()(int i, int j) const { return w_(i, j); }

  /// Entries on the support lie in (0, 1] and every row sums to 1.
  bool is_row_stochastic(double tol = 1e-12) const;

  /// Same matrix with vehicle i's neighbor weights zeroed (it hears nobody).
  WeightMatrix without_neighbor_inputs(int i) const;

 private:
  Graph graph_;
  Eigen::MatrixXd w_;
};

/// Initial values drawn i.i.d. uniform on [low, high].
Eigen::VectorXd random_state(int n, std::uint64_t seed, double low = -10.0, double high = 10.0);

/// Support entries drawn i.i.d. uniform on [0.2, 1.0]; row-major over the
/// support (self first, then ascending neighbors).
WeightMatrix random_weights(const Graph& g, std::uint64_t seed);

struct FaultInjection {
  int vehicle = 0;
  int step = 0;
  double value = 0.0;
};

/// Which vehicles misbehave and what they add to their own update.
class FaultScenario {
 public:
  FaultScenario() = default;
  /// `faulty` is sorted and deduplicated; injections must reference a faulty
  /// vehicle and a step below `horizon`.
  FaultScenario(std::vector<int> faulty, int horizon,
                std::span<const FaultInjection> injections = {});

  const std::vector<int>& faulty() const noexcept { return faulty_; }
  int horizon() const noexcept { return horizon_; }

  double phi(int vehicle, int step) const;
  void set_phi(int vehicle, int step, double value);

  /// n x f column selection [e_v1 ... e_vf].
  Eigen::MatrixXd selection(int n) const;

 private:
  int slot(int vehicle) const;

  std::vector<int> faulty_;
  int horizon_ = 0;
  Eigen::MatrixXd phi_;  // faulty x horizon
};

using StateTrace = std::vector<Eigen::VectorXd>;

/// x[k+1] = W x[k] + A phi[k] for k < horizon; returns x[0..horizon].
/// Each row is evaluated as w_ii x_i + (sum_j w_ij x_j + phi_i), neighbors in
/// ascending order.
StateTrace simulate_faulty(const WeightMatrix& w, const Eigen::VectorXd& x0,
                           const FaultScenario& scenario);

/// Fault value chosen online from the trace so far (x[0..step] available).
using FaultPolicy =
    std::function<double(const WeightMatrix&, const StateTrace&, int vehicle, int step)>;

struct AdaptiveRun {
  StateTrace trace;
  FaultScenario realized;
};

AdaptiveRun simulate_faulty(const WeightMatrix& w, const Eigen::VectorXd& x0,
                            std::vector<int> faulty, int horizon, const FaultPolicy& policy);

/// -sum_{j in N_i} w_ij x_j[k]: injecting this cancels everything vehicle i
/// hears from its neighbors at step k.
double packet_drop_fault(const WeightMatrix& w, const StateTrace& trace, int vehicle, int step);

/// What one vehicle sees: its own value and its neighbors', per step.
struct MeasurementTrace {
  int observer = 0;
  Eigen::MatrixXd selection;      // (d_i + 1) x n, rows ordered by vehicle index
  std::vector<Eigen::VectorXd> y;  // y[0..L-1]

  int horizon() const { return static_cast<int>(y.size()); }
  Eigen::VectorXd stacked() const;
  MeasurementTrace truncated(int horizon) const;
};

Eigen::MatrixXd observer_selection(const Graph& g, int observer);

/// Measurements y[0..horizon-1] taken from a state trace.
MeasurementTrace measure(const Graph& g, const StateTrace& trace, int observer, int horizon);

/// Stacked map Y = O x[0] + J Phi over `horizon` steps for one candidate
/// fault set. Phi is step-major: (phi[0]; phi[1]; ...; phi[horizon-2]), each
/// phi[s] listing the candidate vehicles in ascending order. Inputs at the
/// last step never reach the measurements and are omitted.
struct ObservationModel {
  Eigen::MatrixXd O;
  Eigen::MatrixXd J;
  std::vector<int> fault_set;
};

ObservationModel observation_model(const WeightMatrix& w, int observer, int horizon,
                                   std::span<const int> fault_set = {});

/// Recovery runs over a horizon of n steps.
inline int default_horizon(const Graph& g) { return g.order(); }

struct RecoveryCandidate {
  std::vector<int> fault_set;
  double residual = 0.0;       // infinity norm
  bool x0_determined = false;  // x[0] is pinned down by this candidate's data
  Eigen::VectorXd x0;          // minimum-norm least-squares estimate
  Eigen::VectorXd phi;         // same layout as ObservationModel

  /// Phi of this candidate as a replayable scenario.
  FaultScenario scenario(int horizon) const;
};

struct RecoveryResult {
  enum class Status { Unique, Ambiguous };

  Status status = Status::Ambiguous;
  Eigen::VectorXd x0;  // set only when Unique
  std::vector<RecoveryCandidate> consistent;
  double tolerance = 0.0;

  bool unique() const { return status == Status::Unique; }
};

/// Enumerates every fault set of size <= f (observer excluded) in size-then-
/// lexicographic order, fits each by least squares, and keeps the consistent
/// ones. Unique when all of them pin x[0] down to the same value.
/// Throws ModelMismatch if no candidate explains the data.
RecoveryResult recover_initial_state(const MeasurementTrace& trace, const WeightMatrix& w,
                                     int f);

/// Euclidean error of the observer's running estimate of x[0] after each
/// step k = 0..L-1 (using y[0..k]). Unique recoveries are used as is;
/// otherwise the lowest-residual candidate's minimum-norm estimate.
std::vector<double> estimation_error_curve(const MeasurementTrace& trace, const WeightMatrix& w,
                                           int f, const Eigen::VectorXd& x0_true);

}  // namespace platoon
