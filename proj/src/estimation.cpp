#include "platoon/estimation.hpp"

#include <algorithm>
#include <random>

#include <Eigen/SVD>

#include "platoon/errors.hpp"

namespace platoon {

WeightMatrix::WeightMatrix(Graph g, Eigen::MatrixXd w) : graph_(std::move(g)), w_(std::move(w)) {
  const int n = graph_.order();
  if (w_.rows() != n || w_.cols() != n) throw ValidationError("weight matrix must be n x n");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && !graph_.adjacent(i, j) && w_(i, j) != 0.0) {
        throw ValidationError("weight (" + std::to_string(i) + "," + std::to_string(j) +
                              ") is off the graph's support");
      }
    }
  }
}

bool WeightMatrix::is_row_stochastic(double tol) const {
  for (int i = 0; i < size(); ++i) {
    double sum = w_(i, i);
    if (!(w_(i, i) > 0.0 && w_(i, i) <= 1.0)) return false;
    for (int j : graph_.neighbors(i)) {
      if (!(w_(i, j) > 0.0 && w_(i, j) <= 1.0)) return false;
      sum += w_(i, j);
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

WeightMatrix WeightMatrix::without_neighbor_inputs(int i) const {
  Eigen::MatrixXd w = w_;
  for (int j : graph_.neighbors(i)) w(i, j) = 0.0;
  return WeightMatrix(graph_, std::move(w));
}

WeightMatrix random_weights(const Graph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.2, 1.0);
  const int n = g.order();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    w(i, i) = dist(rng);
    for (int j : g.neighbors(i)) w(i, j) = dist(rng);
  }
  return WeightMatrix(g, std::move(w));
}

Eigen::VectorXd random_state(int n, std::uint64_t seed, double low, double high) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    std::uint32_t{0x5eed}};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(low, high);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = dist(rng);
  return x;
}

FaultScenario::FaultScenario(std::vector<int> faulty, int horizon,
                             std::span<const FaultInjection> injections)
    : faulty_(std::move(faulty)), horizon_(horizon) {
  if (horizon < 0) throw ValidationError("horizon must be non-negative");
  std::sort(faulty_.begin(), faulty_.end());
  faulty_.erase(std::unique(faulty_.begin(), faulty_.end()), faulty_.end());
  if (!faulty_.empty() && faulty_.front() < 0) throw ValidationError("negative faulty vehicle");
  phi_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(faulty_.size()), horizon_);
  for (const auto& inj : injections) set_phi(inj.vehicle, inj.step, inj.value);
}

int FaultScenario::slot(int vehicle) const {
  auto it = std::lower_bound(faulty_.begin(), faulty_.end(), vehicle);
  if (it == faulty_.end() || *it != vehicle) return -1;
  return static_cast<int>(it - faulty_.begin());
}

double FaultScenario::phi(int vehicle, int step) const {
  int s = slot(vehicle);
  if (s < 0 || step < 0 || step >= horizon_) return 0.0;
  return phi_(s, step);
}

void FaultScenario::set_phi(int vehicle, int step, double value) {
  int s = slot(vehicle);
  if (s < 0) {
    throw ValidationError("fault injection for vehicle " + std::to_string(vehicle) +
                          " which is not in the faulty set");
  }
  if (step < 0 || step >= horizon_) {
    throw ValidationError("fault injection at step " + std::to_string(step) +
                          " outside horizon " + std::to_string(horizon_));
  }
  phi_(s, step) = value;
}

Eigen::MatrixXd FaultScenario::selection(int n) const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(faulty_.size()));
  for (std::size_t c = 0; c < faulty_.size(); ++c) a(faulty_[c], static_cast<Eigen::Index>(c)) = 1.0;
  return a;
}

namespace {

Eigen::VectorXd step_once(const WeightMatrix& w, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& injected) {
  const int n = w.size();
  Eigen::VectorXd next(n);
  for (int i = 0; i < n; ++i) {
    double heard = 0.0;
    for (int j : w.graph().neighbors(i)) heard += w(i, j) * x(j);
    next(i) = w(i, i) * x(i) + (heard + injected(i));
  }
  return next;
}

void check_faulty_in_range(const std::vector<int>& faulty, int n) {
  for (int v : faulty) {
    if (v < 0 || v >= n) throw ValidationError("faulty vehicle " + std::to_string(v) + " out of range");
  }
}

}  // namespace

StateTrace simulate_faulty(const WeightMatrix& w, const Eigen::VectorXd& x0,
                           const FaultScenario& scenario) {
  const int n = w.size();
  if (x0.size() != n) throw ValidationError("initial state has the wrong dimension");
  check_faulty_in_range(scenario.faulty(), n);
  StateTrace trace{x0};
  trace.reserve(static_cast<std::size_t>(scenario.horizon()) + 1);
  Eigen::VectorXd injected(n);
  for (int k = 0; k < scenario.horizon(); ++k) {
    injected.setZero();
    for (int v : scenario.faulty()) injected(v) = scenario.phi(v, k);
    trace.push_back(step_once(w, trace.back(), injected));
  }
  return trace;
}

AdaptiveRun simulate_faulty(const WeightMatrix& w, const Eigen::VectorXd& x0,
                            std::vector<int> faulty, int horizon, const FaultPolicy& policy) {
  const int n = w.size();
  if (x0.size() != n) throw ValidationError("initial state has the wrong dimension");
  check_faulty_in_range(faulty, n);
  AdaptiveRun run{{x0}, FaultScenario(std::move(faulty), horizon)};
  Eigen::VectorXd injected(n);
  for (int k = 0; k < horizon; ++k) {
    injected.setZero();
    for (int v : run.realized.faulty()) {
      double value = policy(w, run.trace, v, k);
      run.realized.set_phi(v, k, value);
      injected(v) = value;
    }
    run.trace.push_back(step_once(w, run.trace.back(), injected));
  }
  return run;
}

double packet_drop_fault(const WeightMatrix& w, const StateTrace& trace, int vehicle, int step) {
  if (step < 0 || static_cast<std::size_t>(step) >= trace.size())
    throw ValidationError("trace does not reach the requested step");
  const auto& x = trace[static_cast<std::size_t>(step)];
  double heard = 0.0;
  for (int j : w.graph().neighbors(vehicle)) heard += w(vehicle, j) * x(j);
  return -heard;
}

Eigen::VectorXd MeasurementTrace::stacked() const {
  Eigen::Index rows = y.empty() ? 0 : y.front().size();
  Eigen::VectorXd out(rows * static_cast<Eigen::Index>(y.size()));
  for (std::size_t t = 0; t < y.size(); ++t) out.segment(static_cast<Eigen::Index>(t) * rows, rows) = y[t];
  return out;
}

MeasurementTrace MeasurementTrace::truncated(int horizon) const {
  MeasurementTrace out{observer, selection, {}};
  out.y.assign(y.begin(), y.begin() + std::min<std::ptrdiff_t>(horizon, static_cast<std::ptrdiff_t>(y.size())));
  return out;
}

Eigen::MatrixXd observer_selection(const Graph& g, int observer) {
  if (observer < 0 || observer >= g.order()) throw ValidationError("observer out of range");
  std::vector<int> seen = g.neighbors(observer);
  seen.push_back(observer);
  std::sort(seen.begin(), seen.end());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(seen.size()), g.order());
  for (std::size_t r = 0; r < seen.size(); ++r) c(static_cast<Eigen::Index>(r), seen[r]) = 1.0;
  return c;
}

MeasurementTrace measure(const Graph& g, const StateTrace& trace, int observer, int horizon) {
  if (horizon < 0 || static_cast<std::size_t>(horizon) > trace.size())
    throw ValidationError("trace shorter than the requested horizon");
  MeasurementTrace m{observer, observer_selection(g, observer), {}};
  for (int t = 0; t < horizon; ++t) m.y.push_back(m.selection * trace[static_cast<std::size_t>(t)]);
  return m;
}

ObservationModel observation_model(const WeightMatrix& w, int observer, int horizon,
                                   std::span<const int> fault_set) {
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
  const Eigen::MatrixXd c = observer_selection(w.graph(), observer);
  const Eigen::Index rows = c.rows();
  const int n = w.size();
  const auto faults = static_cast<Eigen::Index>(fault_set.size());

  // c_powers[t] = C W^t
  std::vector<Eigen::MatrixXd> c_powers{c};
  for (int t = 1; t < horizon; ++t) c_powers.push_back(c_powers.back() * w.matrix());

  ObservationModel model;
  model.fault_set.assign(fault_set.begin(), fault_set.end());
  model.O.resize(rows * horizon, n);
  model.J = Eigen::MatrixXd::Zero(rows * horizon, faults * (horizon - 1));
  for (int t = 0; t < horizon; ++t) {
    model.O.middleRows(rows * t, rows) = c_powers[static_cast<std::size_t>(t)];
    for (int s = 0; s + 1 <= t; ++s) {
      const auto& reach = c_powers[static_cast<std::size_t>(t - 1 - s)];
      for (Eigen::Index idx = 0; idx < faults; ++idx) {
        model.J.block(rows * t, s * faults + idx, rows, 1) = reach.col(fault_set[static_cast<std::size_t>(idx)]);
      }
    }
  }
  return model;
}

FaultScenario RecoveryCandidate::scenario(int horizon) const {
  FaultScenario out(fault_set, horizon);
  const auto faults = static_cast<Eigen::Index>(fault_set.size());
  for (Eigen::Index s = 0; faults > 0 && s < phi.size() / faults; ++s) {
    for (Eigen::Index idx = 0; idx < faults; ++idx) {
      if (s < horizon) out.set_phi(fault_set[static_cast<std::size_t>(idx)], static_cast<int>(s), phi(s * faults + idx));
    }
  }
  return out;
}

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kNullSpaceX0Tolerance = 1e-6;

struct CandidateFit {
  RecoveryCandidate candidate;
  bool consistent = false;
};

// Row block t of the stacked system is divided by rho^t, rho = ||W||_inf.
// This is x[t] / rho^t evolving under W / rho: same solutions, but the
// blocks stay O(1) instead of growing geometrically with t.
Eigen::VectorXd block_scales(const WeightMatrix& w, int horizon) {
  const double rho = std::max(1.0, w.matrix().cwiseAbs().rowwise().sum().maxCoeff());
  Eigen::VectorXd scales(horizon);
  double s = 1.0;
  for (int t = 0; t < horizon; ++t, s /= rho) scales(t) = s;
  return scales;
}

template <typename Derived>
void scale_blocks(Eigen::MatrixBase<Derived>& m, Eigen::Index rows, const Eigen::VectorXd& scales) {
  for (Eigen::Index t = 0; t < scales.size(); ++t) m.middleRows(rows * t, rows) *= scales(t);
}

CandidateFit fit_candidate(const WeightMatrix& w, const MeasurementTrace& trace,
                           const Eigen::VectorXd& y, std::vector<int> fault_set, double tol) {
  const int n = w.size();
  const auto model = observation_model(w, trace.observer, trace.horizon(), fault_set);
  Eigen::MatrixXd m(model.O.rows(), model.O.cols() + model.J.cols());
  m << model.O, model.J;
  scale_blocks(m, trace.selection.rows(), block_scales(w, trace.horizon()));

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeFullV);
  svd.setThreshold(kRankTolerance);
  Eigen::VectorXd z = svd.solve(y);

  CandidateFit fit;
  fit.candidate.fault_set = std::move(fault_set);
  fit.candidate.x0 = z.head(n);
  fit.candidate.phi = z.tail(model.J.cols());
  fit.candidate.residual = (y - m * z).lpNorm<Eigen::Infinity>();
  const auto rank = svd.rank();
  const Eigen::MatrixXd& v = svd.matrixV();
  double leak = 0.0;
  if (rank < v.cols()) leak = v.block(0, rank, n, v.cols() - rank).cwiseAbs().maxCoeff();
  fit.candidate.x0_determined = leak < kNullSpaceX0Tolerance;
  fit.consistent = fit.candidate.residual < tol;
  return fit;
}

// Size-then-lexicographic enumeration of subsets of `pool` with size <= f.
template <typename Visit>
void for_each_fault_set(const std::vector<int>& pool, int f, Visit visit) {
  const int m = static_cast<int>(pool.size());
  for (int size = 0; size <= std::min(f, m); ++size) {
    std::vector<int> idx(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      std::vector<int> set;
      for (int i : idx) set.push_back(pool[static_cast<std::size_t>(i)]);
      visit(std::move(set));
      int pos = size - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == m - size + pos) --pos;
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (int i = pos + 1; i < size; ++i)
        idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }
  }
}

}  // namespace

RecoveryResult recover_initial_state(const MeasurementTrace& trace, const WeightMatrix& w, int f) {
  if (f < 0) throw ValidationError("fault budget must be non-negative");
  if (trace.horizon() < 1) throw ValidationError("need at least one measurement");
  Eigen::VectorXd y = trace.stacked();
  scale_blocks(y, trace.selection.rows(), block_scales(w, trace.horizon()));

  RecoveryResult result;
  result.tolerance = 1e-8 * (1.0 + y.lpNorm<Eigen::Infinity>());

  std::vector<int> pool;
  for (int v = 0; v < w.size(); ++v)
    if (v != trace.observer) pool.push_back(v);

  for_each_fault_set(pool, f, [&](std::vector<int> set) {
    auto fit = fit_candidate(w, trace, y, std::move(set), result.tolerance);
    if (fit.consistent) result.consistent.push_back(std::move(fit.candidate));
  });
  if (result.consistent.empty()) {
    throw ModelMismatch("no fault set of size <= " + std::to_string(f) +
                        " explains the measurements");
  }

  const auto& first = result.consistent.front();
  bool agree = std::all_of(result.consistent.begin(), result.consistent.end(), [&](const auto& c) {
    return c.x0_determined &&
           (c.x0 - first.x0).template lpNorm<Eigen::Infinity>() < result.tolerance;
  });
  if (agree) {
    result.status = RecoveryResult::Status::Unique;
    result.x0 = first.x0;
  }
  return result;
}

std::vector<double> estimation_error_curve(const MeasurementTrace& trace, const WeightMatrix& w,
                                           int f, const Eigen::VectorXd& x0_true) {
  std::vector<double> errors;
  for (int h = 1; h <= trace.horizon(); ++h) {
    auto result = recover_initial_state(trace.truncated(h), w, f);
    Eigen::VectorXd estimate;
    if (result.unique()) {
      estimate = result.x0;
    } else {
      auto best = std::min_element(result.consistent.begin(), result.consistent.end(),
                                   [](const auto& a, const auto& b) { return a.residual < b.residual; });
      estimate = best->x0;
    }
    errors.push_back((estimate - x0_true).norm());
  }
  return errors;
}

}  // namespace platoon
