#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "platoon/graph.hpp"

namespace platoon {

namespace strategy {

struct Constant {
  double value = 0.0;
};

/// offset + slope * step
struct Ramp {
  double offset = 0.0;
  double slope = 1.0;
};

/// amplitude * sin(omega * step + phase)
struct Sinusoid {
  double amplitude = 1.0;
  double omega = 1.0;
  double phase = 0.0;
};

/// Independent uniform draws on [low, high], one per step, keyed by seed.
struct SeededRandom {
  double low = 0.0;
  double high = 1.0;
  std::uint64_t seed = 0;
};

}  // namespace strategy

using AdversaryStrategy =
    std::variant<strategy::Constant, strategy::Ramp, strategy::Sinusoid, strategy::SeededRandom>;

/// A vehicle that ignores the update rule and broadcasts its own sequence.
struct AdversaryModel {
  int vehicle = 0;
  AdversaryStrategy strategy;

  double broadcast(int step) const;
};

struct NeighborValue {
  int id = 0;
  double value = 0.0;
};

/// Neighbor values that survive W-MSR trimming: up to f values strictly above
/// `own` (largest first) and up to f strictly below (smallest first) are
/// dropped. Equal removable values go higher index first. Output is sorted
/// by id.
std::vector<NeighborValue> wmsr_retained(double own, std::span<const NeighborValue> neighbors,
                                         int f);

/// Uniform average of own value and the retained neighbor values.
double wmsr_update(double own, std::span<const NeighborValue> neighbors, int f);

/// True iff every vehicle outside `set` has at most f neighbors inside it.
bool is_f_local(const Graph& g, std::span<const int> set, int f);

struct ConsensusTrace {
  std::vector<Eigen::VectorXd> values;  // values[k], k = 0..T
  std::vector<int> normal;
  std::vector<int> adversaries;
  std::optional<int> converged_at;
  bool adversaries_f_local = true;
  int safety_violations = 0;  // steps where a normal value left the previous normal hull
  std::vector<std::string> warnings;

  /// [min, max] over normal vehicles at a step.
  std::pair<double, double> normal_hull(int step) const;
  double spread(int step) const;
  int steps() const { return static_cast<int>(values.size()) - 1; }
};

/// Synchronous W-MSR rounds. Normal vehicles see every neighbor's broadcast;
/// adversaries' entries of x0 are replaced by their own broadcasts. A
/// non-f-local adversary set only produces a warning.
ConsensusTrace run_wmsr(const Graph& g, const Eigen::VectorXd& x0,
                        std::span<const AdversaryModel> adversaries, int f, int steps = 500,
                        double tol = 1e-9);

}  // namespace platoon
