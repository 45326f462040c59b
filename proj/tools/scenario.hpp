#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "platoon/consensus.hpp"
#include "platoon/errors.hpp"
#include "platoon/estimation.hpp"
#include "platoon/graph.hpp"

namespace platoon::cli {

/// Scenario content that does not match the expected schema. `pointer()` is
/// the JSON pointer of the offending value.
class SchemaError : public ValidationError {
 public:
  SchemaError(std::string pointer, const std::string& message)
      : ValidationError(pointer + ": " + message), pointer_(std::move(pointer)) {}

  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

nlohmann::json read_json_file(const std::filesystem::path& path);

/// "graph" may be a path (relative to `base_dir`), an inline graph object,
/// or {"platoon": {"n": .., "k": ..}}.
Graph resolve_graph(const nlohmann::json& node, const std::string& pointer,
                    const std::filesystem::path& base_dir);

struct EstimationScenario {
  Graph graph;
  std::optional<std::uint64_t> seed;
  std::vector<int> faulty;
  std::vector<FaultInjection> phi;
  std::vector<int> packet_drop;  // subset of faulty whose fault is a packet drop
  int observer = 0;
  int f = 0;
  std::optional<Eigen::VectorXd> x0;
};

EstimationScenario parse_estimation_scenario(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir);

struct ConsensusScenario {
  Graph graph;
  std::optional<std::uint64_t> seed;
  int f = 0;
  int steps = 500;
  double tol = 1e-9;
  std::optional<Eigen::VectorXd> x0;
  std::vector<AdversaryModel> adversaries;
};

/// Random adversaries draw from seed + vehicle, so `seed` must be known
/// before parsing; pass the effective seed.
ConsensusScenario parse_consensus_scenario(const nlohmann::json& j,
                                           const std::filesystem::path& base_dir,
                                           std::optional<std::uint64_t> seed_override);

struct FormationConfig {
  Graph graph;
  double kp = 5.0;
  double ku = 10.0;
  double d0 = 10.0;
  double duration = 20.0;
  double h = 1e-3;
  int record_every = 100;
  std::string disturbance = "none";  // none | cosine
  int disturbed_vehicle = 0;
  double amplitude = 1.0;
  std::optional<double> omega;  // unset: the analytic peak frequency
};

FormationConfig parse_formation_config(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir);

}  // namespace platoon::cli
