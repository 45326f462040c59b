#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "platoon/graph.hpp"

namespace platoon::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalid = 2,
  kRefused = 3,
};

enum class Format { Csv, Json };

struct Output {
  std::filesystem::path dir = "results";
  Format format = Format::Csv;
};

struct AnalyzeOptions {
  std::optional<PlatoonSpec> platoon;
  std::optional<std::filesystem::path> graph;
  bool require_robustness = false;
  bool require_iso = false;
  std::optional<int> exhaustive_limit;  // overrides both limits
  Output out{"results", Format::Json};
};

struct ScenarioOptions {
  std::filesystem::path scenario;
  std::optional<std::uint64_t> seed;  // overrides the scenario's seed
  Output out;
};

struct SweepOptions {
  std::vector<int> n_values;
  std::vector<int> k_values;
  double kp = 5.0;
  double ku = 10.0;
  Output out;
};

// Each command writes its artifacts plus manifest.json and returns an exit
// code. Messages go to `log`, errors to `err`.
int cmd_analyze(const AnalyzeOptions& opts, std::ostream& log, std::ostream& err);
int cmd_estimate(const ScenarioOptions& opts, std::ostream& log, std::ostream& err);
int cmd_consensus(const ScenarioOptions& opts, std::ostream& log, std::ostream& err);
int cmd_formation(const ScenarioOptions& opts, std::ostream& log, std::ostream& err);
int cmd_sweep(const SweepOptions& opts, std::ostream& log, std::ostream& err);

/// "5", "5:20" (inclusive) or "1,2,4".
std::vector<int> parse_int_range(const std::string& text);

/// "n,k"
PlatoonSpec parse_platoon_spec(const std::string& text);

std::uint64_t fnv1a64(const std::string& bytes);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

}  // namespace platoon::cli
