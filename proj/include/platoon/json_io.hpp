#pragma once

#include <json.hpp>

#include "platoon/connectivity.hpp"
#include "platoon/formation.hpp"
#include "platoon/graph.hpp"

namespace platoon {

/// {"n": int, "edges": [[i, j], ...]} with i < j, lexicographically sorted.
nlohmann::ordered_json graph_to_json(const Graph& g);

/// Accepts the graph object above; endpoints may come in either order.
/// Schema problems raise ParseError naming the JSON pointer; structural
/// problems (self-loop, duplicate, range) raise ValidationError.
Graph graph_from_json(const nlohmann::json& j);

/// {"num": p, "den": q}
nlohmann::ordered_json rational_to_json(const Rational& r);

nlohmann::ordered_json report_to_json(const ConnectivityReport& r);

nlohmann::ordered_json hinf_report_to_json(const HinfReport& r);

}  // namespace platoon
