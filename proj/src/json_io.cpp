#include "platoon/json_io.hpp"

namespace platoon {

nlohmann::ordered_json rational_to_json(const Rational& r) {
  return {{"num", r.num}, {"den", r.den}};
}

nlohmann::ordered_json report_to_json(const ConnectivityReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["kappa"] = r.kappa;
  j["edge_conn"] = r.edge_conn;
  j["min_degree"] = r.min_degree;
  j["max_degree"] = r.max_degree;
  j["robustness"] = r.robustness ? nlohmann::ordered_json(*r.robustness) : nullptr;
  j["robustness_source"] = to_string(r.robustness_source);
  if (r.iso) {
    j["iso"] = rational_to_json(*r.iso);
    j["iso_value"] = r.iso->to_double();
  } else {
    j["iso"] = nullptr;
    j["iso_value"] = nullptr;
  }
  j["iso_source"] = to_string(r.iso_source);
  j["lambda2"] = r.lambda2;
  if (r.lambda2_bounds) {
    j["lambda2_bounds"] = {{"lower", r.lambda2_bounds->lower}, {"upper", r.lambda2_bounds->upper}};
  } else {
    j["lambda2_bounds"] = nullptr;
  }
  return j;
}

nlohmann::ordered_json hinf_report_to_json(const HinfReport& r) {
  nlohmann::ordered_json j;
  j["lambda2"] = r.lambda2;
  j["closed_form"] = r.closed_form;
  j["branch"] = to_string(r.branch);
  j["sweep_value"] = r.sweep_value;
  j["peak_frequency"] = r.peak_frequency;
  auto modes = nlohmann::ordered_json::array();
  for (const auto& m : r.per_mode) modes.push_back({{"lambda", m.lambda}, {"norm", m.norm}});
  j["per_mode"] = std::move(modes);
  return j;
}

}  // namespace platoon
