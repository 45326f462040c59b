#include "scenario.hpp"

#include <fstream>
#include <sstream>

#include "platoon/json_io.hpp"

namespace platoon::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& base, std::string_view key) {
  return base + "/" + std::string(key);
}

const json* find(const json& obj, std::string_view key) {
  auto it = obj.find(std::string(key));
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& base, std::string_view key) {
  if (const json* v = find(obj, key)) return *v;
  throw SchemaError(join(base, key), "required field is missing");
}

void require_object(const json& v, const std::string& ptr) {
  if (!v.is_object()) throw SchemaError(ptr.empty() ? "/" : ptr, "expected an object");
}

double as_number(const json& v, const std::string& ptr) {
  if (!v.is_number()) throw SchemaError(ptr, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) throw SchemaError(ptr, "expected an integer");
  return v.get<int>();
}

std::uint64_t as_u64(const json& v, const std::string& ptr) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw SchemaError(ptr, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

std::vector<int> as_int_list(const json& v, const std::string& ptr) {
  if (!v.is_array()) throw SchemaError(ptr, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_int(v[i], ptr + "/" + std::to_string(i)));
  return out;
}

Eigen::VectorXd as_vector(const json& v, const std::string& ptr, int n) {
  if (!v.is_array()) throw SchemaError(ptr, "expected an array of numbers");
  if (static_cast<int>(v.size()) != n)
    throw SchemaError(ptr, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = as_number(v[static_cast<std::size_t>(i)], ptr + "/" + std::to_string(i));
  return x;
}

void check_vehicle(int v, int n, const std::string& ptr) {
  if (v < 0 || v >= n)
    throw SchemaError(ptr, "vehicle " + std::to_string(v) + " out of range for n=" + std::to_string(n));
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

Graph resolve_graph(const json& node, const std::string& pointer,
                    const std::filesystem::path& base_dir) {
  if (node.is_string()) {
    std::filesystem::path p = node.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw SchemaError(pointer, "graph file " + p.string() + " not found");
    return load_graph(p);
  }
  require_object(node, pointer);
  if (const json* spec = find(node, "platoon")) {
    require_object(*spec, join(pointer, "platoon"));
    PlatoonSpec ps{as_int(require(*spec, join(pointer, "platoon"), "n"), join(pointer, "platoon/n")),
                   as_int(require(*spec, join(pointer, "platoon"), "k"), join(pointer, "platoon/k"))};
    try {
      return build_knn_platoon(ps);
    } catch (const ValidationError& e) {
      throw SchemaError(join(pointer, "platoon"), e.what());
    }
  }
  try {
    return graph_from_json(node);
  } catch (const ParseError& e) {
    throw SchemaError(pointer + e.what(), "invalid inline graph");
  } catch (const ValidationError& e) {
    throw SchemaError(join(pointer, "edges"), e.what());
  }
}

EstimationScenario parse_estimation_scenario(const json& j, const std::filesystem::path& base_dir) {
  require_object(j, "");
  EstimationScenario s;
  s.graph = resolve_graph(require(j, "", "graph"), "/graph", base_dir);
  const int n = s.graph.order();
  if (const json* seed = find(j, "seed")) s.seed = as_u64(*seed, "/seed");
  s.faulty = as_int_list(require(j, "", "faulty"), "/faulty");
  for (std::size_t i = 0; i < s.faulty.size(); ++i) check_vehicle(s.faulty[i], n, "/faulty/" + std::to_string(i));
  s.observer = as_int(require(j, "", "observer"), "/observer");
  check_vehicle(s.observer, n, "/observer");
  s.f = as_int(require(j, "", "f"), "/f");
  if (s.f < 0) throw SchemaError("/f", "must be non-negative");

  auto is_faulty = [&](int v) { return std::find(s.faulty.begin(), s.faulty.end(), v) != s.faulty.end(); };
  if (const json* drops = find(j, "packet_drop")) {
    s.packet_drop = as_int_list(*drops, "/packet_drop");
    for (std::size_t i = 0; i < s.packet_drop.size(); ++i) {
      if (!is_faulty(s.packet_drop[i]))
        throw SchemaError("/packet_drop/" + std::to_string(i), "vehicle is not listed in /faulty");
    }
  }
  if (const json* phi = find(j, "phi")) {
    if (!phi->is_array()) throw SchemaError("/phi", "expected an array of [vehicle, step, value]");
    for (std::size_t i = 0; i < phi->size(); ++i) {
      const std::string ptr = "/phi/" + std::to_string(i);
      const json& e = (*phi)[i];
      if (!e.is_array() || e.size() != 3) throw SchemaError(ptr, "expected [vehicle, step, value]");
      FaultInjection inj{as_int(e[0], ptr + "/0"), as_int(e[1], ptr + "/1"), as_number(e[2], ptr + "/2")};
      if (!is_faulty(inj.vehicle)) throw SchemaError(ptr + "/0", "vehicle is not listed in /faulty");
      if (std::find(s.packet_drop.begin(), s.packet_drop.end(), inj.vehicle) != s.packet_drop.end())
        throw SchemaError(ptr + "/0", "vehicle already has a packet-drop fault");
      if (inj.step < 0 || inj.step >= default_horizon(s.graph))
        throw SchemaError(ptr + "/1", "step outside the horizon of n steps");
      s.phi.push_back(inj);
    }
  }
  if (const json* x0 = find(j, "x0")) s.x0 = as_vector(*x0, "/x0", n);
  return s;
}

namespace {

AdversaryModel parse_adversary(const json& a, const std::string& ptr, int n, std::uint64_t seed) {
  require_object(a, ptr);
  AdversaryModel model;
  model.vehicle = as_int(require(a, ptr, "vehicle"), join(ptr, "vehicle"));
  check_vehicle(model.vehicle, n, join(ptr, "vehicle"));
  const json& kind = require(a, ptr, "strategy");
  if (!kind.is_string()) throw SchemaError(join(ptr, "strategy"), "expected a string");
  const std::string name = kind.get<std::string>();
  static const json empty = json::object();
  const json* params = find(a, "params");
  const std::string pp = join(ptr, "params");
  if (params) require_object(*params, pp);
  const json& p = params ? *params : empty;
  auto num = [&](std::string_view key, double fallback) {
    const json* v = find(p, key);
    return v ? as_number(*v, join(pp, key)) : fallback;
  };

  if (name == "constant") {
    model.strategy = strategy::Constant{num("value", 0.0)};
  } else if (name == "ramp") {
    model.strategy = strategy::Ramp{num("offset", 0.0), num("slope", 1.0)};
  } else if (name == "sinusoid") {
    model.strategy = strategy::Sinusoid{num("amplitude", 1.0), num("omega", 1.0), num("phase", 0.0)};
  } else if (name == "random") {
    strategy::SeededRandom r{num("low", 0.0), num("high", 1.0), seed + static_cast<std::uint64_t>(model.vehicle)};
    if (!(r.low <= r.high)) throw SchemaError(pp, "need low <= high");
    model.strategy = r;
  } else {
    throw SchemaError(join(ptr, "strategy"),
                      "unknown strategy '" + name + "' (constant, ramp, sinusoid, random)");
  }
  return model;
}

}  // namespace

ConsensusScenario parse_consensus_scenario(const json& j, const std::filesystem::path& base_dir,
                                           std::optional<std::uint64_t> seed_override) {
  require_object(j, "");
  ConsensusScenario s;
  s.graph = resolve_graph(require(j, "", "graph"), "/graph", base_dir);
  const int n = s.graph.order();
  if (const json* seed = find(j, "seed")) s.seed = as_u64(*seed, "/seed");
  if (seed_override) s.seed = seed_override;
  s.f = as_int(require(j, "", "f"), "/f");
  if (s.f < 0) throw SchemaError("/f", "must be non-negative");
  if (const json* v = find(j, "steps")) s.steps = as_int(*v, "/steps");
  if (s.steps < 0) throw SchemaError("/steps", "must be non-negative");
  if (const json* v = find(j, "tol")) s.tol = as_number(*v, "/tol");
  if (const json* x0 = find(j, "x0")) s.x0 = as_vector(*x0, "/x0", n);
  if (const json* adv = find(j, "adversaries")) {
    if (!adv->is_array()) throw SchemaError("/adversaries", "expected an array");
    for (std::size_t i = 0; i < adv->size(); ++i) {
      s.adversaries.push_back(
          parse_adversary((*adv)[i], "/adversaries/" + std::to_string(i), n, s.seed.value_or(0)));
    }
  }
  return s;
}

FormationConfig parse_formation_config(const json& j, const std::filesystem::path& base_dir) {
  require_object(j, "");
  FormationConfig c;
  c.graph = resolve_graph(require(j, "", "graph"), "/graph", base_dir);
  if (const json* v = find(j, "kp")) c.kp = as_number(*v, "/kp");
  if (const json* v = find(j, "ku")) c.ku = as_number(*v, "/ku");
  if (const json* v = find(j, "d0")) c.d0 = as_number(*v, "/d0");
  if (const json* v = find(j, "duration")) c.duration = as_number(*v, "/duration");
  if (const json* v = find(j, "h")) c.h = as_number(*v, "/h");
  if (const json* v = find(j, "record_every")) c.record_every = as_int(*v, "/record_every");
  if (!(c.kp > 0.0)) throw SchemaError("/kp", "must be positive");
  if (!(c.ku > 0.0)) throw SchemaError("/ku", "must be positive");
  if (!(c.h > 0.0)) throw SchemaError("/h", "must be positive");
  if (!(c.duration >= 0.0)) throw SchemaError("/duration", "must be non-negative");
  if (c.record_every < 1) throw SchemaError("/record_every", "must be >= 1");
  if (const json* d = find(j, "disturbance")) {
    require_object(*d, "/disturbance");
    const json& type = require(*d, "/disturbance", "type");
    if (!type.is_string()) throw SchemaError("/disturbance/type", "expected a string");
    c.disturbance = type.get<std::string>();
    if (c.disturbance != "none" && c.disturbance != "cosine")
      throw SchemaError("/disturbance/type", "unknown disturbance '" + c.disturbance + "' (none, cosine)");
    if (const json* v = find(*d, "vehicle")) c.disturbed_vehicle = as_int(*v, "/disturbance/vehicle");
    check_vehicle(c.disturbed_vehicle, c.graph.order(), "/disturbance/vehicle");
    if (const json* v = find(*d, "amplitude")) c.amplitude = as_number(*v, "/disturbance/amplitude");
    if (const json* v = find(*d, "omega")) {
      if (v->is_string() && v->get<std::string>() == "peak") {
        c.omega.reset();
      } else {
        c.omega = as_number(*v, "/disturbance/omega");
        if (*c.omega < 0.0) throw SchemaError("/disturbance/omega", "must be non-negative");
      }
    }
  }
  return c;
}

}  // namespace platoon::cli
