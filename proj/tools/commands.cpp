#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/Core>
#include <json.hpp>

#include "platoon/connectivity.hpp"
#include "platoon/consensus.hpp"
#include "platoon/errors.hpp"
#include "platoon/estimation.hpp"
#include "platoon/formation.hpp"
#include "platoon/json_io.hpp"
#include "scenario.hpp"

#ifndef PLATOON_VERSION
#define PLATOON_VERSION "unknown"
#endif

namespace platoon::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

int parse_int(const std::string& text, const std::string& what) {
  int v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || text.empty())
    throw ValidationError("cannot parse '" + text + "' as an integer in " + what);
  return v;
}

}  // namespace

std::vector<int> parse_int_range(const std::string& text) {
  std::vector<int> out;
  if (auto colon = text.find(':'); colon != std::string::npos) {
    const int lo = parse_int(text.substr(0, colon), "range '" + text + "'");
    const int hi = parse_int(text.substr(colon + 1), "range '" + text + "'");
    if (lo > hi) throw ValidationError("empty range '" + text + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(item, "list '" + text + "'"));
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

PlatoonSpec parse_platoon_spec(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ValidationError("--platoon expects n,k (got '" + text + "')");
  PlatoonSpec spec{parse_int(text.substr(0, comma), "--platoon"),
                   parse_int(text.substr(comma + 1), "--platoon")};
  spec.validate();
  return spec;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json as_plain(const nlohmann::ordered_json& j) { return json::parse(j.dump()); }

std::string extension(Format f) { return f == Format::Csv ? ".csv" : ".json"; }

/// Artifact stem for a command run; `config` holds everything that affects
/// the output (nlohmann::json sorts keys, so the dump is canonical).
std::string stem_for(const std::string& command, const json& config) {
  return command + "-" + hex64(fnv1a64(config.dump()));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json version_info() {
  return {{"platoon", PLATOON_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

/// Adds one entry per artifact to <dir>/manifest.json, keeping earlier runs.
void record_manifest(const fs::path& dir, const std::vector<fs::path>& artifacts,
                     const std::string& command, const json& config,
                     std::optional<std::uint64_t> seed) {
  const fs::path path = dir / "manifest.json";
  json manifest = json::object();
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) manifest = json::object();
  }
  manifest["versions"] = version_info();
  json& entries = manifest["artifacts"];
  if (!entries.is_object()) entries = json::object();
  for (const auto& a : artifacts) {
    entries[a.filename().string()] = {{"command", command},
                                      {"config", config},
                                      {"seed", seed ? json(*seed) : json(nullptr)}};
  }
  write_text(path, manifest.dump(2) + "\n");
}

class Artifacts {
 public:
  Artifacts(const Output& out, std::string command, json config, std::optional<std::uint64_t> seed)
      : out_(out), command_(std::move(command)), config_(std::move(config)), seed_(seed) {
    fs::create_directories(out_.dir);
    stem_ = stem_for(command_, config_);
  }

  /// <stem><suffix><ext>; `ext` defaults to the chosen format's.
  fs::path write(const std::string& text, const std::string& suffix = "",
                 std::optional<std::string> ext = std::nullopt) {
    fs::path p = out_.dir / (stem_ + suffix + ext.value_or(extension(out_.format)));
    write_text(p, text);
    written_.push_back(p);
    return p;
  }

  void finish(std::ostream& log) const {
    record_manifest(out_.dir, written_, command_, config_, seed_);
    for (const auto& p : written_) log << "wrote " << p.string() << "\n";
  }

 private:
  Output out_;
  std::string command_;
  json config_;
  std::optional<std::uint64_t> seed_;
  std::string stem_;
  std::vector<fs::path> written_;
};

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError& e) {
    err << "error: invalid scenario at " << e.what() << "\n";
    return kInvalid;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const RefusedError& e) {
    err << "refused: " << e.what() << "\n";
    return kRefused;
  } catch (const ModelMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::optional<PlatoonSpec> detect_platoon(const Graph& g) {
  const int n = g.order();
  const int k = n > 1 ? g.min_degree() : 0;
  if (k < 1 || k > n - 1) return std::nullopt;
  PlatoonSpec spec{n, k};
  if (build_knn_platoon(spec) == g) return spec;
  return std::nullopt;
}

std::string report_csv(const ConnectivityReport& r) {
  std::ostringstream o;
  o << "measure,value,source\n";
  o << "n," << r.n << ",exhaustive\n";
  o << "kappa," << r.kappa << ",exhaustive\n";
  o << "edge_conn," << r.edge_conn << ",exhaustive\n";
  o << "min_degree," << r.min_degree << ",exhaustive\n";
  o << "max_degree," << r.max_degree << ",exhaustive\n";
  o << "robustness," << (r.robustness ? std::to_string(*r.robustness) : "") << ","
    << to_string(r.robustness_source) << "\n";
  o << "iso," << (r.iso ? r.iso->str() : "") << "," << to_string(r.iso_source) << "\n";
  o << "lambda2," << format_double(r.lambda2) << ",eigensolver\n";
  if (r.lambda2_bounds) {
    o << "lambda2_lower," << format_double(r.lambda2_bounds->lower) << ",closed-form\n";
    o << "lambda2_upper," << format_double(r.lambda2_bounds->upper) << ",closed-form\n";
  }
  return o.str();
}

std::uint64_t require_seed(std::optional<std::uint64_t> cli, std::optional<std::uint64_t> file) {
  if (cli) return *cli;
  if (file) return *file;
  throw SchemaError("/seed", "required field is missing (or pass --seed)");
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.platoon.has_value() == opts.graph.has_value())
      throw ValidationError("analyze needs exactly one of --platoon or --graph");
    Graph g;
    std::optional<PlatoonSpec> spec;
    json source;
    if (opts.platoon) {
      opts.platoon->validate();
      spec = opts.platoon;
      g = build_knn_platoon(*spec);
      source = {{"platoon", {{"n", spec->n}, {"k", spec->k}}}};
    } else {
      if (!fs::exists(*opts.graph)) throw ValidationError("graph file " + opts.graph->string() + " not found");
      g = load_graph(*opts.graph);
      spec = detect_platoon(g);
      source = {{"graph", as_plain(graph_to_json(g))}};
    }
    ExhaustiveLimits limits;
    if (opts.exhaustive_limit) {
      if (*opts.exhaustive_limit < 0) throw ValidationError("--exhaustive-limit must be non-negative");
      limits.robustness = limits.isoperimetric = *opts.exhaustive_limit;
    }

    const ConnectivityReport report = analyze(g, limits, spec);

    int code = kOk;
    if (opts.require_robustness && report.robustness_source != Provenance::Exhaustive) {
      err << "refused: exhaustive robustness search (n=" << g.order() << " exceeds limit "
          << limits.robustness << ")";
      if (report.robustness)
        err << "; closed-form value " << *report.robustness << " ("
            << to_string(report.robustness_source) << ")";
      err << "\n";
      code = kRefused;
    }
    if (opts.require_iso && report.iso_source != Provenance::Exhaustive) {
      err << "refused: exhaustive isoperimetric search (n=" << g.order() << " exceeds limit "
          << limits.isoperimetric << ")";
      if (report.iso)
        err << "; closed-form value " << report.iso->str() << " (" << to_string(report.iso_source) << ")";
      err << "\n";
      code = kRefused;
    }

    const json config = {{"command", "analyze"},
                         {"source", source},
                         {"limits", {{"robustness", limits.robustness}, {"isoperimetric", limits.isoperimetric}}}};
    Artifacts artifacts(opts.out, "analyze", config, std::nullopt);
    if (opts.out.format == Format::Json) {
      artifacts.write(report_to_json(report).dump(2) + "\n");
    } else {
      artifacts.write(report_csv(report));
    }
    artifacts.finish(log);
    log << "kappa=" << report.kappa << " edge_conn=" << report.edge_conn;
    if (report.robustness) log << " robustness=" << *report.robustness;
    if (report.iso) log << " iso=" << report.iso->str();
    log << " lambda2=" << format_double(report.lambda2) << "\n";
    return code;
  });
}

int cmd_estimate(const ScenarioOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const json raw = read_json_file(opts.scenario);
    const EstimationScenario s = parse_estimation_scenario(raw, opts.scenario.parent_path());
    const std::uint64_t seed = require_seed(opts.seed, s.seed);
    const Graph& g = s.graph;
    const int n = g.order();
    const int horizon = default_horizon(g);

    const WeightMatrix w = random_weights(g, seed);
    const Eigen::VectorXd x0 = s.x0 ? *s.x0 : random_state(n, seed);

    StateTrace trace;
    if (s.packet_drop.empty()) {
      trace = simulate_faulty(w, x0, FaultScenario(s.faulty, horizon, s.phi));
    } else {
      const FaultScenario scripted(s.faulty, horizon, s.phi);
      auto policy = [&](const WeightMatrix& wm, const StateTrace& t, int v, int step) {
        if (std::find(s.packet_drop.begin(), s.packet_drop.end(), v) != s.packet_drop.end())
          return packet_drop_fault(wm, t, v, step);
        return scripted.phi(v, step);
      };
      trace = simulate_faulty(w, x0, s.faulty, horizon, policy).trace;
    }

    const MeasurementTrace m = measure(g, trace, s.observer, horizon);
    const std::vector<double> errors = estimation_error_curve(m, w, s.f, x0);
    const RecoveryResult result = recover_initial_state(m, w, s.f);

    json phi = json::array();
    for (const auto& inj : s.phi) phi.push_back({inj.vehicle, inj.step, inj.value});
    json config = {{"command", "estimate"},
                   {"graph", as_plain(graph_to_json(g))},
                   {"seed", seed},
                   {"faulty", s.faulty},
                   {"phi", phi},
                   {"packet_drop", s.packet_drop},
                   {"observer", s.observer},
                   {"f", s.f}};
    if (s.x0) config["x0"] = vector_json(*s.x0);

    Artifacts artifacts(opts.out, "estimate", config, seed);
    if (opts.out.format == Format::Csv) {
      std::string csv = "step,error\n";
      for (std::size_t k = 0; k < errors.size(); ++k)
        csv += std::to_string(k) + "," + format_double(errors[k]) + "\n";
      artifacts.write(csv);
    } else {
      json sets = json::array();
      for (const auto& c : result.consistent) sets.push_back(c.fault_set);
      json doc = {{"status", result.unique() ? "unique" : "ambiguous"},
                  {"x0_true", vector_json(x0)},
                  {"x0_estimate", result.unique() ? vector_json(result.x0) : json(nullptr)},
                  {"consistent_fault_sets", sets},
                  {"tolerance", result.tolerance},
                  {"errors", errors}};
      artifacts.write(doc.dump(2) + "\n");
    }
    artifacts.finish(log);
    log << "recovery " << (result.unique() ? "unique" : "ambiguous") << ", final error "
        << format_double(errors.empty() ? 0.0 : errors.back()) << "\n";
    return kOk;
  });
}

int cmd_consensus(const ScenarioOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const json raw = read_json_file(opts.scenario);
    const ConsensusScenario s = parse_consensus_scenario(raw, opts.scenario.parent_path(), opts.seed);
    const std::uint64_t seed = require_seed(std::nullopt, s.seed);
    const Graph& g = s.graph;
    const int n = g.order();
    const Eigen::VectorXd x0 = s.x0 ? *s.x0 : random_state(n, seed);

    const ConsensusTrace trace = run_wmsr(g, x0, s.adversaries, s.f, s.steps, s.tol);

    json config = raw;
    config["graph"] = as_plain(graph_to_json(g));
    config["seed"] = seed;
    config["command"] = "consensus";
    config["steps"] = s.steps;
    config["tol"] = s.tol;

    std::vector<char> adversary(static_cast<std::size_t>(n), 0);
    for (int a : trace.adversaries) adversary[static_cast<std::size_t>(a)] = 1;

    Artifacts artifacts(opts.out, "consensus", config, seed);
    if (opts.out.format == Format::Csv) {
      std::string csv = "step,vehicle,value,is_adversary\n";
      for (int k = 0; k <= trace.steps(); ++k) {
        const Eigen::VectorXd& v = trace.values[static_cast<std::size_t>(k)];
        for (int i = 0; i < n; ++i) {
          csv += std::to_string(k) + "," + std::to_string(i) + "," + format_double(v(i)) + "," +
                 (adversary[static_cast<std::size_t>(i)] ? "1" : "0") + "\n";
        }
      }
      artifacts.write(csv);
    } else {
      json values = json::array();
      for (const auto& v : trace.values) values.push_back(vector_json(v));
      json doc = {{"normal", trace.normal},
                  {"adversaries", trace.adversaries},
                  {"converged_at", trace.converged_at ? json(*trace.converged_at) : json(nullptr)},
                  {"adversaries_f_local", trace.adversaries_f_local},
                  {"safety_violations", trace.safety_violations},
                  {"warnings", trace.warnings},
                  {"values", values}};
      artifacts.write(doc.dump(2) + "\n");
    }
    artifacts.finish(log);
    for (const auto& w : trace.warnings) err << "warning: " << w << "\n";
    if (trace.converged_at) {
      log << "normal vehicles converged at step " << *trace.converged_at;
    } else {
      log << "normal vehicles did not converge within " << trace.steps() << " steps";
    }
    log << " (final spread " << format_double(trace.spread(trace.steps())) << ")\n";
    return kOk;
  });
}

int cmd_formation(const ScenarioOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const json raw = read_json_file(opts.scenario);
    const FormationConfig c = parse_formation_config(raw, opts.scenario.parent_path());
    const FormationSystem sys = build_formation(c.graph, c.kp, c.ku, c.d0);
    const int n = sys.vehicles();

    const HinfReport report = hinf_report(sys);
    const double omega = c.omega.value_or(modal_peak_frequency(report.lambda2, c.kp, c.ku));
    const Disturbance w = c.disturbance == "cosine"
                              ? cosine_on_vehicle(n, c.disturbed_vehicle, c.amplitude, omega)
                              : no_disturbance(n);
    const FormationTrace trace = simulate_formation(sys, w, c.duration, c.h, c.record_every);

    json config = {{"command", "formation"},
                   {"graph", as_plain(graph_to_json(c.graph))},
                   {"kp", c.kp},
                   {"ku", c.ku},
                   {"d0", c.d0},
                   {"duration", c.duration},
                   {"h", c.h},
                   {"record_every", c.record_every},
                   {"disturbance",
                    {{"type", c.disturbance},
                     {"vehicle", c.disturbed_vehicle},
                     {"amplitude", c.amplitude},
                     {"omega", omega}}}};

    nlohmann::ordered_json hinf = hinf_report_to_json(report);
    hinf["disturbance_omega"] = omega;

    const auto& edges = c.graph.edges();
    Artifacts artifacts(opts.out, "formation", config, std::nullopt);
    if (opts.out.format == Format::Csv) {
      std::string states = "t,vehicle,p,u\n";
      std::string spacing = "t,edge,spacing_error\n";
      for (std::size_t s = 0; s < trace.time.size(); ++s) {
        const std::string t = format_double(trace.time[s]);
        for (int i = 0; i < n; ++i) {
          states += t + "," + std::to_string(i) + "," + format_double(trace.positions[s](i)) + "," +
                    format_double(trace.velocities[s](i)) + "\n";
        }
        for (std::size_t l = 0; l < edges.size(); ++l) {
          spacing += t + "," + std::to_string(edges[l].u) + "-" + std::to_string(edges[l].v) + "," +
                     format_double(trace.spacing_error[s](static_cast<Eigen::Index>(l))) + "\n";
        }
      }
      artifacts.write(states);
      artifacts.write(spacing, "-spacing");
      artifacts.write(hinf.dump(2) + "\n", "-hinf", ".json");
    } else {
      json samples = json::array();
      for (std::size_t s = 0; s < trace.time.size(); ++s) {
        samples.push_back({{"t", trace.time[s]},
                           {"p", vector_json(trace.positions[s])},
                           {"u", vector_json(trace.velocities[s])},
                           {"spacing_error", vector_json(trace.spacing_error[s])}});
      }
      json edge_list = json::array();
      for (const auto& e : edges) edge_list.push_back({e.u, e.v});
      json doc = {{"hinf", as_plain(hinf)}, {"edges", edge_list}, {"samples", samples}};
      artifacts.write(doc.dump(2) + "\n");
    }
    artifacts.finish(log);
    log << "lambda2=" << format_double(report.lambda2) << " hinf=" << format_double(report.closed_form)
        << " (" << to_string(report.branch) << "), sweep=" << format_double(report.sweep_value) << "\n";
    return kOk;
  });
}

int cmd_sweep(const SweepOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.n_values.empty() || opts.k_values.empty()) throw ValidationError("--n and --k must be non-empty");
    if (!(opts.kp > 0.0) || !(opts.ku > 0.0)) throw ValidationError("--kp and --ku must be positive");
    const std::vector<HinfGridRow> rows = hinf_grid(opts.n_values, opts.k_values, opts.kp, opts.ku);

    const json config = {{"command", "sweep"},
                         {"n", opts.n_values},
                         {"k", opts.k_values},
                         {"kp", opts.kp},
                         {"ku", opts.ku}};
    Artifacts artifacts(opts.out, "sweep", config, std::nullopt);
    if (opts.out.format == Format::Csv) {
      std::string csv = "n,k,kp,ku,lambda2,lb,ub,hinf,branch\n";
      for (const auto& r : rows) {
        csv += std::to_string(r.n) + "," + std::to_string(r.k) + "," + format_double(r.kp) + "," +
               format_double(r.ku) + "," + format_double(r.lambda2) + "," + format_double(r.lower) + "," +
               format_double(r.upper) + "," + format_double(r.hinf) + "," + to_string(r.branch) + "\n";
      }
      artifacts.write(csv);
    } else {
      json doc = json::array();
      for (const auto& r : rows) {
        doc.push_back({{"n", r.n},
                       {"k", r.k},
                       {"kp", r.kp},
                       {"ku", r.ku},
                       {"lambda2", r.lambda2},
                       {"lb", r.lower},
                       {"ub", r.upper},
                       {"hinf", r.hinf},
                       {"branch", to_string(r.branch)}});
      }
      artifacts.write(doc.dump(2) + "\n");
    }
    artifacts.finish(log);
    log << rows.size() << " grid rows\n";
    return kOk;
  });
}

}  // namespace platoon::cli
