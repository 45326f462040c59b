#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "platoon/errors.hpp"

namespace {

using platoon::cli::Format;

void add_output_options(CLI::App* cmd, platoon::cli::Output& out) {
  static const std::map<std::string, Format> formats{{"csv", Format::Csv}, {"json", Format::Json}};
  cmd->add_option("--out", out.dir, "Output directory")->capture_default_str();
  cmd->add_option("--format", out.format, "Artifact format (csv|json)")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = platoon::cli;

  CLI::App app{"Platoon network analysis and resilient-algorithm experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PLATOON_VERSION);

  cli::AnalyzeOptions analyze;
  std::string platoon_text;
  std::string graph_path;
  auto* a = app.add_subcommand("analyze", "Connectivity report for P(n,k) or a graph file");
  auto* a_platoon = a->add_option("--platoon", platoon_text, "Platoon spec n,k");
  auto* a_graph = a->add_option("--graph", graph_path, "Graph JSON file");
  a_platoon->excludes(a_graph);
  a->add_flag("--robustness", analyze.require_robustness,
              "Require an exhaustive robustness value (exit 3 when refused)");
  a->add_flag("--iso", analyze.require_iso,
              "Require an exhaustive isoperimetric value (exit 3 when refused)");
  a->add_option("--exhaustive-limit", analyze.exhaustive_limit,
                "Largest n for exhaustive searches (overrides the defaults)");
  add_output_options(a, analyze.out);

  cli::ScenarioOptions estimate;
  auto* e = app.add_subcommand("estimate", "Fault-tolerant initial-state recovery");
  e->add_option("--scenario", estimate.scenario, "Scenario JSON")->required();
  e->add_option("--seed", estimate.seed, "Seed (overrides the scenario)");
  add_output_options(e, estimate.out);

  cli::ScenarioOptions consensus;
  auto* c = app.add_subcommand("consensus", "W-MSR consensus with adversaries");
  c->add_option("--scenario", consensus.scenario, "Scenario JSON")->required();
  c->add_option("--seed", consensus.seed, "Seed (overrides the scenario)");
  add_output_options(c, consensus.out);

  cli::ScenarioOptions formation;
  auto* f = app.add_subcommand("formation", "Formation control simulation and H-infinity report");
  f->add_option("--config", formation.scenario, "Formation config JSON")->required();
  add_output_options(f, formation.out);

  cli::SweepOptions sweep;
  std::string n_text;
  std::string k_text;
  auto* s = app.add_subcommand("sweep", "Closed-form H-infinity over a grid of platoons");
  s->add_option("--n", n_text, "Platoon sizes: a:b, a,b,c or a")->required();
  s->add_option("--k", k_text, "Neighborhood sizes: a:b, a,b,c or a")->required();
  s->add_option("--kp", sweep.kp, "Position gain")->capture_default_str();
  s->add_option("--ku", sweep.ku, "Velocity gain")->capture_default_str();
  add_output_options(s, sweep.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : cli::kInvalid;
  }

  try {
    if (a->parsed()) {
      if (!platoon_text.empty()) analyze.platoon = cli::parse_platoon_spec(platoon_text);
      if (!graph_path.empty()) analyze.graph = graph_path;
      return cli::cmd_analyze(analyze, std::cout, std::cerr);
    }
    if (e->parsed()) return cli::cmd_estimate(estimate, std::cout, std::cerr);
    if (c->parsed()) return cli::cmd_consensus(consensus, std::cout, std::cerr);
    if (f->parsed()) return cli::cmd_formation(formation, std::cout, std::cerr);
    if (s->parsed()) {
      sweep.n_values = cli::parse_int_range(n_text);
      sweep.k_values = cli::parse_int_range(k_text);
      return cli::cmd_sweep(sweep, std::cout, std::cerr);
    }
  } catch (const platoon::ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return cli::kInvalid;
  }
  return cli::kFailure;
}
