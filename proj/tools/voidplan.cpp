// voidplan: synthesize or fit intensity fields, plan sensor networks, and
// verify the gap-bound analysis.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voidprob/cli.hpp"
#include "voidprob/io.hpp"

namespace cli = voidprob::cli;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sensors;
  std::optional<std::size_t> samples;
  std::optional<std::string> surrogate;
  std::optional<std::string> mode;
  std::optional<double> spacing;
  std::optional<double> candidate_spacing;
  std::optional<double> bandwidth;
  bool no_mc = false;
};

cli::RunConfig resolve(const Overrides& o) {
  cli::RunConfig cfg = o.config.empty() ? cli::RunConfig{} : cli::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.sensors) cfg.sensors = *o.sensors;
  if (o.samples) cfg.mc_samples = *o.samples;
  if (o.surrogate) cfg.surrogate = voidprob::parse_surrogate(*o.surrogate);
  if (o.mode) cfg.mc_mode = voidprob::parse_sampling_mode(*o.mode);
  if (o.spacing) cfg.spacing_km = *o.spacing;
  if (o.candidate_spacing) cfg.candidate_spacing_km = *o.candidate_spacing;
  if (o.bandwidth) cfg.bandwidth_km = *o.bandwidth;
  if (o.no_mc) cfg.mc_enabled = false;
  cli::validate(cfg);
  return cfg;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "RNG seed");
}

std::vector<cli::VerifyCase> parse_cases(const std::vector<std::string>& raw) {
  std::vector<cli::VerifyCase> cases;
  for (const auto& s : raw) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("--case expects MU,SIGMA2, got '" + s + "'");
    }
    cases.push_back({std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))});
  }
  return cases;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seabed sensor placement by void-probability approximation"};
  app.require_subcommand(1);
  Overrides o;

  std::string out;
  std::string arrivals_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic three-zone intensity field");
  add_common(synth, o);
  synth->add_option("--out", out, "Field JSON to write")->required();
  synth->add_option("--spacing", o.spacing, "Grid spacing in km");
  synth->add_option("--arrivals", arrivals_out,
                    "Also write a simulated arrivals CSV drawn from the field");

  std::string arrivals;
  auto* fit = app.add_subcommand("fit", "Estimate a field from an arrivals CSV");
  add_common(fit, o);
  fit->add_option("arrivals", arrivals, "CSV with a position_km column")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out, "Field JSON to write")->required();
  fit->add_option("--bandwidth", o.bandwidth, "Smoothing bandwidth in km");
  fit->add_option("--spacing", o.spacing, "Grid spacing in km");

  std::string field_file;
  std::string curves;
  auto* plan = app.add_subcommand("plan", "Greedy sensor placement with report and curves");
  add_common(plan, o);
  plan->add_option("field", field_file, "Field JSON")->required()->check(CLI::ExistingFile);
  plan->add_option("--out", out, "Report JSON to write")->required();
  plan->add_option("--curves", curves, "Curves CSV (default: report path with .csv)");
  plan->add_option("--sensors", o.sensors, "Number of sensors to place");
  plan->add_option("--samples", o.samples, "Monte-Carlo sample count");
  plan->add_option("--surrogate", o.surrogate, "jensen | variance_corrected");
  plan->add_option("--mode", o.mode, "correlated | independent | degenerate");
  plan->add_option("--candidate-spacing", o.candidate_spacing, "Candidate spacing in km");
  plan->add_flag("--no-mc", o.no_mc, "Skip Monte-Carlo evaluation");

  std::vector<std::string> raw_cases;
  auto* verify = app.add_subcommand("verify", "Run the gap-bound verification sweeps");
  add_common(verify, o);
  verify->add_option("--out", out, "Verification report JSON (default: stdout)");
  verify->add_option("--case", raw_cases, "Extra MU,SIGMA2 pair to check");

  std::string summary_input;
  auto* summary = app.add_subcommand("gap-summary", "Mean absolute gaps of a plan");
  summary->add_option("plan", summary_input, "Curves CSV or report JSON")->required()->check(CLI::ExistingFile);
  summary->add_option("--out", out, "Summary JSON (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitValidation;
  }

  try {
    if (synth->parsed()) {
      const auto cfg = resolve(o);
      std::optional<std::filesystem::path> arr;
      if (!arrivals_out.empty()) arr = arrivals_out;
      cli::cmd_synth(cfg, out, arr);
      std::cout << "wrote " << out << " (" << cfg.domain().size() << " grid points)\n";
    } else if (fit->parsed()) {
      cli::cmd_fit(arrivals, resolve(o), out);
      std::cout << "wrote " << out << "\n";
    } else if (plan->parsed()) {
      std::optional<std::filesystem::path> c;
      if (!curves.empty()) c = curves;
      const auto result = cli::cmd_plan(field_file, resolve(o), out, c);
      std::cout << "placed " << result.trace.size() << " sensors; wrote " << out
                << " and " << c.value_or(cli::curves_path_for(out)).string() << "\n";
    } else if (verify->parsed()) {
      const auto outcome = cli::cmd_verify(resolve(o), parse_cases(raw_cases));
      const std::string text = outcome.report.dump(2) + "\n";
      if (out.empty()) {
        std::cout << text;
      } else {
        voidprob::write_text_file(out, text);
      }
      if (outcome.exit_code() != cli::kExitOk) {
        std::cerr << (outcome.violations ? "verification failed\n"
                                         : "rejected invalid case(s)\n");
      }
      return outcome.exit_code();
    } else if (summary->parsed()) {
      const std::string text = cli::cmd_gap_summary(summary_input).to_json().dump(2) + "\n";
      if (out.empty()) {
        std::cout << text;
      } else {
        voidprob::write_text_file(out, text);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitValidation;
  }
  return cli::kExitOk;
}
