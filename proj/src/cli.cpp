#include "voidprob/cli.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "voidprob/io.hpp"

namespace voidprob::cli {

using nlohmann::json;

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Reads `section` of `j`, rejecting keys outside `allowed`.
const json* section(const json& j, const char* name,
                    const std::set<std::string>& allowed) {
  if (!j.contains(name)) return nullptr;
  const json& s = j.at(name);
  require(s.is_object(), std::string("config: '") + name + "' must be an object");
  for (const auto& [key, _] : s.items()) {
    require(allowed.count(key) > 0,
            std::string("config: unknown key '") + name + "." + key + "'");
  }
  return &s;
}

template <typename T>
void read(const json* s, const char* key, T& out) {
  if (s == nullptr || !s->contains(key)) return;
  try {
    out = s->at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: bad value for '") + key +
                                "': " + e.what());
  }
}

double integrate(const GridDomain& domain, std::span<const double> f) {
  const auto w = domain.quadrature_weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * f[i];
  return acc;
}

json mc_json(const McEstimate& mc) {
  return {{"value", mc.value},
          {"std_error", mc.std_error},
          {"samples", mc.samples},
          {"mu_x", mc.x_mean},
          {"sigma2_x", mc.x_variance}};
}

json bounds_json(const GapDiagnostics& d) {
  return {{"mu_x", d.mu_x},
          {"sigma2_x", d.sigma2_x},
          {"jensen_gap_lower", d.jensen_gap_lower},
          {"jensen_gap_upper", d.jensen_gap_upper},
          {"new_gap_lower", d.new_gap_lower},
          {"new_gap_upper", d.new_gap_upper},
          {"measured_jensen_gap", d.measured_jensen_gap},
          {"measured_new_gap", d.measured_new_gap}};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig cfg) {
  require(j.is_object(), "config: top level must be an object");
  static const std::set<std::string> top = {
      "domain", "time_ratio", "kernel", "synth",       "fit",
      "sensor", "placement",  "monte_carlo", "verify"};
  for (const auto& [key, _] : j.items()) {
    require(top.count(key) > 0, "config: unknown key '" + key + "'");
  }
  const json* d = section(j, "domain", {"start_km", "end_km", "spacing_km"});
  read(d, "start_km", cfg.start_km);
  read(d, "end_km", cfg.end_km);
  read(d, "spacing_km", cfg.spacing_km);
  if (j.contains("time_ratio")) read(&j, "time_ratio", cfg.time_ratio);

  const json* k = section(j, "kernel", {"smoothness", "range_km", "marginal_std"});
  read(k, "smoothness", cfg.smoothness);
  read(k, "range_km", cfg.range_km);
  read(k, "marginal_std", cfg.marginal_std);

  const json* s =
      section(j, "synth", {"profile", "constant_log_mean", "baseline", "zones"});
  read(s, "profile", cfg.profile);
  read(s, "constant_log_mean", cfg.constant_log_mean);
  read(s, "baseline", cfg.baseline);
  if (s != nullptr && s->contains("zones")) {
    cfg.zones.clear();
    for (const auto& z : s->at("zones")) {
      TrafficZone zone{};
      read(&z, "center_km", zone.center_km);
      read(&z, "width_km", zone.width_km);
      read(&z, "peak", zone.peak);
      cfg.zones.push_back(zone);
    }
  }

  const json* f = section(j, "fit", {"bandwidth_km", "min_variance", "attach_kernel"});
  read(f, "bandwidth_km", cfg.bandwidth_km);
  read(f, "min_variance", cfg.min_variance);
  read(f, "attach_kernel", cfg.attach_kernel);

  const json* sn = section(j, "sensor", {"rho", "sigma_l"});
  read(sn, "rho", cfg.rho);
  read(sn, "sigma_l", cfg.sigma_l);

  const json* p =
      section(j, "placement", {"candidate_spacing_km", "sensors", "surrogate"});
  read(p, "candidate_spacing_km", cfg.candidate_spacing_km);
  read(p, "sensors", cfg.sensors);
  if (p != nullptr && p->contains("surrogate")) {
    cfg.surrogate = parse_surrogate(p->at("surrogate").get<std::string>());
  }

  const json* mc = section(j, "monte_carlo", {"enabled", "samples", "mode", "seed"});
  read(mc, "enabled", cfg.mc_enabled);
  read(mc, "samples", cfg.mc_samples);
  read(mc, "seed", cfg.seed);
  if (mc != nullptr && mc->contains("mode")) {
    cfg.mc_mode = parse_sampling_mode(mc->at("mode").get<std::string>());
  }

  const json* v = section(j, "verify",
                          {"pairs", "mu_max", "sigma2_max", "xi_points",
                           "xi_mu_min", "fd_relative_step", "seed"});
  read(v, "pairs", cfg.verify.pairs);
  read(v, "mu_max", cfg.verify.mu_max);
  read(v, "sigma2_max", cfg.verify.sigma2_max);
  read(v, "xi_points", cfg.verify.xi_points);
  read(v, "xi_mu_min", cfg.verify.xi_mu_min);
  read(v, "fd_relative_step", cfg.verify.fd_relative_step);
  read(v, "seed", cfg.verify.seed);
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json zones = json::array();
  for (const auto& z : cfg.zones) {
    zones.push_back(
        {{"center_km", z.center_km}, {"width_km", z.width_km}, {"peak", z.peak}});
  }
  return {
      {"domain",
       {{"start_km", cfg.start_km},
        {"end_km", cfg.end_km},
        {"spacing_km", cfg.spacing_km}}},
      {"time_ratio", cfg.time_ratio},
      {"kernel",
       {{"smoothness", cfg.smoothness},
        {"range_km", cfg.range_km},
        {"marginal_std", cfg.marginal_std}}},
      {"synth",
       {{"profile", cfg.profile},
        {"constant_log_mean", cfg.constant_log_mean},
        {"baseline", cfg.baseline},
        {"zones", zones}}},
      {"fit",
       {{"bandwidth_km", cfg.bandwidth_km},
        {"min_variance", cfg.min_variance},
        {"attach_kernel", cfg.attach_kernel}}},
      {"sensor", {{"rho", cfg.rho}, {"sigma_l", cfg.sigma_l}}},
      {"placement",
       {{"candidate_spacing_km", cfg.candidate_spacing_km},
        {"sensors", cfg.sensors},
        {"surrogate", std::string(to_string(cfg.surrogate))}}},
      {"monte_carlo",
       {{"enabled", cfg.mc_enabled},
        {"samples", cfg.mc_samples},
        {"mode", std::string(to_string(cfg.mc_mode))},
        {"seed", cfg.seed}}},
      {"verify",
       {{"pairs", cfg.verify.pairs},
        {"mu_max", cfg.verify.mu_max},
        {"sigma2_max", cfg.verify.sigma2_max},
        {"xi_points", cfg.verify.xi_points},
        {"xi_mu_min", cfg.verify.xi_mu_min},
        {"fd_relative_step", cfg.verify.fd_relative_step},
        {"seed", cfg.verify.seed}}},
  };
}

RunConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path));
}

void validate(const RunConfig& cfg) {
  (void)cfg.domain();
  (void)cfg.kernel();
  (void)cfg.sensor_model();
  require(cfg.time_ratio > 0.0, "time_ratio must be positive");
  require(cfg.profile == "zones" || cfg.profile == "constant",
          "synth.profile must be 'zones' or 'constant'");
  require(cfg.baseline > 0.0, "synth.baseline must be positive");
  require(cfg.bandwidth_km > 0.0, "fit.bandwidth_km must be positive");
  require(cfg.min_variance > 0.0, "fit.min_variance must be positive");
  require(cfg.candidate_spacing_km > 0.0,
          "placement.candidate_spacing_km must be positive");
  require(cfg.sensors >= 1, "placement.sensors must be at least 1");
  require(cfg.mc_samples >= 1, "monte_carlo.samples must be at least 1");
  require(cfg.verify.pairs >= 1 && cfg.verify.xi_points >= 2,
          "verify sweep sizes too small");
  require(cfg.verify.mu_max > 0.0 && cfg.verify.sigma2_max > 0.0 &&
              cfg.verify.xi_mu_min > 0.0 &&
              cfg.verify.xi_mu_min < cfg.verify.mu_max &&
              cfg.verify.fd_relative_step > 0.0,
          "verify ranges invalid");
}

IntensityField build_synthetic_field(const RunConfig& cfg) {
  validate(cfg);
  const GridDomain domain = cfg.domain();
  const MaternKernel kernel = cfg.kernel();
  if (cfg.profile == "constant") {
    return synthesize_field(domain, kernel, cfg.constant_log_mean, cfg.time_ratio);
  }
  return synthesize_field(
      domain, kernel,
      zone_log_mean_profile(cfg.zones, cfg.baseline, cfg.marginal_std),
      cfg.time_ratio);
}

void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out,
               const std::optional<std::filesystem::path>& arrivals_out) {
  const IntensityField field = build_synthetic_field(cfg);
  write_field_file(out, field);
  if (arrivals_out) {
    write_arrivals_csv(*arrivals_out,
                       simulate_arrivals(field, cfg.mc_mode, cfg.seed));
  }
}

void cmd_fit(const std::filesystem::path& arrivals, const RunConfig& cfg,
             const std::filesystem::path& out) {
  validate(cfg);
  const auto records = read_arrivals_csv(arrivals);
  FitOptions opts;
  opts.bandwidth_km = cfg.bandwidth_km;
  opts.min_variance = cfg.min_variance;
  opts.time_ratio = cfg.time_ratio;
  if (cfg.attach_kernel) opts.kernel = cfg.kernel();
  write_field_file(out, estimate_field_from_arrivals(records, cfg.domain(), opts));
}

PlanOutput run_plan(const IntensityField& field, const RunConfig& cfg) {
  validate(cfg);
  const SensorModel model = cfg.sensor_model();
  const CandidateSet candidates =
      CandidateSet::from_grid(field.domain(), cfg.candidate_spacing_km);
  std::optional<McOptions> mc;
  if (cfg.mc_enabled) mc = McOptions{cfg.mc_samples, cfg.mc_mode, cfg.seed};

  PlanOutput out;
  out.trace = greedy_place(field, model, candidates, cfg.sensors, cfg.surrogate, mc);
  const PlacementTrace& t = out.trace;

  const GridDomain& d = field.domain();
  json report;
  report["surrogate"] = std::string(to_string(cfg.surrogate));
  report["sensor"] = {{"rho", cfg.rho}, {"sigma_l", cfg.sigma_l}};
  report["placement"] = {{"sensors", cfg.sensors},
                         {"candidate_spacing_km", cfg.candidate_spacing_km},
                         {"candidates", candidates.size()}};
  report["monte_carlo"] = {{"enabled", cfg.mc_enabled},
                           {"samples", cfg.mc_samples},
                           {"mode", std::string(to_string(cfg.mc_mode))},
                           {"seed", cfg.seed}};
  report["field"] = {{"start_km", d.start_km()},
                     {"end_km", d.end_km()},
                     {"spacing_km", d.spacing_km()},
                     {"grid_points", d.size()},
                     {"time_ratio", field.time_ratio()},
                     {"has_kernel", field.kernel().has_value()},
                     {"integrated_mean", integrate(d, field.mean())},
                     {"integrated_variance", integrate(d, field.variance())}};

  json steps = json::array();
  std::ostringstream csv;
  csv << "n,jensen,corrected,mc,mc_se,gap_jensen,gap_corrected\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    json step = {{"n", k + 1},
                 {"position_km", t.chosen[k]},
                 {"mu_x", t.moment_curve[k].mu_x},
                 {"sigma2_x", t.moment_curve[k].sigma2_x},
                 {"objective", t.objective_curve[k]},
                 {"jensen", t.jensen_curve[k]},
                 {"corrected", t.corrected_curve[k]},
                 {"corrected_exceeds_one", t.corrected_curve[k] > 1.0}};
    csv << (k + 1) << ',' << format_double(t.jensen_curve[k]) << ','
        << format_double(t.corrected_curve[k]) << ',';
    if (t.has_mc()) {
      step["mc"] = mc_json(t.mc_curve[k]);
      step["gap_jensen"] = t.jensen_gap_curve[k];
      step["gap_corrected"] = t.corrected_gap_curve[k];
      step["bounds"] = bounds_json(t.diagnostics[k]);
      csv << format_double(t.mc_curve[k].value) << ','
          << format_double(t.mc_curve[k].std_error) << ','
          << format_double(t.jensen_gap_curve[k]) << ','
          << format_double(t.corrected_gap_curve[k]);
    } else {
      step["mc"] = nullptr;
      csv << ",,,";
    }
    csv << '\n';
    steps.push_back(std::move(step));
  }
  report["steps"] = std::move(steps);
  report["gap_summary"] = t.has_mc() ? summarize_gaps(t).to_json() : json(nullptr);
  out.report = std::move(report);
  out.curves_csv = csv.str();
  return out;
}

std::filesystem::path curves_path_for(const std::filesystem::path& report) {
  std::filesystem::path p = report;
  p.replace_extension(".csv");
  if (p == report) p += ".csv";
  return p;
}

PlanOutput cmd_plan(const std::filesystem::path& field_file,
                    const RunConfig& cfg, const std::filesystem::path& report,
                    const std::optional<std::filesystem::path>& curves) {
  PlanOutput out = run_plan(read_field_file(field_file), cfg);
  write_text_file(report, out.report.dump(2) + "\n");
  write_text_file(curves.value_or(curves_path_for(report)), out.curves_csv);
  return out;
}

int VerifyOutcome::exit_code() const {
  if (violations) return kExitVerification;
  if (rejected_cases) return kExitValidation;
  return kExitOk;
}

VerifyOutcome cmd_verify(const RunConfig& cfg,
                         const std::vector<VerifyCase>& cases) {
  validate(cfg);
  constexpr double kDerivativeTolerance = 1e-7;
  constexpr double kIdentityTolerance = 1e-12;
  VerifyOutcome out;

  const DominanceSweepResult dominance = dominance_sweep(cfg.verify);
  const bool dominance_ok = dominance.violations == 0;
  const bool identity_ok = dominance.max_identity_rel_error <= kIdentityTolerance;

  const XiSweepResult xs = xi_sweep(cfg.verify);
  const bool xi_ok = xs.non_positive == 0 && xs.non_increasing == 0;
  const bool derivative_ok = xs.max_derivative_rel_error <= kDerivativeTolerance;

  json ratio = json::array();
  bool ratio_ok = true;
  for (double mu : {0.1, 1.0, 5.0, 20.0}) {
    const bool ok = jensen_gap_ratio_non_increasing(mu, 10001);
    ratio_ok = ratio_ok && ok;
    ratio.push_back({{"mu", mu}, {"non_increasing", ok}});
  }

  json case_reports = json::array();
  bool cases_ok = true;
  for (const auto& c : cases) {
    json entry = {{"mu", c.mu}, {"sigma2", c.sigma2}};
    try {
      const DominanceCheck r = dominance_check(c.mu, c.sigma2);
      entry["status"] = r.holds() ? "pass" : "fail";
      entry["upper_margin"] = r.upper_margin;
      entry["magnitude_margin"] = r.magnitude_margin;
      cases_ok = cases_ok && r.holds();
    } catch (const std::invalid_argument& e) {
      entry["status"] = "rejected";
      entry["reason"] = e.what();
      out.rejected_cases = true;
    }
    case_reports.push_back(std::move(entry));
  }

  out.violations =
      !(dominance_ok && identity_ok && xi_ok && derivative_ok && ratio_ok && cases_ok);
  out.report = {
      {"dominance",
       {{"pairs", dominance.checked},
        {"violations", dominance.violations},
        {"worst_upper_margin_relative", dominance.worst_upper_margin},
        {"worst_upper_margin_mu", dominance.worst_upper_mu},
        {"worst_magnitude_margin_relative", dominance.worst_magnitude_margin},
        {"worst_magnitude_margin_mu", dominance.worst_magnitude_mu},
        {"pass", dominance_ok}}},
      {"bound_identity",
       {{"max_relative_error", dominance.max_identity_rel_error},
        {"worst_mu", dominance.worst_identity_mu},
        {"tolerance", kIdentityTolerance},
        {"pass", identity_ok}}},
      {"xi",
       {{"points", xs.checked},
        {"non_positive", xs.non_positive},
        {"non_increasing", xs.non_increasing},
        {"max_derivative_relative_error", xs.max_derivative_rel_error},
        {"worst_derivative_mu", xs.worst_derivative_mu},
        {"derivative_tolerance", kDerivativeTolerance},
        {"pass", xi_ok && derivative_ok}}},
      {"gap_ratio_monotone", {{"cases", ratio}, {"pass", ratio_ok}}},
      {"cases", case_reports},
      {"pass", !out.violations && !out.rejected_cases},
  };
  return out;
}

json GapSummary::to_json() const {
  return {{"rows", rows},
          {"mean_abs_gap_jensen", mean_abs_jensen_gap},
          {"mean_abs_gap_corrected", mean_abs_corrected_gap},
          {"reduction_percent", reduction_percent}};
}

GapSummary summarize_gaps(const std::vector<double>& jensen_gaps,
                          const std::vector<double>& corrected_gaps) {
  require(jensen_gaps.size() == corrected_gaps.size(),
          "gap columns have different lengths");
  require(!jensen_gaps.empty(), "no Monte-Carlo gap values to summarize");
  GapSummary s;
  s.rows = jensen_gaps.size();
  for (std::size_t k = 0; k < s.rows; ++k) {
    s.mean_abs_jensen_gap += std::abs(jensen_gaps[k]);
    s.mean_abs_corrected_gap += std::abs(corrected_gaps[k]);
  }
  s.mean_abs_jensen_gap /= static_cast<double>(s.rows);
  s.mean_abs_corrected_gap /= static_cast<double>(s.rows);
  s.reduction_percent =
      s.mean_abs_jensen_gap > 0.0
          ? 100.0 * (s.mean_abs_jensen_gap - s.mean_abs_corrected_gap) /
                s.mean_abs_jensen_gap
          : 0.0;
  return s;
}

GapSummary summarize_gaps(const PlacementTrace& trace) {
  return summarize_gaps(trace.jensen_gap_curve, trace.corrected_gap_curve);
}

GapSummary gap_summary_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "curves CSV is empty");
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw std::invalid_argument("curves CSV lacks column '" + name + "'");
  };
  const std::size_t cj = column("gap_jensen");
  const std::size_t cc = column("gap_corrected");
  std::vector<double> gj;
  std::vector<double> gc;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    require(cells.size() > std::max(cj, cc) && !cells[cj].empty() &&
                !cells[cc].empty(),
            "curves CSV has empty Monte-Carlo gap columns (was MC disabled?)");
    gj.push_back(std::stod(cells[cj]));
    gc.push_back(std::stod(cells[cc]));
  }
  return summarize_gaps(gj, gc);
}

GapSummary cmd_gap_summary(const std::filesystem::path& plan_output) {
  if (plan_output.extension() == ".json") {
    const json report = read_json_file(plan_output);
    require(report.contains("steps"), "plan report lacks 'steps'");
    std::vector<double> gj;
    std::vector<double> gc;
    for (const auto& step : report.at("steps")) {
      require(step.contains("gap_jensen") && step.contains("gap_corrected"),
              "plan report has no Monte-Carlo gaps (was MC disabled?)");
      gj.push_back(step.at("gap_jensen").get<double>());
      gc.push_back(step.at("gap_corrected").get<double>());
    }
    return summarize_gaps(gj, gc);
  }
  std::ifstream in(plan_output);
  if (!in) throw std::runtime_error("cannot open " + plan_output.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return gap_summary_from_csv(buf.str());
}

}  // namespace voidprob::cli
