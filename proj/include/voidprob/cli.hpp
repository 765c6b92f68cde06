#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "voidprob/bounds.hpp"
#include "voidprob/field.hpp"
#include "voidprob/placement.hpp"

namespace voidprob::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitVerification = 2;

/// Every tunable of a run. Defaults reproduce the reference experiment: an
/// 18.5 km segment on a 50 m grid, rho = 0.95, sigma_l = 0.05, 30 sensors and
/// 20,000 Monte-Carlo samples.
struct RunConfig {
  // Domain and synthetic field.
  double start_km = 0.0;
  double end_km = 18.5;
  double spacing_km = 0.05;
  double time_ratio = 1.0;
  double smoothness = 1.5;
  double range_km = 5.0;
  double marginal_std = 0.5;
  std::string profile = "zones";  // "zones" or "constant"
  double constant_log_mean = 0.0;
  std::vector<TrafficZone> zones = default_traffic_zones();
  double baseline = kDefaultBaseline;

  // Field estimation from arrivals.
  double bandwidth_km = 0.25;
  double min_variance = 1e-6;
  bool attach_kernel = true;

  // Sensors and placement.
  double rho = 0.95;
  double sigma_l = 0.05;
  double candidate_spacing_km = 0.05;
  std::size_t sensors = 30;
  Surrogate surrogate = Surrogate::variance_corrected;

  // Monte Carlo.
  bool mc_enabled = true;
  std::size_t mc_samples = 20000;
  SamplingMode mc_mode = SamplingMode::correlated;
  std::uint64_t seed = 1;

  SweepOptions verify;

  GridDomain domain() const { return {start_km, end_km, spacing_km}; }
  MaternKernel kernel() const { return {smoothness, range_km, marginal_std}; }
  SensorModel sensor_model() const { return {rho, sigma_l}; }
};

/// Overlays keys present in `j` onto `base`. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// Throws std::invalid_argument on any out-of-range parameter.
void validate(const RunConfig& cfg);

IntensityField build_synthetic_field(const RunConfig& cfg);

void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out,
               const std::optional<std::filesystem::path>& arrivals_out = {});

void cmd_fit(const std::filesystem::path& arrivals, const RunConfig& cfg,
             const std::filesystem::path& out);

struct PlanOutput {
  PlacementTrace trace;
  nlohmann::json report;
  std::string curves_csv;
};

PlanOutput run_plan(const IntensityField& field, const RunConfig& cfg);

/// Default curves path: the report path with a .csv extension.
std::filesystem::path curves_path_for(const std::filesystem::path& report);

PlanOutput cmd_plan(const std::filesystem::path& field_file,
                    const RunConfig& cfg, const std::filesystem::path& report,
                    const std::optional<std::filesystem::path>& curves = {});

struct VerifyCase {
  double mu;
  double sigma2;
};

struct VerifyOutcome {
  nlohmann::json report;
  bool violations = false;      // a sweep or a valid case failed
  bool rejected_cases = false;  // a supplied case broke mu > 0, sigma2 > 0
  int exit_code() const;
};

VerifyOutcome cmd_verify(const RunConfig& cfg,
                         const std::vector<VerifyCase>& cases = {});

struct GapSummary {
  std::size_t rows = 0;
  double mean_abs_jensen_gap = 0.0;
  double mean_abs_corrected_gap = 0.0;
  double reduction_percent = 0.0;

  nlohmann::json to_json() const;
};

GapSummary summarize_gaps(const std::vector<double>& jensen_gaps,
                          const std::vector<double>& corrected_gaps);
GapSummary summarize_gaps(const PlacementTrace& trace);

/// Reads a curves CSV (or a plan report JSON) and summarizes its gap columns.
/// Throws std::invalid_argument when the Monte-Carlo columns are empty.
GapSummary cmd_gap_summary(const std::filesystem::path& plan_output);
GapSummary gap_summary_from_csv(const std::string& csv);

}  // namespace voidprob::cli
