#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace voidprob {

/// Closed 1-D interval [start_km, end_km] discretized at a fixed step.
///
/// Grid points are s_i = start_km + i * spacing_km for i = 0..G-1 with
/// G = floor((end_km - start_km) / spacing_km) + 1. When the length is not a
/// multiple of the step the last point falls short of end_km.
class GridDomain {
 public:
  GridDomain(double start_km, double end_km, double spacing_km);

  double start_km() const { return start_km_; }
  double end_km() const { return end_km_; }
  double spacing_km() const { return spacing_km_; }
  double length_km() const { return end_km_ - start_km_; }

  std::size_t size() const { return count_; }
  double point(std::size_t i) const {
    return start_km_ + static_cast<double>(i) * spacing_km_;
  }
  std::vector<double> points() const;

  /// Trapezoid weights on the grid: interior spacing, endpoints spacing / 2.
  std::vector<double> quadrature_weights() const;

  bool contains(double x_km) const;

  friend bool operator==(const GridDomain&, const GridDomain&) = default;

 private:
  double start_km_;
  double end_km_;
  double spacing_km_;
  std::size_t count_;
};

/// Stationary Matern covariance
///   k(d) = sigma^2 2^(1-nu) / Gamma(nu) (kappa d)^nu K_nu(kappa d),
/// with kappa = sqrt(8 nu) / range.
class MaternKernel {
 public:
  MaternKernel(double smoothness, double range_km, double marginal_std);

  double smoothness() const { return smoothness_; }
  double range_km() const { return range_km_; }
  double marginal_std() const { return marginal_std_; }
  double scale() const { return scale_; }

  /// Correlation k(d) / sigma^2, exactly 1 at d = 0.
  double correlation(double distance_km) const;

  friend bool operator==(const MaternKernel&, const MaternKernel&) = default;

 private:
  double smoothness_;
  double range_km_;
  double marginal_std_;
  double scale_;
};

double matern_cov(const MaternKernel& kernel, double s_km, double t_km);

/// Gridded first and second moments of a log-Gaussian Cox intensity.
///
/// mean and variance are the moments of lambda(s) itself (arrivals per km),
/// not of its logarithm. The kernel, when present, only supplies the
/// correlation structure used for sampling.
class IntensityField {
 public:
  IntensityField(GridDomain domain, std::vector<double> mean,
                 std::vector<double> variance,
                 std::optional<MaternKernel> kernel = std::nullopt,
                 double time_ratio = 1.0);

  const GridDomain& domain() const { return domain_; }
  std::span<const double> mean() const { return mean_; }
  std::span<const double> variance() const { return variance_; }
  const std::optional<MaternKernel>& kernel() const { return kernel_; }
  double time_ratio() const { return time_ratio_; }
  std::size_t size() const { return mean_.size(); }

  friend bool operator==(const IntensityField&,
                         const IntensityField&) = default;

 private:
  GridDomain domain_;
  std::vector<double> mean_;
  std::vector<double> variance_;
  std::optional<MaternKernel> kernel_;
  double time_ratio_;
};

struct ArrivalRecord {
  double position_km;
};

enum class SamplingMode { correlated, independent, degenerate };

std::string_view to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view name);

/// Parameters of the Gaussian log-field matched to lognormal marginals:
/// v = ln(1 + var / mean^2), m = ln(mean) - v / 2.
struct LogMoments {
  double log_mean;
  double log_variance;
};

/// Throws std::invalid_argument when mean == 0 and variance > 0. A point with
/// mean == 0 and variance == 0 yields log_mean = -inf, log_variance = 0.
LogMoments lognormal_log_moments(double mean, double variance);

/// Draws intensity realizations from an IntensityField.
///
/// Sample j depends only on (seed, j): its standard-normal stream is seeded
/// from both, so drawing samples in any order or in parallel gives identical
/// values.
class LogGaussianSampler {
 public:
  LogGaussianSampler(const IntensityField& field, SamplingMode mode);

  SamplingMode mode() const { return mode_; }
  std::size_t size() const { return log_mean_.size(); }

  /// Diagonal jitter (relative to the mean diagonal) that made the
  /// correlation matrix factorizable; 0 for non-correlated modes.
  double jitter() const { return jitter_; }

  std::vector<double> draw(std::uint64_t seed, std::uint64_t index) const;

  /// Writes sample `index` into `out` (length size()).
  void draw_into(std::uint64_t seed, std::uint64_t index,
                 std::span<double> out) const;

 private:
  SamplingMode mode_;
  std::vector<double> mean_;
  std::vector<double> log_mean_;
  std::vector<double> log_std_;
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
};

std::vector<double> sample_log_gaussian_field(const IntensityField& field,
                                              SamplingMode mode,
                                              std::uint64_t seed);

/// Synthetic field from a log-mean profile m(s) and the kernel's marginal
/// variance: mean = exp(m + sigma^2 / 2), variance = (exp(sigma^2) - 1)
/// exp(2m + sigma^2).
IntensityField synthesize_field(const GridDomain& domain,
                                const MaternKernel& kernel,
                                const std::function<double(double)>& log_mean,
                                double time_ratio = 1.0);

IntensityField synthesize_field(const GridDomain& domain,
                                const MaternKernel& kernel, double log_mean,
                                double time_ratio = 1.0);

struct TrafficZone {
  double center_km;
  double width_km;
  double peak;  // arrivals per km at the zone center
};

/// Log-mean profile whose lognormal mean is baseline + sum of Gaussian bumps.
std::function<double(double)> zone_log_mean_profile(
    std::vector<TrafficZone> zones, double baseline, double marginal_std);

/// Three high-traffic zones along an 18.5 km segment.
std::vector<TrafficZone> default_traffic_zones();
constexpr double kDefaultBaseline = 0.01;

struct FitOptions {
  double bandwidth_km = 0.25;
  double min_variance = 1e-6;
  double time_ratio = 1.0;
  std::optional<MaternKernel> kernel;
};

/// Moment heuristic standing in for a Bayesian posterior.
///
/// Arrivals are binned to the nearest grid point and smoothed with a Gaussian
/// kernel normalized per source bin, so the trapezoid integral of the mean
/// equals the number of binned records. The pointwise variance is the Poisson
/// variance of the smoother, sum_j w_ij^2 c_j = mean_i^2 / n_eff_i with the
/// Kish effective count n_eff_i, floored at min_variance where mean_i > 0.
IntensityField estimate_field_from_arrivals(
    std::span<const ArrivalRecord> records, const GridDomain& domain,
    const FitOptions& options);


/// Draws one intensity realization and scatters Poisson arrivals over the
/// grid cells (count ~ Poisson(w_i * lambda_i), positions uniform within each
/// cell). Used to produce synthetic arrival logs for the fitting path.
std::vector<ArrivalRecord> simulate_arrivals(const IntensityField& field,
                                             SamplingMode mode,
                                             std::uint64_t seed);

}  // namespace voidprob
