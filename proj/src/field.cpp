#include "voidprob/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace voidprob {

namespace {

constexpr double kGridTolerance = 1e-9;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// One independent engine per (seed, sample index).
std::mt19937_64 sample_engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

GridDomain::GridDomain(double start_km, double end_km, double spacing_km)
    : start_km_(start_km), end_km_(end_km), spacing_km_(spacing_km) {
  require(std::isfinite(start_km) && std::isfinite(end_km),
          "domain bounds must be finite");
  require(end_km > start_km, "domain end_km must exceed start_km");
  require(std::isfinite(spacing_km) && spacing_km > 0.0,
          "domain spacing_km must be positive");
  const double steps = (end_km - start_km) / spacing_km;
  count_ = static_cast<std::size_t>(std::floor(steps + kGridTolerance)) + 1;
}

std::vector<double> GridDomain::points() const {
  std::vector<double> pts(count_);
  for (std::size_t i = 0; i < count_; ++i) pts[i] = point(i);
  return pts;
}

std::vector<double> GridDomain::quadrature_weights() const {
  std::vector<double> w(count_, spacing_km_);
  if (count_ == 1) {
    w[0] = 0.0;
    return w;
  }
  w.front() = 0.5 * spacing_km_;
  w.back() = 0.5 * spacing_km_;
  return w;
}

bool GridDomain::contains(double x_km) const {
  const double tol = kGridTolerance * std::max(1.0, spacing_km_);
  return x_km >= start_km_ - tol && x_km <= end_km_ + tol;
}

MaternKernel::MaternKernel(double smoothness, double range_km,
                           double marginal_std)
    : smoothness_(smoothness), range_km_(range_km), marginal_std_(marginal_std) {
  require(std::isfinite(smoothness) && smoothness > 0.0,
          "Matern smoothness must be positive");
  require(std::isfinite(range_km) && range_km > 0.0,
          "Matern range_km must be positive");
  require(std::isfinite(marginal_std) && marginal_std > 0.0,
          "Matern marginal_std must be positive");
  scale_ = std::sqrt(8.0 * smoothness_) / range_km_;
}

double MaternKernel::correlation(double distance_km) const {
  const double x = scale_ * std::abs(distance_km);
  if (x == 0.0) return 1.0;
  // K_nu underflows well before this; the product is below 1e-300 anyway.
  if (x > 700.0) return 0.0;
  const double nu = smoothness_;
  const double log_coef = (1.0 - nu) * std::log(2.0) - std::lgamma(nu);
  const double value =
      std::exp(log_coef + nu * std::log(x)) * std::cyl_bessel_k(nu, x);
  return std::clamp(value, 0.0, 1.0);
}

double matern_cov(const MaternKernel& kernel, double s_km, double t_km) {
  const double var = kernel.marginal_std() * kernel.marginal_std();
  if (s_km == t_km) return var;
  return var * kernel.correlation(s_km - t_km);
}

IntensityField::IntensityField(GridDomain domain, std::vector<double> mean,
                               std::vector<double> variance,
                               std::optional<MaternKernel> kernel,
                               double time_ratio)
    : domain_(domain),
      mean_(std::move(mean)),
      variance_(std::move(variance)),
      kernel_(std::move(kernel)),
      time_ratio_(time_ratio) {
  const std::size_t g = domain_.size();
  require(mean_.size() == g, "mean array length " +
                                 std::to_string(mean_.size()) +
                                 " does not match grid size " +
                                 std::to_string(g));
  require(variance_.size() == g, "variance array length " +
                                     std::to_string(variance_.size()) +
                                     " does not match grid size " +
                                     std::to_string(g));
  for (std::size_t i = 0; i < g; ++i) {
    require(std::isfinite(mean_[i]) && mean_[i] >= 0.0,
            "mean must be finite and non-negative at index " +
                std::to_string(i));
    require(std::isfinite(variance_[i]) && variance_[i] >= 0.0,
            "variance must be finite and non-negative at index " +
                std::to_string(i));
  }
  require(std::isfinite(time_ratio_) && time_ratio_ > 0.0,
          "time_ratio must be positive");
}

std::string_view to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::correlated:
      return "correlated";
    case SamplingMode::independent:
      return "independent";
    case SamplingMode::degenerate:
      return "degenerate";
  }
  return "unknown";
}

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "correlated") return SamplingMode::correlated;
  if (name == "independent") return SamplingMode::independent;
  if (name == "degenerate") return SamplingMode::degenerate;
  throw std::invalid_argument("unknown sampling mode '" + std::string(name) +
                              "' (expected correlated, independent or "
                              "degenerate)");
}

LogMoments lognormal_log_moments(double mean, double variance) {
  if (mean == 0.0) {
    if (variance > 0.0) {
      throw std::invalid_argument(
          "lognormal moment matching undefined for zero mean with positive "
          "variance");
    }
    return {-std::numeric_limits<double>::infinity(), 0.0};
  }
  const double v = std::log1p(variance / (mean * mean));
  return {std::log(mean) - 0.5 * v, v};
}

LogGaussianSampler::LogGaussianSampler(const IntensityField& field,
                                       SamplingMode mode)
    : mode_(mode), mean_(field.mean().begin(), field.mean().end()) {
  const std::size_t g = field.size();
  log_mean_.resize(g);
  log_std_.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    const LogMoments lm =
        lognormal_log_moments(field.mean()[i], field.variance()[i]);
    log_mean_[i] = lm.log_mean;
    log_std_[i] = std::sqrt(lm.log_variance);
  }
  if (mode_ != SamplingMode::correlated) return;

  if (!field.kernel()) {
    throw std::invalid_argument(
        "correlated sampling requires a kernel on the intensity field");
  }
  const MaternKernel& kernel = *field.kernel();
  const GridDomain& domain = field.domain();
  Eigen::MatrixXd corr(g, g);
  for (std::size_t i = 0; i < g; ++i) {
    corr(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c = kernel.correlation(domain.point(i) - domain.point(j));
      corr(i, j) = c;
      corr(j, i) = c;
    }
  }
  // Mean diagonal of a correlation matrix is 1, so the jitter is absolute.
  for (double jitter = 1e-10; jitter <= 1e-4 * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd repaired = corr;
    repaired.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(repaired);
    if (llt.info() == Eigen::Success) {
      factor_ = llt.matrixL();
      jitter_ = jitter;
      return;
    }
  }
  throw std::runtime_error(
      "correlation matrix factorization failed after maximum jitter 1e-4");
}

std::vector<double> LogGaussianSampler::draw(std::uint64_t seed,
                                             std::uint64_t index) const {
  std::vector<double> out(size());
  draw_into(seed, index, out);
  return out;
}

void LogGaussianSampler::draw_into(std::uint64_t seed, std::uint64_t index,
                                   std::span<double> out) const {
  const std::size_t g = size();
  if (out.size() != g) {
    throw std::invalid_argument("sample buffer length does not match grid");
  }
  if (mode_ == SamplingMode::degenerate) {
    std::copy(mean_.begin(), mean_.end(), out.begin());
    return;
  }
  auto engine = sample_engine(seed, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(g);
  for (std::size_t i = 0; i < g; ++i) z[i] = normal(engine);
  if (mode_ == SamplingMode::correlated) {
    z = factor_.triangularView<Eigen::Lower>() * z;
  }
  for (std::size_t i = 0; i < g; ++i) {
    out[i] = log_std_[i] == 0.0 ? mean_[i]
                                : std::exp(log_mean_[i] + log_std_[i] * z[i]);
  }
}

std::vector<double> sample_log_gaussian_field(const IntensityField& field,
                                              SamplingMode mode,
                                              std::uint64_t seed) {
  return LogGaussianSampler(field, mode).draw(seed, 0);
}

IntensityField synthesize_field(const GridDomain& domain,
                                const MaternKernel& kernel,
                                const std::function<double(double)>& log_mean,
                                double time_ratio) {
  const double s2 = kernel.marginal_std() * kernel.marginal_std();
  const std::size_t g = domain.size();
  std::vector<double> mean(g);
  std::vector<double> variance(g);
  for (std::size_t i = 0; i < g; ++i) {
    const double m = log_mean(domain.point(i));
    mean[i] = std::exp(m + 0.5 * s2);
    variance[i] = std::expm1(s2) * std::exp(2.0 * m + s2);
  }
  return IntensityField(domain, std::move(mean), std::move(variance), kernel,
                        time_ratio);
}

IntensityField synthesize_field(const GridDomain& domain,
                                const MaternKernel& kernel, double log_mean,
                                double time_ratio) {
  return synthesize_field(
      domain, kernel, [log_mean](double) { return log_mean; }, time_ratio);
}

std::function<double(double)> zone_log_mean_profile(
    std::vector<TrafficZone> zones, double baseline, double marginal_std) {
  require(baseline > 0.0, "zone profile baseline must be positive");
  for (const auto& z : zones) {
    require(z.width_km > 0.0 && z.peak >= 0.0,
            "traffic zone needs positive width and non-negative peak");
  }
  const double half_var = 0.5 * marginal_std * marginal_std;
  return [zones = std::move(zones), baseline, half_var](double s) {
    double level = baseline;
    for (const auto& z : zones) {
      const double u = (s - z.center_km) / z.width_km;
      level += z.peak * std::exp(-0.5 * u * u);
    }
    return std::log(level) - half_var;
  };
}

std::vector<TrafficZone> default_traffic_zones() {
  return {{3.2, 0.45, 3.0}, {9.1, 0.6, 4.2}, {14.6, 0.35, 2.4}};
}

IntensityField estimate_field_from_arrivals(
    std::span<const ArrivalRecord> records, const GridDomain& domain,
    const FitOptions& options) {
  require(!records.empty(), "no arrival records supplied");
  require(std::isfinite(options.bandwidth_km) && options.bandwidth_km > 0.0,
          "bandwidth_km must be positive");
  require(std::isfinite(options.min_variance) && options.min_variance > 0.0,
          "min_variance floor must be positive");

  const std::size_t g = domain.size();
  std::vector<double> counts(g, 0.0);
  std::size_t inside = 0;
  for (const auto& r : records) {
    if (!std::isfinite(r.position_km) || !domain.contains(r.position_km)) {
      continue;
    }
    const double raw = (r.position_km - domain.start_km()) / domain.spacing_km();
    const auto bin = std::min<std::size_t>(
        static_cast<std::size_t>(std::llround(std::max(raw, 0.0))), g - 1);
    counts[bin] += 1.0;
    ++inside;
  }
  require(inside > 0, "all arrival records fall outside the domain");

  const std::vector<double> w = domain.quadrature_weights();
  const double h = options.bandwidth_km;
  auto kern = [h](double d) {
    const double u = d / h;
    return std::exp(-0.5 * u * u);
  };

  std::vector<double> mean(g, 0.0);
  std::vector<double> poisson_var(g, 0.0);
  std::vector<double> column(g);
  for (std::size_t j = 0; j < g; ++j) {
    if (counts[j] == 0.0) continue;
    double norm = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
      column[i] = kern(domain.point(i) - domain.point(j));
      norm += w[i] * column[i];
    }
    if (norm <= 0.0) {
      // Single-point grid: no length to spread the mass over.
      throw std::invalid_argument("domain too small to smooth arrivals");
    }
    for (std::size_t i = 0; i < g; ++i) {
      const double weight = column[i] / norm;
      mean[i] += weight * counts[j];
      poisson_var[i] += weight * weight * counts[j];
    }
  }

  std::vector<double> variance(g, 0.0);
  for (std::size_t i = 0; i < g; ++i) {
    if (mean[i] > 0.0) {
      variance[i] = std::max(poisson_var[i], options.min_variance);
    }
  }
  return IntensityField(domain, std::move(mean), std::move(variance),
                        options.kernel, options.time_ratio);
}


std::vector<ArrivalRecord> simulate_arrivals(const IntensityField& field,
                                             SamplingMode mode,
                                             std::uint64_t seed) {
  const auto lambda = sample_log_gaussian_field(field, mode, seed);
  const GridDomain& domain = field.domain();
  const auto w = domain.quadrature_weights();
  // Stream index 0 is used by the intensity draw above.
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0xA5A5u, 1u};
  std::mt19937_64 engine(seq);
  std::vector<ArrivalRecord> out;
  const double h = domain.spacing_km();
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const double rate = w[i] * lambda[i];
    if (rate <= 0.0) continue;
    std::poisson_distribution<long> count(rate);
    const long k = count(engine);
    // Cell i spans [s_i - h/2, s_i + h/2] clipped to the domain.
    const double lo = std::max(domain.point(i) - 0.5 * h, domain.start_km());
    const double hi = std::min(domain.point(i) + 0.5 * h, domain.end_km());
    std::uniform_real_distribution<double> where(lo, hi);
    for (long a = 0; a < k; ++a) out.push_back({where(engine)});
  }
  std::sort(out.begin(), out.end(), [](const ArrivalRecord& a,
                                       const ArrivalRecord& b) {
    return a.position_km < b.position_km;
  });
  return out;
}

}  // namespace voidprob
