#include "voidprob/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace voidprob {

namespace {

// (T/Tc) * sum_i w_i a_i b_i. Shared by the analytic mean and the degenerate
// Monte-Carlo path so the two agree bit for bit.
double scaled_quadrature(double scale, std::span<const double> w,
                         std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * a[i] * b[i];
  return scale * acc;
}

void check_profile(const IntensityField& field, std::span<const double> miss) {
  if (miss.size() != field.size()) {
    throw std::invalid_argument("miss profile length does not match grid");
  }
}

}  // namespace

double expected_undetected(const IntensityField& field,
                           std::span<const double> miss) {
  check_profile(field, miss);
  const auto w = field.domain().quadrature_weights();
  return scaled_quadrature(field.time_ratio(), w, field.mean(), miss);
}

double expected_undetected(const IntensityField& field,
                           const SensorNetwork& net) {
  check_network_in_domain(net, field.domain());
  return expected_undetected(field, miss_profile(net, field.domain()));
}

double variance_undetected(const IntensityField& field,
                           std::span<const double> miss) {
  check_profile(field, miss);
  const auto w = field.domain().quadrature_weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i] * field.variance()[i] * miss[i] * miss[i];
  }
  const double tr = field.time_ratio();
  return tr * tr * acc;
}

double variance_undetected(const IntensityField& field,
                           const SensorNetwork& net) {
  check_network_in_domain(net, field.domain());
  return variance_undetected(field, miss_profile(net, field.domain()));
}

double covariance_exact_variance(const IntensityField& field,
                                 const SensorNetwork& net) {
  if (!field.kernel()) {
    throw std::invalid_argument(
        "covariance_exact_variance requires a kernel on the intensity field");
  }
  check_network_in_domain(net, field.domain());
  const GridDomain& domain = field.domain();
  const auto miss = miss_profile(net, domain);
  const auto w = domain.quadrature_weights();
  const std::size_t g = field.size();

  std::vector<double> log_std(g);
  std::vector<double> scaled(g);  // w_i mean_i miss_i
  for (std::size_t i = 0; i < g; ++i) {
    log_std[i] = std::sqrt(
        lognormal_log_moments(field.mean()[i], field.variance()[i]).log_variance);
    scaled[i] = w[i] * field.mean()[i] * miss[i];
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    if (scaled[i] == 0.0) continue;
    for (std::size_t j = 0; j < g; ++j) {
      if (scaled[j] == 0.0) continue;
      const double r =
          field.kernel()->correlation(domain.point(i) - domain.point(j));
      acc += scaled[i] * scaled[j] * std::expm1(r * log_std[i] * log_std[j]);
    }
  }
  const double tr = field.time_ratio();
  return tr * tr * acc;
}

MomentPair undetected_moments(const IntensityField& field,
                              std::span<const double> miss) {
  return {expected_undetected(field, miss), variance_undetected(field, miss)};
}

MomentPair undetected_moments(const IntensityField& field,
                              const SensorNetwork& net) {
  check_network_in_domain(net, field.domain());
  return undetected_moments(field, miss_profile(net, field.domain()));
}

double jensen_lower_bound(double mu_x) {
  if (!(mu_x >= 0.0)) throw std::invalid_argument("mu_x must be non-negative");
  return std::exp(-mu_x);
}

double variance_corrected_approx(const MomentPair& m) {
  if (!(m.sigma2_x >= 0.0)) {
    throw std::invalid_argument("sigma2_x must be non-negative");
  }
  return jensen_lower_bound(m.mu_x) * (1.0 + 0.5 * m.sigma2_x);
}

MonteCarloVoidEstimator::MonteCarloVoidEstimator(const IntensityField& field,
                                                 std::size_t samples,
                                                 SamplingMode mode,
                                                 std::uint64_t seed)
    : samples_(samples),
      mode_(mode),
      domain_(field.domain()),
      time_ratio_(field.time_ratio()),
      mean_(field.mean().begin(), field.mean().end()),
      weights_(field.domain().quadrature_weights()) {
  if (samples == 0) {
    throw std::invalid_argument("Monte-Carlo sample count must be at least 1");
  }
  // Validation of the sampling parameters happens for every mode.
  const LogGaussianSampler sampler(field, mode);
  if (mode == SamplingMode::degenerate) return;

  const std::size_t g = field.size();
  bank_.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(g));
  const auto rows = static_cast<std::int64_t>(samples);
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < rows; ++j) {
    sampler.draw_into(seed, static_cast<std::uint64_t>(j),
                      std::span<double>(bank_.row(j).data(), g));
  }
}

McEstimate MonteCarloVoidEstimator::estimate(const SensorNetwork& net) const {
  check_network_in_domain(net, domain_);
  return estimate(miss_profile(net, domain_));
}

McEstimate MonteCarloVoidEstimator::estimate(
    std::span<const double> miss) const {
  if (miss.size() != mean_.size()) {
    throw std::invalid_argument("miss profile length does not match grid");
  }
  McEstimate out;
  out.samples = samples_;
  if (mode_ == SamplingMode::degenerate) {
    const double x = scaled_quadrature(time_ratio_, weights_, mean_, miss);
    out.value = std::exp(-x);
    out.x_mean = x;
    return out;
  }

  Eigen::VectorXd v(static_cast<Eigen::Index>(miss.size()));
  for (std::size_t i = 0; i < miss.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = time_ratio_ * weights_[i] * miss[i];
  }
  const Eigen::VectorXd x = bank_ * v;
  const Eigen::ArrayXd e = (-x.array()).exp();
  const double m = static_cast<double>(samples_);
  out.value = e.mean();
  out.x_mean = x.mean();
  if (samples_ > 1) {
    const double e_var = (e - out.value).square().sum() / (m - 1.0);
    out.std_error = std::sqrt(e_var / m);
    out.x_variance = (x.array() - out.x_mean).square().sum() / (m - 1.0);
  }
  return out;
}

McEstimate mc_void_probability(const IntensityField& field,
                               const SensorNetwork& net, std::size_t samples,
                               SamplingMode mode, std::uint64_t seed) {
  return MonteCarloVoidEstimator(field, samples, mode, seed).estimate(net);
}

}  // namespace voidprob
