#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "voidprob/field.hpp"
#include "voidprob/sensing.hpp"

namespace voidprob {

/// Mean and variance of the undetected-target count X.
struct MomentPair {
  double mu_x = 0.0;
  double sigma2_x = 0.0;
};

struct McEstimate {
  double value = 0.0;      // mean of exp(-X_j)
  double std_error = 0.0;  // sample std of exp(-X_j) / sqrt(M)
  std::size_t samples = 0;
  double x_mean = 0.0;      // sample mean of X_j
  double x_variance = 0.0;  // unbiased sample variance of X_j

  MomentPair sampled_moments() const { return {x_mean, x_variance}; }
};

/// E[X] = (T/Tc) * integral of mean(s) miss(s) ds on the trapezoid grid.
double expected_undetected(const IntensityField& field,
                           const SensorNetwork& net);
double expected_undetected(const IntensityField& field,
                           std::span<const double> miss);

/// (T/Tc)^2 * integral of variance(s) miss(s)^2 ds.
///
/// This integrates pointwise variances; it ignores cross-point covariance of
/// lambda. See covariance_exact_variance for the double integral.
double variance_undetected(const IntensityField& field,
                           const SensorNetwork& net);
double variance_undetected(const IntensityField& field,
                           std::span<const double> miss);

/// (T/Tc)^2 * double integral of Cov(lambda(s), lambda(t)) miss(s) miss(t),
/// with the lognormal covariance implied by the field's kernel:
/// Cov = mean_s mean_t (exp(r(s,t) sqrt(v_s v_t)) - 1). Diagnostic only.
/// Throws std::invalid_argument when the field has no kernel.
double covariance_exact_variance(const IntensityField& field,
                                 const SensorNetwork& net);

MomentPair undetected_moments(const IntensityField& field,
                              const SensorNetwork& net);
MomentPair undetected_moments(const IntensityField& field,
                              std::span<const double> miss);

double jensen_lower_bound(double mu_x);

/// exp(-mu)(1 + sigma^2 / 2). Not clamped: may exceed 1.
double variance_corrected_approx(const MomentPair& m);

/// Monte-Carlo estimate of E[exp(-X)] against a fixed bank of intensity
/// samples, so many networks can be scored against the same draws.
///
/// Sample j is drawn from stream (seed, j); the result is independent of
/// thread count.
class MonteCarloVoidEstimator {
 public:
  MonteCarloVoidEstimator(const IntensityField& field, std::size_t samples,
                          SamplingMode mode, std::uint64_t seed);

  std::size_t samples() const { return samples_; }
  SamplingMode mode() const { return mode_; }

  McEstimate estimate(const SensorNetwork& net) const;
  McEstimate estimate(std::span<const double> miss) const;

 private:
  std::size_t samples_;
  SamplingMode mode_;
  GridDomain domain_;
  double time_ratio_;
  std::vector<double> mean_;
  std::vector<double> weights_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> bank_;
};

McEstimate mc_void_probability(const IntensityField& field,
                               const SensorNetwork& net, std::size_t samples,
                               SamplingMode mode, std::uint64_t seed);

}  // namespace voidprob
