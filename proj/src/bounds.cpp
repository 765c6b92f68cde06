#include "voidprob/bounds.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace voidprob {

namespace {

constexpr double kSeriesCutoff = 1.0;

void require_moments(double mu, double sigma2) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("mu must be finite and non-negative");
  }
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("sigma2 must be finite and non-negative");
  }
}

double factorial(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

// P(N < k) for N ~ Poisson(mu).
double poisson_head(int k, double mu) {
  double term = 1.0;
  double sum = 0.0;
  for (int j = 0; j < k; ++j) {
    sum += term;
    term *= mu / (j + 1);
  }
  return std::exp(-mu) * sum;
}

// P(N >= k) / mu^p for p <= k. Below the cutoff the tail series
// e^-mu sum_{j>=k} mu^(j-p) / j! is summed directly; it is finite at mu = 0.
double scaled_poisson_tail(int k, int p, double mu) {
  if (mu < kSeriesCutoff) {
    double term = std::pow(mu, k - p) / factorial(k);
    double sum = 0.0;
    for (int j = k; j < k + 60; ++j) {
      sum += term;
      if (term <= sum * 1e-18) break;
      term *= mu / (j + 1);
    }
    return std::exp(-mu) * sum;
  }
  return (1.0 - poisson_head(k, mu)) / std::pow(mu, p);
}

}  // namespace

double jensen_gap_upper(double mu, double sigma2) {
  require_moments(mu, sigma2);
  return sigma2 * scaled_poisson_tail(2, 2, mu);
}

GapBounds new_gap_bounds(double mu, double sigma2) {
  require_moments(mu, sigma2);
  return {-0.5 * std::exp(-mu) * sigma2, sigma2 * scaled_poisson_tail(3, 2, mu)};
}

double xi(double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be non-negative");
  if (std::isinf(mu)) return 1.0;
  return scaled_poisson_tail(3, 0, mu);
}

double xi_complement(double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be non-negative");
  if (std::isinf(mu)) return 0.0;
  return poisson_head(3, mu);
}

double xi_derivative(double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be non-negative");
  if (std::isinf(mu)) return 0.0;
  return 0.5 * mu * mu * std::exp(-mu);
}

double jensen_gap_ratio(double x, double mu) {
  if (!(x >= 0.0) || !(mu >= 0.0)) {
    throw std::invalid_argument("jensen_gap_ratio needs x >= 0 and mu >= 0");
  }
  const double d = x - mu;
  const double e_mu = std::exp(-mu);
  if (std::abs(d) < 0.5) {
    // (e^-d - 1 + d) / d^2 = sum_k (-d)^k / (k + 2)!
    double term = 0.5;
    double sum = 0.0;
    for (int k = 0; k < 40; ++k) {
      sum += term;
      if (std::abs(term) <= std::abs(sum) * 1e-18) break;
      term *= -d / (k + 3);
    }
    return e_mu * sum;
  }
  return (std::exp(-x) - e_mu * (1.0 - d)) / (d * d);
}

DominanceCheck dominance_check(double mu, double sigma2) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("dominance_check requires mu > 0");
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("dominance_check requires sigma2 > 0");
  }
  DominanceCheck out;
  out.jensen_upper = jensen_gap_upper(mu, sigma2);
  const GapBounds nb = new_gap_bounds(mu, sigma2);
  out.new_lower = nb.lower;
  out.new_upper = nb.upper;

  // J_up - J~_up = sigma2 (P(N>=2) - P(N>=3)) / mu^2. The numerator difference
  // is taken from the tails below the cutoff and from the heads above it,
  // where both tails round to the same double.
  const double numerator_gap =
      mu < kSeriesCutoff
          ? (scaled_poisson_tail(2, 2, mu) - scaled_poisson_tail(3, 2, mu))
          : (poisson_head(3, mu) - poisson_head(2, mu)) / (mu * mu);
  out.upper_margin = sigma2 * numerator_gap;
  out.magnitude_margin = out.jensen_upper - std::abs(out.new_lower);
  out.upper_condition = out.upper_margin > 0.0;
  out.magnitude_condition = out.magnitude_margin > 0.0;
  return out;
}

GapDiagnostics gap_diagnostics(const McEstimate& mc,
                               const MomentPair& analytic) {
  GapDiagnostics d;
  d.mc = mc;
  d.mu_x = mc.x_mean;
  d.sigma2_x = mc.x_variance;
  d.analytic_mu_x = analytic.mu_x;
  d.analytic_sigma2_x = analytic.sigma2_x;
  d.jensen_gap_lower = 0.0;
  d.jensen_gap_upper = jensen_gap_upper(d.mu_x, d.sigma2_x);
  const GapBounds nb = new_gap_bounds(d.mu_x, d.sigma2_x);
  d.new_gap_lower = nb.lower;
  d.new_gap_upper = nb.upper;
  const double e_mu = std::exp(-d.mu_x);
  d.measured_jensen_gap = mc.value - e_mu;
  d.measured_new_gap = d.measured_jensen_gap - 0.5 * e_mu * d.sigma2_x;
  return d;
}

GapDiagnostics measure_gaps(const IntensityField& field,
                            const SensorNetwork& net, std::size_t samples,
                            SamplingMode mode, std::uint64_t seed) {
  const McEstimate mc = mc_void_probability(field, net, samples, mode, seed);
  return gap_diagnostics(mc, undetected_moments(field, net));
}

DominanceSweepResult dominance_sweep(const SweepOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DominanceSweepResult r;
  r.worst_upper_margin = std::numeric_limits<double>::infinity();
  r.worst_magnitude_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < options.pairs; ++k) {
    // 1 - U maps [0, 1) onto (0, 1].
    const double mu = options.mu_max * (1.0 - unit(rng));
    const double sigma2 = options.sigma2_max * (1.0 - unit(rng));
    const DominanceCheck c = dominance_check(mu, sigma2);
    ++r.checked;
    if (!c.holds()) ++r.violations;
    const double rel_upper = c.upper_margin / c.jensen_upper;
    const double rel_mag = c.magnitude_margin / c.jensen_upper;
    if (rel_upper < r.worst_upper_margin) {
      r.worst_upper_margin = rel_upper;
      r.worst_upper_mu = mu;
    }
    if (rel_mag < r.worst_magnitude_margin) {
      r.worst_magnitude_margin = rel_mag;
      r.worst_magnitude_mu = mu;
    }
    const double identity_err =
        std::abs(c.magnitude_margin - c.new_upper) / c.new_upper;
    if (identity_err > r.max_identity_rel_error) {
      r.max_identity_rel_error = identity_err;
      r.worst_identity_mu = mu;
    }
  }
  return r;
}

namespace {

// xi(a) < xi(b), compared in whichever representation keeps precision.
bool xi_less(double a, double b) {
  if (xi(a) < 0.5) return xi(a) < xi(b);
  return xi_complement(a) > xi_complement(b);
}

// Centered difference of xi, taken on the complement once xi exceeds 1/2.
double xi_central_difference(double mu, double h) {
  if (xi(mu) <= 0.5) return (xi(mu + h) - xi(mu - h)) / (2.0 * h);
  return -(xi_complement(mu + h) - xi_complement(mu - h)) / (2.0 * h);
}

}  // namespace

XiSweepResult xi_sweep(const SweepOptions& options) {
  XiSweepResult r;
  const std::size_t n = options.xi_points;
  if (n < 2) throw std::invalid_argument("xi sweep needs at least 2 points");
  const double lo = std::log(options.xi_mu_min);
  const double hi = std::log(options.mu_max);
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    const double mu = k + 1 == n ? options.mu_max : std::exp(lo + t * (hi - lo));
    ++r.checked;
    if (!(xi(mu) > 0.0)) ++r.non_positive;
    if (k > 0 && !xi_less(prev, mu)) ++r.non_increasing;
    prev = mu;

    const double fd = xi_central_difference(mu, options.fd_relative_step * mu);
    const double exact = xi_derivative(mu);
    const double rel = std::abs(fd - exact) / exact;
    if (rel > r.max_derivative_rel_error) {
      r.max_derivative_rel_error = rel;
      r.worst_derivative_mu = mu;
    }
  }
  return r;
}

bool jensen_gap_ratio_non_increasing(double mu, std::size_t points) {
  if (points < 2) return true;
  const double x_max = 10.0 * mu;
  double prev = jensen_gap_ratio(0.0, mu);
  for (std::size_t k = 1; k < points; ++k) {
    const double x =
        x_max * static_cast<double>(k) / static_cast<double>(points - 1);
    const double g = jensen_gap_ratio(x, mu);
    if (g > prev) return false;
    prev = g;
  }
  return true;
}

}  // namespace voidprob
