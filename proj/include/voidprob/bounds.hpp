#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "voidprob/field.hpp"
#include "voidprob/objective.hpp"
#include "voidprob/sensing.hpp"

namespace voidprob {

// The gap bounds below are ratios of Poisson tail probabilities to mu^2,
//   1 - e^-mu - mu e^-mu                  = P(N >= 2),
//   1 - e^-mu - mu e^-mu - mu^2 e^-mu / 2 = P(N >= 3),
// for N ~ Poisson(mu). Evaluating them as tails keeps full relative precision
// at small mu, where the closed forms are 0/0.

/// Upper bound on J = E[exp(-X)] - exp(-mu): sigma2 P(N >= 2) / mu^2.
/// Equals sigma2 / 2 at mu = 0.
double jensen_gap_upper(double mu, double sigma2);

struct GapBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Bounds on J~ = J - exp(-mu) sigma2 / 2:
/// lower = -exp(-mu) sigma2 / 2, upper = sigma2 P(N >= 3) / mu^2 (0 at mu = 0).
GapBounds new_gap_bounds(double mu, double sigma2);

/// xi(mu) = 1 - e^-mu (1 + mu + mu^2 / 2) = P(N >= 3).
double xi(double mu);

/// 1 - xi(mu) = e^-mu (1 + mu + mu^2 / 2). Keeps relative precision where
/// xi rounds to 1 in double (mu above ~40).
double xi_complement(double mu);

/// d xi / d mu = mu^2 e^-mu / 2.
double xi_derivative(double mu);

/// g(x) = (e^-x - e^-mu + x e^-mu - mu e^-mu) / (x - mu)^2, the ratio whose
/// sup / inf over x >= 0 give the Jensen gap bounds. The removable
/// singularity at x = mu takes its limit e^-mu / 2.
double jensen_gap_ratio(double x, double mu);

struct DominanceCheck {
  bool upper_condition = false;      // J_up > J~_up
  bool magnitude_condition = false;  // J_up > |J~_low|
  double upper_margin = 0.0;         // J_up - J~_up
  double magnitude_margin = 0.0;     // J_up - |J~_low|
  double jensen_upper = 0.0;
  double new_lower = 0.0;
  double new_upper = 0.0;

  bool holds() const { return upper_condition && magnitude_condition; }
};

/// Evaluates both sufficient conditions for max|J| > max|J~|.
/// Throws std::invalid_argument unless mu > 0 and sigma2 > 0.
DominanceCheck dominance_check(double mu, double sigma2);

/// Analytic bounds and Monte-Carlo gaps for one network.
///
/// mu_x / sigma2_x are the moments the bounds are evaluated at: the sample
/// moments of X from the same Monte-Carlo draws (exact for the degenerate
/// mode). analytic_* hold the closed-form moments for reference.
struct GapDiagnostics {
  double mu_x = 0.0;
  double sigma2_x = 0.0;
  double analytic_mu_x = 0.0;
  double analytic_sigma2_x = 0.0;
  double jensen_gap_lower = 0.0;
  double jensen_gap_upper = 0.0;
  double new_gap_lower = 0.0;
  double new_gap_upper = 0.0;
  double measured_jensen_gap = 0.0;
  double measured_new_gap = 0.0;
  McEstimate mc;
};

GapDiagnostics gap_diagnostics(const McEstimate& mc, const MomentPair& analytic);

GapDiagnostics measure_gaps(const IntensityField& field,
                            const SensorNetwork& net, std::size_t samples,
                            SamplingMode mode, std::uint64_t seed);

// Sweeps over the analytic results, used by `voidplan verify`.

struct SweepOptions {
  std::size_t pairs = 10000;
  double mu_max = 50.0;
  double sigma2_max = 100.0;
  std::size_t xi_points = 10000;
  double xi_mu_min = 1e-8;
  double fd_relative_step = 1e-6;
  std::uint64_t seed = 1;
};

struct DominanceSweepResult {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_upper_margin = 0.0;  // smallest margin relative to J_up
  double worst_upper_mu = 0.0;
  double worst_magnitude_margin = 0.0;
  double worst_magnitude_mu = 0.0;
  double max_identity_rel_error = 0.0;  // |J_up - |J~_low| - J~_up| / J~_up
  double worst_identity_mu = 0.0;
};

/// Random (mu, sigma2) in (0, mu_max] x (0, sigma2_max]; checks both
/// conditions and the identity J_up - |J~_low| = J~_up.
DominanceSweepResult dominance_sweep(const SweepOptions& options);

struct XiSweepResult {
  std::size_t checked = 0;
  std::size_t non_positive = 0;
  std::size_t non_increasing = 0;
  double max_derivative_rel_error = 0.0;
  double worst_derivative_mu = 0.0;
};

/// Log-spaced mu in [xi_mu_min, mu_max]: positivity, strict increase, and a
/// centered finite-difference check of xi_derivative.
XiSweepResult xi_sweep(const SweepOptions& options);

/// True when g(x; mu) is non-increasing on `points` equally spaced x in
/// [0, 10 mu].
bool jensen_gap_ratio_non_increasing(double mu, std::size_t points);

}  // namespace voidprob
