#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "voidprob/bounds.hpp"

using namespace voidprob;

namespace {

// Closed forms in long double, valid away from mu = 0.
long double jup_ref(long double mu, long double s2) {
  return s2 * (1.0L - std::exp(-mu) * (1.0L + mu)) / (mu * mu);
}
long double nup_ref(long double mu, long double s2) {
  return s2 * (1.0L - std::exp(-mu) * (1.0L + mu + mu * mu / 2.0L)) / (mu * mu);
}

// P(N >= 2) / mu^2 as the alternating series sum_{n>=2} (-1)^n (n-1) mu^(n-2) / n!.
double jup_series(double mu) {
  double term = 0.5;  // n = 2
  double acc = 0.0;
  for (int n = 2; n < 40; ++n) {
    acc += term;
    // term_{n+1} / term_n = -mu n / ((n + 1)(n - 1))
    term *= -mu * n / ((n + 1.0) * (n - 1.0));
  }
  return acc;
}

}  // namespace

TEST_CASE("jensen gap upper bound examples") {
  // Reference values from an arbitrary-precision evaluation.
  CHECK(jensen_gap_upper(1.0, 0.1) == doctest::Approx(0.0264241117657115).epsilon(1e-13));
  CHECK(jensen_gap_upper(1e-6, 1.0) == doctest::Approx(0.499999666666792).epsilon(1e-13));
  CHECK(jensen_gap_upper(0.0, 1.0) == 0.5);
  CHECK(jensen_gap_upper(1e-300, 1.0) == 0.5);
  CHECK(jensen_gap_upper(3.0, 0.0) == 0.0);
  CHECK(jensen_gap_upper(0.0, 0.0) == 0.0);
}

TEST_CASE("jensen gap upper bound agrees with closed form and series") {
  for (double mu : {1e-3, 0.01, 0.3, 0.99, 1.0, 1.01, 2.0, 7.5, 20.0, 49.9}) {
    const double ref = static_cast<double>(jup_ref(mu, 1.0L));
    CHECK(jensen_gap_upper(mu, 1.0) == doctest::Approx(ref).epsilon(1e-12));
  }
  for (double mu : {1e-9, 1e-5, 1e-3, 0.1, 0.5, 0.999}) {
    CHECK(jensen_gap_upper(mu, 1.0) == doctest::Approx(jup_series(mu)).epsilon(1e-14));
  }
}

TEST_CASE("jensen gap upper bound is continuous at the series cutoff") {
  const double below = jensen_gap_upper(std::nextafter(1.0, 0.0), 1.0);
  const double at = jensen_gap_upper(1.0, 1.0);
  CHECK(std::abs(below - at) <= 1e-15);
  const GapBounds b_below = new_gap_bounds(std::nextafter(1.0, 0.0), 1.0);
  const GapBounds b_at = new_gap_bounds(1.0, 1.0);
  CHECK(std::abs(b_below.upper - b_at.upper) <= 1e-15);
}

TEST_CASE("new gap bounds examples") {
  const GapBounds b = new_gap_bounds(1.0, 0.1);
  CHECK(b.lower == doctest::Approx(-0.0183939720585721).epsilon(1e-13));
  CHECK(b.upper == doctest::Approx(0.00803013970713942).epsilon(1e-13));
  const GapBounds z = new_gap_bounds(0.0, 1.0);
  CHECK(z.lower == -0.5);
  CHECK(z.upper == 0.0);
  const GapBounds t = new_gap_bounds(1e-8, 1.0);
  CHECK(t.lower == doctest::Approx(-0.5).epsilon(1e-7));
  CHECK(t.upper == doctest::Approx(1e-8 / 6.0).epsilon(1e-7));
  const GapBounds s = new_gap_bounds(4.0, 0.0);
  CHECK(s.lower == 0.0);
  CHECK(s.upper == 0.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double mu = 50.0 * u(rng);
    const double s2 = 100.0 * u(rng);
    const GapBounds g = new_gap_bounds(mu, s2);
    REQUIRE(g.lower <= g.upper);
    REQUIRE(g.upper == doctest::Approx(static_cast<double>(nup_ref(mu, s2))).epsilon(1e-11));
  }
}

TEST_CASE("xi examples and limits") {
  CHECK(xi(0.0) == 0.0);
  CHECK(xi(1.0) == doctest::Approx(0.0803013970713942).epsilon(1e-13));
  CHECK(xi(1e-8) == doctest::Approx(1.66666665416667e-25).epsilon(1e-12));
  CHECK(xi(800.0) == 1.0);
  CHECK(xi_complement(50.0) == doctest::Approx(2.50930355220106e-19).epsilon(1e-12));
  CHECK(xi_complement(0.0) == 1.0);
  for (double mu : {0.01, 0.5, 1.0, 3.0, 30.0}) {
    CHECK(xi(mu) + xi_complement(mu) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("xi derivative examples and finite differences") {
  CHECK(xi_derivative(0.0) == 0.0);
  CHECK(xi_derivative(2.0) == doctest::Approx(0.270670566473225).epsilon(1e-13));
  const double h = 1e-5;
  const double fd = (xi(1.0 + h) - xi(1.0 - h)) / (2 * h);
  CHECK(std::abs(fd - xi_derivative(1.0)) <= 1e-8);
}

TEST_CASE("jensen gap ratio removable singularity and monotonicity") {
  for (double mu : {0.1, 1.0, 5.0}) {
    CHECK(jensen_gap_ratio(mu, mu) == doctest::Approx(0.5 * std::exp(-mu)).epsilon(1e-14));
    const double eps = 1e-7;
    CHECK(jensen_gap_ratio(mu + eps, mu) ==
          doctest::Approx(0.5 * std::exp(-mu)).epsilon(1e-6));
    // Value at x = 0 is the Jensen upper bound ratio.
    CHECK(jensen_gap_ratio(0.0, mu) ==
          doctest::Approx(jensen_gap_upper(mu, 1.0)).epsilon(1e-13));
    CHECK(jensen_gap_ratio_non_increasing(mu, 2001));
  }
  // Continuity across the series switch |x - mu| = 0.5.
  const double a = jensen_gap_ratio(std::nextafter(1.5, 0.0), 1.0);
  const double b = jensen_gap_ratio(1.5, 1.0);
  CHECK(std::abs(a - b) <= 1e-14);
}

TEST_CASE("gap dominance examples") {
  const DominanceCheck c = dominance_check(1.0, 0.1);
  CHECK(c.holds());
  CHECK(c.upper_margin == doctest::Approx(0.0183939720585721).epsilon(1e-12));
  CHECK(c.magnitude_margin == doctest::Approx(0.00803013970713942).epsilon(1e-12));
  const DominanceCheck d = dominance_check(10.0, 5.0);
  CHECK(d.holds());
  CHECK(d.magnitude_margin == doctest::Approx(0.0498615302142244).epsilon(1e-12));
  const DominanceCheck e = dominance_check(1e-6, 1.0);
  CHECK(e.holds());
  CHECK(e.magnitude_margin > 0.0);
  CHECK(e.magnitude_margin < 1e-6);
  CHECK(e.magnitude_margin == doctest::Approx(1.66666541666717e-7).epsilon(1e-8));
}

TEST_CASE("gap dominance rejects non-positive inputs") {
  CHECK_THROWS_AS(dominance_check(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dominance_check(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dominance_check(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("bound identity holds to rounding") {
  for (double mu : {0.01, 0.1, 1.0, 3.0, 10.0, 25.0, 50.0}) {
    const double s2 = 2.5;
    const double lhs = jensen_gap_upper(mu, s2) - std::abs(new_gap_bounds(mu, s2).lower);
    const double rhs = new_gap_bounds(mu, s2).upper;
    CHECK(std::abs(lhs - rhs) <= 1e-12 * rhs);
  }
}

TEST_CASE("gap dominance sweep and xi sweep pass with defaults") {
  const SweepOptions opt;
  const auto l = dominance_sweep(opt);
  CHECK(l.checked == opt.pairs);
  CHECK(l.violations == 0);
  CHECK(l.worst_upper_margin > 0.0);
  CHECK(l.worst_magnitude_margin > 0.0);
  CHECK(l.max_identity_rel_error <= 1e-12);
  const auto x = xi_sweep(opt);
  CHECK(x.checked == opt.xi_points);
  CHECK(x.non_positive == 0);
  CHECK(x.non_increasing == 0);
  CHECK(x.max_derivative_rel_error <= 1e-7);
}

TEST_CASE("measure_gaps on a zero-variance field") {
  const GridDomain d(0.0, 18.5, 0.05);
  const auto f = voidprob::testing::constant_field(d, 0.2, 0.0,
                                                   MaternKernel(1.5, 5.0, 0.5));
  const SensorNetwork net{{4.0, 9.0}, SensorModel(0.95, 0.05)};
  const auto g = measure_gaps(f, net, 100, SamplingMode::degenerate, 1);
  CHECK(g.measured_jensen_gap == 0.0);
  CHECK(g.jensen_gap_upper == 0.0);
  CHECK(g.jensen_gap_lower == 0.0);
  CHECK(g.new_gap_lower == 0.0);
  CHECK(g.new_gap_upper == 0.0);
}

TEST_CASE("measure_gaps on an independent synthetic field") {
  const GridDomain d(0.0, 18.5, 0.05);
  const auto f = synthesize_field(
      d, MaternKernel(1.5, 5.0, 0.5),
      zone_log_mean_profile(default_traffic_zones(), kDefaultBaseline, 0.5));
  const SensorModel m(0.95, 0.05);
  for (const auto& pos : {std::vector<double>{}, std::vector<double>{9.1},
                          std::vector<double>{3.2, 9.1, 14.6}}) {
    const auto g = measure_gaps(f, {pos, m}, 20000, SamplingMode::independent, 9);
    const double se = g.mc.std_error;
    CHECK(g.measured_jensen_gap >= -3.0 * se);
    CHECK(g.measured_jensen_gap <= g.jensen_gap_upper + 3.0 * se);
    CHECK(g.measured_new_gap >= g.new_gap_lower - 3.0 * se);
    CHECK(g.measured_new_gap <= g.new_gap_upper + 3.0 * se);
    CHECK(g.measured_new_gap ==
          g.measured_jensen_gap - 0.5 * std::exp(-g.mu_x) * g.sigma2_x);
    CHECK(g.mu_x == g.mc.x_mean);
  }
}
