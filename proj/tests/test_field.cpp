#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "test_util.hpp"
#include "voidprob/field.hpp"

using namespace voidprob;
using voidprob::testing::constant_field;

TEST_CASE("grid domain point count and spacing") {
  CHECK(GridDomain(0.0, 18.5, 0.05).size() == 371);
  CHECK(GridDomain(0.0, 18.5, 0.1).size() == 186);
  CHECK(GridDomain(0.0, 1.0, 0.3).size() == 4);  // last point 0.9 < end

  const GridDomain d(2.0, 5.0, 0.25);
  const auto pts = d.points();
  REQUIRE(pts.size() == 13);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i] > pts[i - 1]);
    CHECK(pts[i] - pts[i - 1] == doctest::Approx(0.25).epsilon(1e-12));
  }
  const auto w = d.quadrature_weights();
  double total = 0.0;
  for (double x : w) total += x;
  CHECK(total == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(w.front() == doctest::Approx(0.125));
  CHECK(w[5] == doctest::Approx(0.25));
}

TEST_CASE("grid domain rejects degenerate intervals") {
  CHECK_THROWS_AS(GridDomain(1.0, 1.0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(GridDomain(2.0, 1.0, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(GridDomain(0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(GridDomain(0.0, 1.0, -0.1), std::invalid_argument);
}

TEST_CASE("matern covariance at zero distance is the marginal variance") {
  const MaternKernel k(1.5, 150.0, 0.1);
  CHECK(matern_cov(k, 3.7, 3.7) == 0.1 * 0.1);
  CHECK(matern_cov(k, 0.0, 0.0) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(k.correlation(0.0) == 1.0);
  // Tiny but non-zero distance stays continuous with the limit.
  CHECK(k.correlation(1e-9) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("matern covariance decays to zero at long range") {
  const MaternKernel k(1.5, 150.0, 0.1);
  CHECK(matern_cov(k, 0.0, 1e4) < 1e-40);
  CHECK(matern_cov(k, 0.0, 1e6) == 0.0);
  CHECK(matern_cov(k, 0.0, 50.0) > matern_cov(k, 0.0, 100.0));
}

TEST_CASE("matern half-integer cases match their closed forms") {
  // nu = 1/2: sigma^2 exp(-kappa d); nu = 3/2: sigma^2 (1 + kappa d) exp(-kappa d).
  const double sigma = 0.7;
  for (double range : {0.5, 3.0, 150.0}) {
    const MaternKernel half(0.5, range, sigma);
    const MaternKernel three_halves(1.5, range, sigma);
    for (double d : {0.01, 0.2, 1.0, 4.0, 17.0}) {
      const double x_half = std::sqrt(8.0 * 0.5) / range * d;
      const double x_3 = std::sqrt(8.0 * 1.5) / range * d;
      const double exp_ref = sigma * sigma * std::exp(-x_half);
      const double m32_ref = sigma * sigma * (1.0 + x_3) * std::exp(-x_3);
      CHECK(matern_cov(half, 0.0, d) == doctest::Approx(exp_ref).epsilon(1e-10));
      CHECK(matern_cov(three_halves, 1.0, 1.0 + d) ==
            doctest::Approx(m32_ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("matern gram matrix is symmetric positive semi-definite") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(0.0, 18.5);
  for (double nu : {0.5, 1.5, 2.5}) {
    const MaternKernel k(nu, 5.0, 0.5);
    std::vector<double> s(60);
    for (double& x : s) x = pos(rng);
    Eigen::MatrixXd gram(60, 60);
    for (int i = 0; i < 60; ++i)
      for (int j = 0; j < 60; ++j) gram(i, j) = matern_cov(k, s[i], s[j]);
    CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * 0.25);
  }
  CHECK_THROWS_AS(MaternKernel(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(MaternKernel(1.5, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(MaternKernel(1.5, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("lognormal moment matching round-trips") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> log_mean(-6.0, 6.0);
  std::uniform_real_distribution<double> cv(0.0, 3.0);
  for (int k = 0; k < 2000; ++k) {
    const double mean = std::exp(log_mean(rng));
    const double c = cv(rng);
    const double var = c * c * mean * mean;
    const LogMoments lm = lognormal_log_moments(mean, var);
    const double m2 = std::exp(lm.log_mean + 0.5 * lm.log_variance);
    const double v2 = std::expm1(lm.log_variance) *
                      std::exp(2.0 * lm.log_mean + lm.log_variance);
    REQUIRE(std::abs(m2 - mean) <= 1e-12 * mean);
    if (var > 0.0) {
      REQUIRE(std::abs(v2 - var) <= 1e-12 * var);
    } else {
      REQUIRE(v2 == 0.0);
    }
  }
  CHECK_THROWS_AS(lognormal_log_moments(0.0, 1.0), std::invalid_argument);
  CHECK(lognormal_log_moments(0.0, 0.0).log_variance == 0.0);
}

TEST_CASE("intensity field validates its arrays") {
  const GridDomain d(0.0, 1.0, 0.25);
  CHECK_THROWS_AS(IntensityField(d, {1, 1, 1}, {0, 0, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(IntensityField(d, {1, 1, 1, 1, -1}, {0, 0, 0, 0, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(IntensityField(d, {1, 1, 1, 1, 1}, {0, 0, -1, 0, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(IntensityField(d, {1, 1, 1, 1, 1}, {0, 0, 0, 0, 0}, std::nullopt, 0.0),
                  std::invalid_argument);
}

TEST_CASE("degenerate and zero-variance sampling return the mean") {
  const GridDomain d(0.0, 2.0, 0.1);
  const auto field = voidprob::testing::bump_field(d, {{1.0, 0.3, 5.0}}, 0.1, 0.2,
                                                   MaternKernel(1.5, 1.0, 0.4));
  const auto mean = std::vector<double>(field.mean().begin(), field.mean().end());
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    CHECK(sample_log_gaussian_field(field, SamplingMode::degenerate, seed) == mean);
  }
  const auto flat = constant_field(d, 2.5, 0.0, MaternKernel(1.5, 1.0, 0.4));
  for (std::uint64_t seed : {0u, 7u, 12345u}) {
    const auto lam = sample_log_gaussian_field(flat, SamplingMode::independent, seed);
    CHECK(lam == std::vector<double>(d.size(), 2.5));
    const auto lam_c = sample_log_gaussian_field(flat, SamplingMode::correlated, seed);
    CHECK(lam_c == std::vector<double>(d.size(), 2.5));
  }
}

TEST_CASE("sampling rejects undefined lognormal matching and missing kernel") {
  const GridDomain d(0.0, 1.0, 0.25);
  const IntensityField bad(d, {1, 0, 1, 1, 1}, {0.1, 0.1, 0.1, 0.1, 0.1});
  CHECK_THROWS_AS(LogGaussianSampler(bad, SamplingMode::independent), std::invalid_argument);
  const auto no_kernel = constant_field(d, 1.0, 0.1);
  CHECK_THROWS_AS(LogGaussianSampler(no_kernel, SamplingMode::correlated),
                  std::invalid_argument);
  CHECK_NOTHROW(LogGaussianSampler(no_kernel, SamplingMode::independent));
}

TEST_CASE("correlated samples match the prescribed pointwise mean") {
  // Monte-Carlo moment check: sample mean within 3 standard errors.
  const GridDomain d(0.0, 3.0, 0.15);
  const auto field = voidprob::testing::bump_field(d, {{1.5, 0.4, 4.0}}, 0.2, 0.3,
                                                   MaternKernel(1.5, 2.0, 0.5));
  for (SamplingMode mode : {SamplingMode::correlated, SamplingMode::independent}) {
    const LogGaussianSampler sampler(field, mode);
    const std::size_t m = 100000;
    std::vector<double> sum(d.size(), 0.0);
    std::vector<double> buf(d.size());
    double min_value = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      sampler.draw_into(42, j, buf);
      for (std::size_t i = 0; i < d.size(); ++i) {
        sum[i] += buf[i];
        min_value = std::min(min_value, buf[i]);
      }
    }
    CHECK(min_value >= 0.0);
    for (std::size_t i : {0ul, 5ul, 10ul, 20ul}) {
      const double se = std::sqrt(field.variance()[i] / static_cast<double>(m));
      CHECK(std::abs(sum[i] / m - field.mean()[i]) <= 3.0 * se);
    }
  }
}

TEST_CASE("correlated samples carry the kernel correlation") {
  const GridDomain d(0.0, 2.0, 0.5);
  const MaternKernel k(1.5, 2.0, 0.5);
  const auto field = constant_field(d, 1.0, 0.0, k);
  // Use a unit log-variance field so log(lambda) = m + z with z ~ N(0, R).
  const IntensityField f(d, std::vector<double>(d.size(), 1.0),
                         std::vector<double>(d.size(), std::expm1(1.0)), k);
  const LogGaussianSampler sampler(f, SamplingMode::correlated);
  const std::size_t m = 50000;
  double s01 = 0.0, s0 = 0.0, s1 = 0.0, q0 = 0.0, q1 = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const auto lam = sampler.draw(3, j);
    const double a = std::log(lam[0]);
    const double b = std::log(lam[1]);
    s0 += a;
    s1 += b;
    s01 += a * b;
    q0 += a * a;
    q1 += b * b;
  }
  const double n = static_cast<double>(m);
  const double cov = s01 / n - (s0 / n) * (s1 / n);
  const double corr = cov / std::sqrt((q0 / n - s0 * s0 / n / n) * (q1 / n - s1 * s1 / n / n));
  // Standard error of a sample correlation ~ (1 - r^2) / sqrt(n).
  const double r = k.correlation(0.5);
  CHECK(std::abs(corr - r) <= 4.0 * (1.0 - r * r) / std::sqrt(n));
  (void)field;
}

TEST_CASE("sampling is deterministic per (seed, index)") {
  const GridDomain d(0.0, 18.5, 0.05);
  const auto field = voidprob::testing::bump_field(d, default_traffic_zones(), 0.01, 0.28,
                                                   MaternKernel(1.5, 5.0, 0.5));
  const LogGaussianSampler a(field, SamplingMode::correlated);
  const LogGaussianSampler b(field, SamplingMode::correlated);
  CHECK(a.draw(9, 17) == b.draw(9, 17));
  CHECK(a.draw(9, 17) != a.draw(9, 18));
  CHECK(a.draw(9, 17) != a.draw(10, 17));
  CHECK(a.jitter() >= 1e-10);
  CHECK(a.jitter() <= 1e-4 * (1 + 1e-9));
  for (double x : a.draw(1, 0)) CHECK(x >= 0.0);
}

TEST_CASE("synthesize_field applies lognormal identities") {
  const GridDomain d(0.0, 5.0, 0.5);
  const MaternKernel k(1.5, 150.0, 0.1);
  const double m = 1.3;
  const auto f = synthesize_field(d, k, m, 2.0);
  const double s2 = 0.01;
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(f.mean()[i] == doctest::Approx(std::exp(m + s2 / 2)).epsilon(1e-14));
    CHECK(f.variance()[i] ==
          doctest::Approx((std::exp(s2) - 1) * std::exp(2 * m + s2)).epsilon(1e-12));
  }
  CHECK(f.time_ratio() == 2.0);
  CHECK(f.kernel() == k);
  CHECK(synthesize_field(d, k, m, 2.0) == f);
}

TEST_CASE("default zone profile has three local maxima") {
  const GridDomain d(0.0, 18.5, 0.05);
  const MaternKernel k(1.5, 5.0, 0.5);
  const auto f = synthesize_field(
      d, k, zone_log_mean_profile(default_traffic_zones(), kDefaultBaseline, 0.5));
  int maxima = 0;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    if (f.mean()[i] > f.mean()[i - 1] && f.mean()[i] > f.mean()[i + 1]) ++maxima;
  }
  CHECK(maxima == 3);
  // The zone peaks are the lognormal means at the centers.
  CHECK(f.mean()[182] == doctest::Approx(4.2 + kDefaultBaseline).epsilon(1e-3));
}

namespace {

double simpson(const GridDomain& d, std::span<const double> f) {
  // Composite Simpson on an even number of intervals.
  REQUIRE((d.size() - 1) % 2 == 0);
  double acc = f.front() + f.back();
  for (std::size_t i = 1; i + 1 < d.size(); ++i) acc += (i % 2 ? 4.0 : 2.0) * f[i];
  return acc * d.spacing_km() / 3.0;
}

}  // namespace

TEST_CASE("estimate_field_from_arrivals: uniform arrivals, wide bandwidth") {
  const GridDomain d(0.0, 18.5, 0.05);
  std::vector<ArrivalRecord> recs;
  const std::size_t n = 3700;
  for (std::size_t k = 0; k < n; ++k) recs.push_back({18.5 * (k + 0.5) / n});
  FitOptions opt;
  opt.bandwidth_km = 200.0;
  const auto f = estimate_field_from_arrivals(recs, d, opt);
  const double expected = n / 18.5;
  for (std::size_t i = 0; i < d.size(); i += 37) {
    CHECK(f.mean()[i] == doctest::Approx(expected).epsilon(0.01));
  }
}

TEST_CASE("estimate_field_from_arrivals: single arrival integrates to one") {
  const GridDomain d(0.0, 18.5, 0.05);
  const std::vector<ArrivalRecord> recs{{7.3}};
  FitOptions opt;
  opt.bandwidth_km = 0.1;
  const auto f = estimate_field_from_arrivals(recs, d, opt);
  CHECK(simpson(d, f.mean()) == doctest::Approx(1.0).epsilon(1e-3));
  const auto peak = std::max_element(f.mean().begin(), f.mean().end()) - f.mean().begin();
  CHECK(d.point(static_cast<std::size_t>(peak)) == doctest::Approx(7.3).epsilon(1e-9));
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (f.mean()[i] > 0.0) CHECK(f.variance()[i] >= opt.min_variance);
  }
}

TEST_CASE("estimate_field_from_arrivals conserves mass for narrow bandwidths") {
  const GridDomain d(0.0, 18.5, 0.05);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(0.0, 18.5);
  std::vector<ArrivalRecord> recs(500);
  for (auto& r : recs) r.position_km = pos(rng);
  for (double h : {0.05, 0.3, 1.0, 1.85}) {
    FitOptions opt;
    opt.bandwidth_km = h;
    const auto f = estimate_field_from_arrivals(recs, d, opt);
    CHECK(simpson(d, f.mean()) == doctest::Approx(500.0).epsilon(0.01));
  }
}

TEST_CASE("estimate_field_from_arrivals error paths") {
  const GridDomain d(0.0, 10.0, 0.1);
  FitOptions opt;
  CHECK_THROWS_AS(estimate_field_from_arrivals({}, d, opt), std::invalid_argument);
  const std::vector<ArrivalRecord> outside{{-3.0}, {12.0}};
  CHECK_THROWS_AS(estimate_field_from_arrivals(outside, d, opt), std::invalid_argument);
  const std::vector<ArrivalRecord> ok{{5.0}};
  FitOptions zero_floor;
  zero_floor.min_variance = 0.0;
  CHECK_THROWS_AS(estimate_field_from_arrivals(ok, d, zero_floor), std::invalid_argument);
  FitOptions bad_bw;
  bad_bw.bandwidth_km = 0.0;
  CHECK_THROWS_AS(estimate_field_from_arrivals(ok, d, bad_bw), std::invalid_argument);
}

TEST_CASE("simulated arrivals follow the field mass") {
  const GridDomain d(0.0, 18.5, 0.05);
  const auto f = synthesize_field(
      d, MaternKernel(1.5, 5.0, 0.5),
      zone_log_mean_profile(default_traffic_zones(), kDefaultBaseline, 0.5));
  const auto w = d.quadrature_weights();
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) total += w[i] * f.mean()[i];
  double count = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const auto arr = simulate_arrivals(f, SamplingMode::degenerate, r);
    for (const auto& a : arr) REQUIRE(d.contains(a.position_km));
    count += static_cast<double>(arr.size());
  }
  // Poisson total: mean = total, sd per replicate = sqrt(total).
  CHECK(std::abs(count / reps - total) <= 4.0 * std::sqrt(total / reps));
}
