#include "voidprob/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace voidprob {

CandidateSet::CandidateSet(std::vector<double> positions,
                           const GridDomain& domain)
    : positions_(std::move(positions)) {
  if (positions_.empty()) {
    throw std::invalid_argument("candidate set must not be empty");
  }
  for (double p : positions_) {
    if (!std::isfinite(p) || !domain.contains(p)) {
      throw std::invalid_argument("candidate " + std::to_string(p) +
                                  " km lies outside the domain");
    }
  }
  std::sort(positions_.begin(), positions_.end());
}

CandidateSet CandidateSet::from_grid(const GridDomain& domain,
                                     double spacing_km) {
  const GridDomain candidates(domain.start_km(), domain.end_km(), spacing_km);
  return CandidateSet(candidates.points(), domain);
}

std::string_view to_string(Surrogate s) {
  switch (s) {
    case Surrogate::jensen:
      return "jensen";
    case Surrogate::variance_corrected:
      return "variance_corrected";
  }
  return "unknown";
}

Surrogate parse_surrogate(std::string_view name) {
  if (name == "jensen") return Surrogate::jensen;
  if (name == "variance_corrected") return Surrogate::variance_corrected;
  throw std::invalid_argument("unknown surrogate '" + std::string(name) +
                              "' (expected jensen or variance_corrected)");
}

double surrogate_value(Surrogate s, const MomentPair& m) {
  return s == Surrogate::jensen ? jensen_lower_bound(m.mu_x)
                                : variance_corrected_approx(m);
}

namespace {

// Moments of X for the network whose miss profile is miss * factor. The
// arithmetic matches expected_undetected / variance_undetected on the
// resulting profile term for term.
MomentPair appended_moments(const IntensityField& field,
                            std::span<const double> weights,
                            std::span<const double> miss,
                            std::span<const double> factor) {
  const auto mean = field.mean();
  const auto var = field.variance();
  double mu = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < miss.size(); ++i) {
    const double m = miss[i] * factor[i];
    mu += weights[i] * mean[i] * m;
    s2 += weights[i] * var[i] * m * m;
  }
  const double tr = field.time_ratio();
  return {tr * mu, tr * tr * s2};
}

// Row c holds 1 - gamma(s_i, candidate c) over the grid.
std::vector<std::vector<double>> survival_factors(
    const GridDomain& domain, const SensorModel& model,
    const CandidateSet& candidates) {
  std::vector<std::vector<double>> rows(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    rows[c].resize(domain.size());
    for (std::size_t i = 0; i < domain.size(); ++i) {
      rows[c][i] =
          1.0 - detection_prob(model, domain.point(i), candidates.positions()[c]);
    }
  }
  return rows;
}

}  // namespace

PlacementTrace greedy_place(const IntensityField& field,
                            const SensorModel& model,
                            const CandidateSet& candidates, std::size_t n,
                            Surrogate surrogate,
                            const std::optional<McOptions>& mc) {
  if (n == 0) throw std::invalid_argument("sensor count must be at least 1");
  const GridDomain& domain = field.domain();
  for (double p : candidates.positions()) {
    if (!domain.contains(p)) {
      throw std::invalid_argument("candidate outside the field domain");
    }
  }

  std::optional<MonteCarloVoidEstimator> estimator;
  if (mc) estimator.emplace(field, mc->samples, mc->mode, mc->seed);

  const auto weights = domain.quadrature_weights();
  const auto factors = survival_factors(domain, model, candidates);
  const std::size_t num_candidates = candidates.size();
  std::vector<double> miss(domain.size(), 1.0);
  std::vector<double> scores(num_candidates);
  std::vector<MomentPair> moments(num_candidates);

  PlacementTrace trace;
  trace.surrogate = surrogate;
  for (std::size_t step = 0; step < n; ++step) {
    const auto count = static_cast<std::int64_t>(num_candidates);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < count; ++c) {
      const auto k = static_cast<std::size_t>(c);
      moments[k] = appended_moments(field, weights, miss, factors[k]);
      scores[k] = surrogate_value(surrogate, moments[k]);
    }
    // Candidates are sorted, so the first maximum is the smallest position.
    std::size_t best = 0;
    for (std::size_t c = 1; c < num_candidates; ++c) {
      if (scores[c] > scores[best]) best = c;
    }
    for (std::size_t i = 0; i < miss.size(); ++i) miss[i] *= factors[best][i];

    const MomentPair m = moments[best];
    trace.chosen.push_back(candidates.positions()[best]);
    trace.objective_curve.push_back(scores[best]);
    trace.moment_curve.push_back(m);
    trace.jensen_curve.push_back(jensen_lower_bound(m.mu_x));
    trace.corrected_curve.push_back(variance_corrected_approx(m));
    if (estimator) {
      const McEstimate est = estimator->estimate(miss);
      trace.mc_curve.push_back(est);
      trace.jensen_gap_curve.push_back(est.value - trace.jensen_curve.back());
      trace.corrected_gap_curve.push_back(est.value -
                                          trace.corrected_curve.back());
      trace.diagnostics.push_back(gap_diagnostics(est, m));
    }
  }
  return trace;
}

std::size_t multiset_count(std::size_t candidates, std::size_t n) {
  // C(candidates + n - 1, n), built incrementally; each partial product is an
  // exact binomial coefficient.
  if (candidates == 0) return n == 0 ? 1 : 0;
  std::size_t result = 1;
  const std::size_t top = candidates + n - 1;
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t factor = top - n + k;
    if (result > std::numeric_limits<std::size_t>::max() / factor) {
      return std::numeric_limits<std::size_t>::max();
    }
    result = result * factor / k;
  }
  return result;
}

ExhaustiveResult exhaustive_place(const IntensityField& field,
                                  const SensorModel& model,
                                  const CandidateSet& candidates, std::size_t n,
                                  Surrogate surrogate, std::size_t budget) {
  if (n == 0) throw std::invalid_argument("sensor count must be at least 1");
  const std::size_t total = multiset_count(candidates.size(), n);
  if (total > budget) {
    throw std::invalid_argument(
        "exhaustive search over " + std::to_string(total) +
        " combinations exceeds the budget of " + std::to_string(budget) +
        "; use fewer candidates or sensors");
  }
  const GridDomain& domain = field.domain();
  const auto factors = survival_factors(domain, model, candidates);
  const auto weights = domain.quadrature_weights();
  const std::vector<double> ones(domain.size(), 1.0);

  // Non-decreasing index tuples enumerate each multiset once, in
  // lexicographic order, so the first maximum is kept on ties.
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> miss(domain.size());
  ExhaustiveResult best;
  best.value = -std::numeric_limits<double>::infinity();
  while (true) {
    std::copy(ones.begin(), ones.end(), miss.begin());
    for (std::size_t k = 0; k + 1 < n; ++k) {
      for (std::size_t i = 0; i < miss.size(); ++i) miss[i] *= factors[idx[k]][i];
    }
    const MomentPair m = appended_moments(field, weights, miss, factors[idx[n - 1]]);
    const double v = surrogate_value(surrogate, m);
    ++best.evaluated;
    if (v > best.value) {
      best.value = v;
      best.positions.clear();
      for (std::size_t k : idx) best.positions.push_back(candidates.positions()[k]);
    }

    std::size_t pos = n;
    while (pos > 0 && idx[pos - 1] + 1 == candidates.size()) --pos;
    if (pos == 0) break;
    const std::size_t next = idx[pos - 1] + 1;
    for (std::size_t k = pos - 1; k < n; ++k) idx[k] = next;
  }
  return best;
}

}  // namespace voidprob
