#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "voidprob/bounds.hpp"
#include "voidprob/field.hpp"
#include "voidprob/objective.hpp"
#include "voidprob/sensing.hpp"

namespace voidprob {

/// Candidate sensor locations, kept sorted ascending.
class CandidateSet {
 public:
  CandidateSet(std::vector<double> positions, const GridDomain& domain);

  /// start_km, start_km + spacing, ... up to end_km.
  static CandidateSet from_grid(const GridDomain& domain, double spacing_km);

  const std::vector<double>& positions() const { return positions_; }
  std::size_t size() const { return positions_.size(); }

 private:
  std::vector<double> positions_;
};

enum class Surrogate { jensen, variance_corrected };

std::string_view to_string(Surrogate s);
Surrogate parse_surrogate(std::string_view name);

double surrogate_value(Surrogate s, const MomentPair& m);

struct McOptions {
  std::size_t samples = 20000;
  SamplingMode mode = SamplingMode::correlated;
  std::uint64_t seed = 1;
};

/// Greedy selection record; every curve has one entry per placed sensor.
struct PlacementTrace {
  Surrogate surrogate = Surrogate::variance_corrected;
  std::vector<double> chosen;
  std::vector<double> objective_curve;
  std::vector<MomentPair> moment_curve;
  std::vector<double> jensen_curve;
  std::vector<double> corrected_curve;
  // Empty unless Monte-Carlo evaluation was requested.
  std::vector<McEstimate> mc_curve;
  std::vector<double> jensen_gap_curve;     // mc - jensen
  std::vector<double> corrected_gap_curve;  // mc - corrected
  std::vector<GapDiagnostics> diagnostics;  // bounds at sampled moments

  std::size_t size() const { return chosen.size(); }
  bool has_mc() const { return !mc_curve.empty(); }
};

/// Greedy maximization of the surrogate. Each step appends the candidate
/// with the highest surrogate value; ties go to the smallest position.
/// Candidates may be picked more than once.
PlacementTrace greedy_place(const IntensityField& field,
                            const SensorModel& model,
                            const CandidateSet& candidates, std::size_t n,
                            Surrogate surrogate,
                            const std::optional<McOptions>& mc = std::nullopt);

struct ExhaustiveResult {
  std::vector<double> positions;
  double value = 0.0;
  std::size_t evaluated = 0;
};

constexpr std::size_t kDefaultExhaustiveBudget = 2'000'000;

/// Number of size-n multisets drawn from `candidates` items, saturating at
/// SIZE_MAX.
std::size_t multiset_count(std::size_t candidates, std::size_t n);

/// Exact maximizer over all size-n multisets of candidates. Throws
/// std::invalid_argument when the multiset count exceeds `budget`.
ExhaustiveResult exhaustive_place(const IntensityField& field,
                                  const SensorModel& model,
                                  const CandidateSet& candidates, std::size_t n,
                                  Surrogate surrogate,
                                  std::size_t budget = kDefaultExhaustiveBudget);

}  // namespace voidprob
