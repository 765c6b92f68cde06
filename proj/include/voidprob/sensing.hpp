#pragma once

#include <span>
#include <vector>

#include "voidprob/field.hpp"

namespace voidprob {

/// Squared-exponential detection kernel gamma(s, a) = rho exp(-(a - s)^2 / sigma_l).
/// sigma_l is in km^2.
class SensorModel {
 public:
  SensorModel(double rho, double sigma_l);

  double rho() const { return rho_; }
  double sigma_l() const { return sigma_l_; }

  friend bool operator==(const SensorModel&, const SensorModel&) = default;

 private:
  double rho_;
  double sigma_l_;
};

struct SensorNetwork {
  std::vector<double> positions;
  SensorModel model;
};

double detection_prob(const SensorModel& model, double s_km, double a_km);

/// Probability that every sensor in the network misses a target at s.
double miss_prob(const SensorNetwork& net, double s_km);

/// miss_prob at every grid point. Factors are multiplied in sensor order, so
/// appending a sensor and multiplying by (1 - gamma) reproduces this exactly.
std::vector<double> miss_profile(const SensorNetwork& net,
                                 const GridDomain& domain);

/// Multiplies `miss` in place by (1 - gamma(s_i, a)).
void apply_sensor(const SensorModel& model, double a_km,
                  const GridDomain& domain, std::span<double> miss);

/// Throws std::invalid_argument if any sensor lies outside the domain.
void check_network_in_domain(const SensorNetwork& net,
                             const GridDomain& domain);

}  // namespace voidprob
