#include "voidprob/sensing.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace voidprob {

SensorModel::SensorModel(double rho, double sigma_l)
    : rho_(rho), sigma_l_(sigma_l) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("sensor rho must lie in [0, 1]");
  }
  if (!(std::isfinite(sigma_l) && sigma_l > 0.0)) {
    throw std::invalid_argument("sensor sigma_l must be positive");
  }
}

double detection_prob(const SensorModel& model, double s_km, double a_km) {
  const double d = a_km - s_km;
  return model.rho() * std::exp(-(d * d) / model.sigma_l());
}

double miss_prob(const SensorNetwork& net, double s_km) {
  double miss = 1.0;
  for (double a : net.positions) miss *= 1.0 - detection_prob(net.model, s_km, a);
  return miss;
}

void apply_sensor(const SensorModel& model, double a_km,
                  const GridDomain& domain, std::span<double> miss) {
  if (miss.size() != domain.size()) {
    throw std::invalid_argument("miss profile length does not match grid");
  }
  for (std::size_t i = 0; i < miss.size(); ++i) {
    miss[i] *= 1.0 - detection_prob(model, domain.point(i), a_km);
  }
}

std::vector<double> miss_profile(const SensorNetwork& net,
                                 const GridDomain& domain) {
  std::vector<double> miss(domain.size(), 1.0);
  for (double a : net.positions) apply_sensor(net.model, a, domain, miss);
  return miss;
}

void check_network_in_domain(const SensorNetwork& net,
                             const GridDomain& domain) {
  for (double a : net.positions) {
    if (!std::isfinite(a) || !domain.contains(a)) {
      throw std::invalid_argument("sensor position " + std::to_string(a) +
                                  " km lies outside the domain");
    }
  }
}

}  // namespace voidprob
