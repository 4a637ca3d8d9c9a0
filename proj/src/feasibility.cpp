#include "cpo/feasibility.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cpo {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Acklam's rational approximation (relative error 1.15e-9) followed by one Halley
// refinement against erfc, which brings the result to machine precision.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0, 1)");

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

AggregatedDemand aggregate_demand(std::span<const std::pair<double, double>> mu_sigma) {
  double mu = 0.0, var = 0.0;
  for (const auto& [m, s] : mu_sigma) {
    mu += m;
    var += s * s;
  }
  return {mu, std::sqrt(var)};
}

AggregatedDemand aggregate_demand(std::span<const Application> apps) {
  double mu = 0.0, var = 0.0;
  for (const auto& a : apps) {
    mu += a.mu;
    var += a.sigma * a.sigma;
  }
  return {mu, std::sqrt(var)};
}

bool satisfies_qos(const AggregatedDemand& d, double capacity, double q_min) {
  return QosThreshold(q_min).admits(d, capacity);
}

QosThreshold::QosThreshold(double q_min) : q_min_(q_min) {
  if (!(q_min >= 0.0 && q_min <= 1.0))
    throw std::domain_error("quality of service must be in [0, 1]");
  if (q_min > 0.0 && q_min < 1.0) z_ = normal_quantile(q_min);
}

bool QosThreshold::admits(const AggregatedDemand& d, double capacity) const {
  if (q_min_ == 0.0) return std::isfinite(d.mu_sum);
  if (d.sigma_agg <= 0.0) return d.mu_sum <= capacity;
  if (q_min_ == 1.0) return false;
  return d.mu_sum + z_ * d.sigma_agg <= capacity;
}

bool QosThreshold::admits(double mu, double var, double capacity) const {
  return admits(AggregatedDemand{mu, var > 0.0 ? std::sqrt(var) : 0.0}, capacity);
}

bool fits(const Application& app, const ProvisionedInstance& inst,
          std::span<const std::vector<Application>> existing, double q_min) {
  if (app.start < inst.begin || app.finish > inst.end) return false;
  if (app.preemptible < inst.type.spot_only) return false;
  const QosThreshold qos(q_min);
  for (Slot t = app.start; t < app.finish; ++t) {
    const auto k = static_cast<std::size_t>(t - inst.begin);
    SlotLoad load;
    if (k < existing.size()) {
      for (const auto& other : existing[k]) load.add(other);
    }
    load.add(app);
    if (!qos.admits(load, inst.type.capacity)) return false;
  }
  return true;
}

bool fits(const Application& app, const ProvisionedInstance& inst,
          std::span<const SlotLoad> loads, const QosThreshold& qos) {
  if (app.start < inst.begin || app.finish > inst.end) return false;
  if (app.preemptible < inst.type.spot_only) return false;
  const double var = app.sigma * app.sigma;
  for (Slot t = app.start; t < app.finish; ++t) {
    const auto k = static_cast<std::size_t>(t - inst.begin);
    const SlotLoad base = k < loads.size() ? loads[k] : SlotLoad{};
    if (!qos.admits(base.mu + app.mu, base.var + var, inst.type.capacity)) return false;
  }
  return true;
}

bool fits_alone(const Application& app, const InstanceType& type, const QosThreshold& qos) {
  if (app.preemptible < type.spot_only) return false;
  return qos.admits(app.mu, app.sigma * app.sigma, type.capacity);
}

}  // namespace cpo
