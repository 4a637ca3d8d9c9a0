#ifndef CPO_FEASIBILITY_HPP
#define CPO_FEASIBILITY_HPP

#include <span>
#include <utility>
#include <vector>

#include "cpo/domain.hpp"

namespace cpo {

// Sum of independent normal demands: means add, variances add.
struct AggregatedDemand {
  double mu_sum = 0.0;
  double sigma_agg = 0.0;
};

// Running per-slot load on one instance; variance is kept instead of sigma so that
// adding an application is a plain addition.
struct SlotLoad {
  double mu = 0.0;
  double var = 0.0;

  void add(const Application& a) {
    mu += a.mu;
    var += a.sigma * a.sigma;
  }
};

// Inverse of the standard normal CDF. Throws std::domain_error unless 0 < p < 1.
double normal_quantile(double p);

// Standard normal CDF.
double normal_cdf(double z);

AggregatedDemand aggregate_demand(std::span<const std::pair<double, double>> mu_sigma);
AggregatedDemand aggregate_demand(std::span<const Application> apps);

bool satisfies_qos(const AggregatedDemand& d, double capacity, double q_min);

// satisfies_qos with the quantile precomputed, for use in packing loops.
class QosThreshold {
 public:
  explicit QosThreshold(double q_min);

  double q_min() const { return q_min_; }
  double z() const { return z_; }

  bool admits(const AggregatedDemand& d, double capacity) const;
  bool admits(double mu, double var, double capacity) const;
  bool admits(const SlotLoad& load, double capacity) const {
    return admits(load.mu, load.var, capacity);
  }

 private:
  double q_min_;
  double z_ = 0.0;
};

// Does `app` fit on `inst` given the applications already resident per slot?
// `existing[k]` lists residents at slot inst.begin + k.
bool fits(const Application& app, const ProvisionedInstance& inst,
          std::span<const std::vector<Application>> existing, double q_min);

// Same check against precomputed loads; `loads[k]` is the load at slot inst.begin + k.
bool fits(const Application& app, const ProvisionedInstance& inst,
          std::span<const SlotLoad> loads, const QosThreshold& qos);

// Can the type host the application alone over its whole extent?
bool fits_alone(const Application& app, const InstanceType& type, const QosThreshold& qos);

}  // namespace cpo

#endif  // CPO_FEASIBILITY_HPP
