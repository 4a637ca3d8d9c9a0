#ifndef CPO_PROBLEM_HPP
#define CPO_PROBLEM_HPP

#include <memory>
#include <span>
#include <vector>

#include "cpo/domain.hpp"
#include "cpo/feasibility.hpp"

namespace cpo {

// Optimizer input shared by ERICH and GEORG: applications split by preemptibility and
// the catalog split by market space.
struct ErichInput {
  std::vector<Application> non_preemptible;
  std::vector<Application> preemptible;
  std::vector<InstanceType> reserved_types;
  std::vector<InstanceType> on_demand_types;
  std::vector<InstanceType> spot_types;
  double q_min = 0.95;
  Slot horizon = 0;        // 0: max finish over all applications
  Slot reserved_term = 0;  // 0: the horizon
};

// Splits applications by preemptibility and types by market.
ErichInput make_input(std::span<const Application> apps, std::span<const InstanceType> types,
                      double q_min, Slot horizon = 0, Slot reserved_term = 0);

// Validated, sorted, immutable view of an ErichInput. Applications are indexed
// non-preemptible first, each group in ERICH order; type lists are in ERICH order.
class Problem {
 public:
  explicit Problem(const ErichInput& input);

  const std::vector<Application>& apps() const { return apps_; }
  const Application& app(std::size_t i) const { return apps_[i]; }
  std::size_t non_preemptible_count() const { return non_preemptible_count_; }

  const std::vector<InstanceType>& reserved_types() const { return reserved_; }
  const std::vector<InstanceType>& on_demand_types() const { return on_demand_; }
  const std::vector<InstanceType>& spot_types() const { return spot_; }

  const QosThreshold& qos() const { return qos_; }
  double q_min() const { return qos_.q_min(); }
  Slot horizon() const { return horizon_; }
  Slot reserved_term() const { return reserved_term_; }

  // Start of the reserved term window that contains slot t.
  Slot reserved_window_begin(Slot t) const { return (t / reserved_term_) * reserved_term_; }
  // Envelope a new instance of `type` gets when opened for slots [t0, t1), or an
  // empty optional if a reserved window cannot contain that range.
  std::optional<std::pair<Slot, Slot>> envelope_for(const InstanceType& type, Slot t0,
                                                    Slot t1) const;

  // Every type (any market) that may host app `a` alone over [t0, t1).
  std::vector<const InstanceType*> feasible_types(std::size_t a, Slot t0, Slot t1) const;

 private:
  std::vector<Application> apps_;
  std::size_t non_preemptible_count_ = 0;
  std::vector<InstanceType> reserved_, on_demand_, spot_;
  QosThreshold qos_;
  Slot horizon_ = 0;
  Slot reserved_term_ = 0;
};

using ProblemPtr = std::shared_ptr<const Problem>;

}  // namespace cpo

#endif  // CPO_PROBLEM_HPP
