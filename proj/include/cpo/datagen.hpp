#ifndef CPO_DATAGEN_HPP
#define CPO_DATAGEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cpo/domain.hpp"
#include "cpo/problem.hpp"

namespace cpo::datagen {

// Target moments for a synthetic application set.
struct AppSetProfile {
  std::string label;
  int n_non_preemptible = 0;
  int n_preemptible = 0;
  double demand_mean = 0.0;
  double demand_std = 0.0;
  double deviation_mean = 0.0;
  double deviation_std = 0.0;
  double alloc_periods_mean = 1.0;
  double alloc_periods_std = 0.0;
  // Multiplies the allocation-period moments; 0.1 gives desk-scale runs of the long sets.
  double period_scale = 1.0;

  void validate() const;
};

// Target moments for a synthetic instance-type catalog. Each of the n_types sampled
// capacities is emitted once per market space.
struct TypeSetProfile {
  std::string label;
  int n_types = 500;
  double capacity_mean = 0.0;
  double capacity_std = 0.0;
  double reserved_price_mean = 0.0;
  double reserved_price_std = 0.0;
  double on_demand_price_mean = 0.0;
  double on_demand_price_std = 0.0;
  double spot_price_mean = 0.0;
  double spot_price_std = 0.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const AppSetProfile& p);
void from_json(const nlohmann::json& j, AppSetProfile& p);
void to_json(nlohmann::json& j, const TypeSetProfile& p);
void from_json(const nlohmann::json& j, TypeSetProfile& p);

// Built-in profiles apps_1..apps_6 and types_1..types_3.
AppSetProfile app_profile(int set);
TypeSetProfile type_profile(int set);

// Smallest generation horizon accepted for a profile: one mean extent.
Slot minimum_horizon(const AppSetProfile& profile);
// Horizon used by build_case: mean + 3 std of the (scaled) extent length.
Slot default_horizon(const AppSetProfile& profile);

std::vector<Application> generate_applications(const AppSetProfile& profile, Slot horizon,
                                               std::uint64_t seed);

std::vector<InstanceType> generate_instance_types(const TypeSetProfile& profile,
                                                  std::uint64_t seed);

struct CaseOptions {
  double q_min = 0.95;
  double period_scale = 1.0;
  Slot reserved_term = 0;  // 0: the horizon
};

// Pairs apps_k with its type set: cases 1-2 use types_1, 3-4 types_2, 5-6 types_3.
ErichInput build_case(int case_id, std::uint64_t seed, const CaseOptions& options = {});

// Desk-scale case options: cases 5 and 6 run with period_scale 0.1.
CaseOptions desk_scale_options(int case_id);

}  // namespace cpo::datagen

#endif  // CPO_DATAGEN_HPP
