#include "cpo/problem.hpp"

#include <algorithm>
#include <set>

#include "cpo/erich.hpp"

namespace cpo {

ErichInput make_input(std::span<const Application> apps, std::span<const InstanceType> types,
                      double q_min, Slot horizon, Slot reserved_term) {
  ErichInput in;
  for (const auto& a : apps) (a.preemptible ? in.preemptible : in.non_preemptible).push_back(a);
  for (const auto& t : types) {
    switch (t.market) {
      case MarketSpace::Reserved: in.reserved_types.push_back(t); break;
      case MarketSpace::OnDemand: in.on_demand_types.push_back(t); break;
      case MarketSpace::Spot: in.spot_types.push_back(t); break;
    }
  }
  in.q_min = q_min;
  in.horizon = horizon;
  in.reserved_term = reserved_term;
  return in;
}

namespace {

void check_types(const std::vector<InstanceType>& types, MarketSpace market) {
  for (const auto& t : types) {
    t.validate();
    if (t.market != market) {
      throw ValidationError("market", "instance type '" + t.name + "' listed under " +
                                          std::string(to_string(market)) + " but is " +
                                          std::string(to_string(t.market)));
    }
  }
}

}  // namespace

Problem::Problem(const ErichInput& input) : qos_(input.q_min) {
  std::set<std::string> ids;
  Slot max_finish = 0;
  for (const auto* group : {&input.non_preemptible, &input.preemptible}) {
    for (const auto& a : *group) {
      a.validate();
      if (a.preemptible != (group == &input.preemptible)) {
        throw ValidationError("preemptible", "application '" + a.name +
                                                 "' is in the wrong preemptibility group");
      }
      if (!ids.insert(a.id).second)
        throw ValidationError("id", "duplicate application id '" + a.id + "'");
      max_finish = std::max(max_finish, a.finish);
    }
  }
  check_types(input.reserved_types, MarketSpace::Reserved);
  check_types(input.on_demand_types, MarketSpace::OnDemand);
  check_types(input.spot_types, MarketSpace::Spot);

  horizon_ = input.horizon > 0 ? input.horizon : std::max<Slot>(max_finish, 1);
  if (horizon_ < max_finish)
    throw ValidationError("horizon", "horizon ends before the last application finishes");
  reserved_term_ = input.reserved_term > 0 ? input.reserved_term : horizon_;

  auto np = erich::sort_applications(input.non_preemptible);
  auto pre = erich::sort_applications(input.preemptible);
  non_preemptible_count_ = np.size();
  apps_ = std::move(np);
  apps_.insert(apps_.end(), pre.begin(), pre.end());

  reserved_ = erich::sort_instance_types(input.reserved_types);
  on_demand_ = erich::sort_instance_types(input.on_demand_types);
  spot_ = erich::sort_instance_types(input.spot_types);
}

std::optional<std::pair<Slot, Slot>> Problem::envelope_for(const InstanceType& type, Slot t0,
                                                           Slot t1) const {
  if (type.market != MarketSpace::Reserved) return std::pair{t0, t1};
  const Slot b = reserved_window_begin(t0);
  if (t1 > b + reserved_term_) return std::nullopt;
  return std::pair{b, b + reserved_term_};
}

std::vector<const InstanceType*> Problem::feasible_types(std::size_t a, Slot t0, Slot t1) const {
  std::vector<const InstanceType*> out;
  const Application& app = apps_[a];
  for (const auto* list : {&reserved_, &on_demand_, &spot_}) {
    for (const auto& t : *list) {
      if (!fits_alone(app, t, qos_)) continue;
      if (!envelope_for(t, t0, t1)) continue;
      out.push_back(&t);
    }
  }
  return out;
}

}  // namespace cpo
