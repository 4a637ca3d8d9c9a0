#include "cpo/erich.hpp"

#include <algorithm>
#include <limits>

namespace cpo::erich {

std::vector<Application> sort_applications(std::vector<Application> apps) {
  std::stable_sort(apps.begin(), apps.end(), [](const Application& x, const Application& y) {
    if (x.start != y.start) return x.start < y.start;
    if (x.sigma != y.sigma) return x.sigma > y.sigma;
    return x.name < y.name;
  });
  return apps;
}

std::vector<InstanceType> sort_instance_types(std::vector<InstanceType> types) {
  std::stable_sort(types.begin(), types.end(), [](const InstanceType& x, const InstanceType& y) {
    const double rx = x.price_per_capacity(), ry = y.price_per_capacity();
    if (rx != ry) return rx < ry;
    if (x.capacity != y.capacity) return x.capacity > y.capacity;
    return x.name < y.name;
  });
  return types;
}

namespace {

const InstanceType* first_fitting(const std::vector<InstanceType>& types, const Problem& problem,
                                  const Application& app, Slot t0, Slot t1) {
  for (const auto& t : types) {
    if (fits_alone(app, t, problem.qos()) && problem.envelope_for(t, t0, t1)) return &t;
  }
  return nullptr;
}

[[noreturn]] void throw_infeasible(const Application& app) {
  throw InfeasibleAppError(app.id, "no admissible instance type can host application '" +
                                       app.name + "' on its own");
}

// First-fit over existing reserved and on-demand hosts in provisioning order, then a
// new on-demand instance. An on-demand host may stretch its envelope to take the app
// when that costs no more than the new instance would.
bool place_first_fit_on_demand(Packing& p, AppIndex a) {
  const Problem& problem = p.problem();
  const Application& app = problem.app(a);
  const InstanceType* fresh =
      first_fitting(problem.on_demand_types(), problem, app, app.start, app.finish);
  const double fresh_cost = fresh ? fresh->price_per_slot * app.length()
                                  : std::numeric_limits<double>::infinity();
  for (HostIndex h = 0; h < static_cast<HostIndex>(p.hosts().size()); ++h) {
    const Host& host = p.host(h);
    if (!host.alive || host.type->market == MarketSpace::Spot) continue;
    if (host.fixed) {
      if (p.can_place(h, a, app.start, app.finish)) {
        p.place(h, a, app.start, app.finish);
        return true;
      }
      continue;
    }
    const auto growth = p.can_place_extending(h, a, app.start, app.finish);
    if (growth && (*growth == 0 || host.type->price_per_slot * *growth <= fresh_cost)) {
      p.place(h, a, app.start, app.finish);
      return true;
    }
  }
  if (!fresh) return false;
  p.place(p.provision(*fresh, app.start, app.finish), a, app.start, app.finish);
  return true;
}

}  // namespace

Packing stage2_assign_reserved(const ProblemPtr& problem) {
  Packing p(problem);
  for (AppIndex a = 0; a < problem->non_preemptible_count(); ++a) {
    const Application& app = problem->app(a);
    bool placed = false;
    for (HostIndex h = 0; h < static_cast<HostIndex>(p.hosts().size()) && !placed; ++h) {
      if (p.host(h).type->market != MarketSpace::Reserved) continue;
      if (p.can_place(h, a, app.start, app.finish)) {
        p.place(h, a, app.start, app.finish);
        placed = true;
      }
    }
    if (placed) continue;
    if (const auto* type =
            first_fitting(problem->reserved_types(), *problem, app, app.start, app.finish)) {
      const auto [b, e] = *problem->envelope_for(*type, app.start, app.finish);
      p.place(p.provision(*type, b, e), a, app.start, app.finish);
      continue;
    }
    // Extent straddles a term boundary, or no reserved type is large enough.
    if (!place_first_fit_on_demand(p, a)) throw_infeasible(app);
  }
  return p;
}

Packing stage3_condense(Packing portfolio) {
  std::vector<std::uint64_t> reserved;
  for (const auto& h : portfolio.hosts()) {
    if (h.alive && h.type->market == MarketSpace::Reserved) reserved.push_back(h.serial);
  }
  for (std::uint64_t serial : reserved) {
    const auto& hosts = portfolio.hosts();
    const auto it = std::find_if(hosts.begin(), hosts.end(),
                                 [&](const Host& h) { return h.alive && h.serial == serial; });
    if (it == hosts.end()) continue;

    Packing candidate = portfolio;
    const auto orphans = candidate.remove_host(static_cast<HostIndex>(it - hosts.begin()));
    bool ok = true;
    for (AppIndex a : orphans) {
      if (!place_first_fit_on_demand(candidate, a)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    candidate.compact();
    if (candidate.cost() < portfolio.cost()) portfolio = std::move(candidate);
  }
  return portfolio;
}

Packing stage4_assign_preemptible(Packing portfolio) {
  const Problem& problem = portfolio.problem();
  const auto n = static_cast<AppIndex>(problem.apps().size());
  for (AppIndex a = static_cast<AppIndex>(problem.non_preemptible_count()); a < n; ++a) {
    const Application& app = problem.app(a);
    for (Slot t = app.start; t < app.finish; ++t) {
      for (HostIndex h = 0; h < static_cast<HostIndex>(portfolio.hosts().size()); ++h) {
        if (portfolio.can_place(h, a, t, t + 1)) {
          portfolio.place(h, a, t, t + 1);
          break;
        }
      }
    }
    for (const auto& [g0, g1] : portfolio.gaps(a)) {
      const InstanceType* type = first_fitting(problem.spot_types(), problem, app, g0, g1);
      if (!type) type = first_fitting(problem.on_demand_types(), problem, app, g0, g1);
      if (!type) throw_infeasible(app);
      portfolio.place(portfolio.provision(*type, g0, g1), a, g0, g1);
    }
  }
  return portfolio;
}

Allocation optimize(const ProblemPtr& problem) {
  Packing p = stage2_assign_reserved(problem);
  p = stage3_condense(std::move(p));
  p = stage4_assign_preemptible(std::move(p));
  nlohmann::json params = {{"q_min", problem->q_min()},
                           {"horizon", problem->horizon()},
                           {"reserved_term", problem->reserved_term()}};
  return p.to_allocation(Algorithm::ERICH, std::move(params));
}

Allocation optimize(const ErichInput& input) {
  return optimize(std::make_shared<const Problem>(input));
}

}  // namespace cpo::erich
