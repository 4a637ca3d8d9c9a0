#include "cpo/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "cpo/feasibility.hpp"

namespace cpo {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::pair<Enum, std::string_view> (&table)[N],
                std::string_view what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw ValidationError(std::string(what), "unknown " + std::string(what) + " '" +
                                               std::string(s) + "'");
}

constexpr std::pair<MarketSpace, std::string_view> kMarketNames[] = {
    {MarketSpace::Reserved, "Reserved"},
    {MarketSpace::OnDemand, "OnDemand"},
    {MarketSpace::Spot, "Spot"},
};
constexpr std::pair<Provider, std::string_view> kProviderNames[] = {
    {Provider::AWS, "AWS"},
    {Provider::GoogleCloud, "GoogleCloud"},
    {Provider::Azure, "Azure"},
    {Provider::Alibaba, "Alibaba"},
};
constexpr std::pair<Algorithm, std::string_view> kAlgorithmNames[] = {
    {Algorithm::ERICH, "ERICH"},
    {Algorithm::GEORG, "GEORG"},
};
constexpr std::pair<AllocationStatus, std::string_view> kStatusNames[] = {
    {AllocationStatus::Pending, "Pending"},
    {AllocationStatus::Completed, "Completed"},
    {AllocationStatus::Failed, "Failed"},
};

template <typename Enum, std::size_t N>
std::string_view name_of(Enum e, const std::pair<Enum, std::string_view> (&table)[N]) {
  for (const auto& [value, name] : table) {
    if (value == e) return name;
  }
  return "?";
}

// Absorbs summation-order differences between the optimizers' incremental loads and
// the from-scratch aggregation done here.
constexpr double kCapacitySlack = 1e-9;
constexpr double kCostRelTolerance = 1e-9;

}  // namespace

std::string_view to_string(MarketSpace m) { return name_of(m, kMarketNames); }
std::string_view to_string(Provider p) { return name_of(p, kProviderNames); }
std::string_view to_string(Algorithm a) { return name_of(a, kAlgorithmNames); }
std::string_view to_string(AllocationStatus s) { return name_of(s, kStatusNames); }
MarketSpace parse_market(std::string_view s) { return parse_enum(s, kMarketNames, "market"); }
Provider parse_provider(std::string_view s) { return parse_enum(s, kProviderNames, "provider"); }
Algorithm parse_algorithm(std::string_view s) {
  return parse_enum(s, kAlgorithmNames, "algorithm");
}
AllocationStatus parse_allocation_status(std::string_view s) {
  return parse_enum(s, kStatusNames, "status");
}

std::string_view to_string(Constraint c) {
  switch (c) {
    case Constraint::Coverage: return "coverage";
    case Constraint::MarketSuitability: return "market_suitability";
    case Constraint::Capacity: return "capacity";
    case Constraint::Envelope: return "envelope";
    case Constraint::Extent: return "extent";
    case Constraint::Pinning: return "pinning";
    case Constraint::InstanceShape: return "instance_shape";
    case Constraint::Cost: return "cost";
  }
  return "?";
}

void Application::validate() const {
  if (name.empty()) throw ValidationError("name", "application name must not be empty");
  if (!std::isfinite(mu) || mu < 0.0) throw ValidationError("mu", "mu must be >= 0");
  if (!std::isfinite(sigma) || sigma < 0.0)
    throw ValidationError("sigma", "sigma must be >= 0");
  if (start < 0) throw ValidationError("start", "start must be >= 0");
  if (finish <= start) throw ValidationError("finish", "finish must be after start");
}

void InstanceType::validate() const {
  if (!std::isfinite(capacity) || capacity <= 0.0)
    throw ValidationError("capacity", "capacity must be > 0");
  if (!std::isfinite(price_per_slot) || price_per_slot <= 0.0)
    throw ValidationError("price_per_slot", "price_per_slot must be > 0");
  if (spot_only != (market == MarketSpace::Spot))
    throw ValidationError("spot_only_flag", "spot_only_flag must be set exactly for Spot");
}

void Portfolio::validate() const {
  if (name.empty()) throw ValidationError("name", "portfolio name must not be empty");
  if (providers.empty())
    throw ValidationError("providers", "a portfolio needs at least one provider");
  if (!(q_min >= 0.0 && q_min <= 1.0)) throw ValidationError("q_min", "q_min must be in [0, 1]");
  if (version < 1) throw ValidationError("version", "version must be >= 1");
}

double allocation_cost(std::span<const ProvisionedInstance> instances) {
  double total = 0.0;
  for (const auto& inst : instances) total += inst.cost();
  return total;
}

double allocation_cost(const Allocation& alloc) { return allocation_cost(alloc.instances); }

namespace {

struct UtilizationSums {
  std::map<MarketSpace, double> demand;
  std::map<MarketSpace, double> capacity;
};

UtilizationSums utilization_sums(const Allocation& alloc, std::span<const Application> apps) {
  std::unordered_map<std::string_view, const Application*> by_id;
  for (const auto& a : apps) by_id.emplace(a.id, &a);
  std::unordered_map<std::string_view, const ProvisionedInstance*> inst_by_id;
  UtilizationSums sums;
  for (const auto& inst : alloc.instances) {
    inst_by_id.emplace(inst.id, &inst);
    sums.capacity[inst.type.market] += inst.type.capacity * inst.duration();
  }
  for (const auto& seg : alloc.assignment) {
    auto app = by_id.find(seg.app_id);
    auto inst = inst_by_id.find(seg.instance_id);
    if (app == by_id.end() || inst == inst_by_id.end()) continue;
    sums.demand[inst->second->type.market] += app->second->mu * (seg.end - seg.begin);
  }
  return sums;
}

}  // namespace

double allocation_utilization(const Allocation& alloc, std::span<const Application> apps) {
  const auto sums = utilization_sums(alloc, apps);
  double demand = 0.0, capacity = 0.0;
  for (const auto& [m, d] : sums.demand) demand += d;
  for (const auto& [m, c] : sums.capacity) capacity += c;
  return capacity > 0.0 ? demand / capacity : 0.0;
}

void refresh_statistics(Allocation& alloc, std::span<const Application> apps) {
  alloc.total_cost = allocation_cost(alloc);
  const auto sums = utilization_sums(alloc, apps);
  double demand = 0.0, capacity = 0.0;
  alloc.per_market_stats.clear();
  for (MarketSpace m : kAllMarkets) alloc.per_market_stats[m] = MarketStats{};
  for (const auto& inst : alloc.instances) {
    auto& s = alloc.per_market_stats[inst.type.market];
    ++s.instances;
    s.cost += inst.cost();
  }
  for (MarketSpace m : kAllMarkets) {
    const double d = sums.demand.contains(m) ? sums.demand.at(m) : 0.0;
    const double c = sums.capacity.contains(m) ? sums.capacity.at(m) : 0.0;
    alloc.per_market_stats[m].utilization = c > 0.0 ? d / c : 0.0;
    demand += d;
    capacity += c;
  }
  alloc.mean_utilization = capacity > 0.0 ? demand / capacity : 0.0;
}

std::vector<Violation> validate_allocation(const Allocation& alloc, const Portfolio& portfolio,
                                           std::span<const Application> apps) {
  std::vector<Violation> out;

  std::unordered_map<std::string_view, const Application*> app_by_id;
  for (const auto& a : apps) app_by_id.emplace(a.id, &a);
  for (const auto& id : portfolio.app_ids) {
    if (!app_by_id.contains(id))
      throw ReferenceError("portfolio references unknown application '" + id + "'");
  }
  std::unordered_map<std::string_view, const ProvisionedInstance*> inst_by_id;
  for (const auto& inst : alloc.instances) {
    if (!inst_by_id.emplace(inst.id, &inst).second)
      throw ReferenceError("duplicate instance id '" + inst.id + "'");
    if (inst.begin >= inst.end) {
      out.push_back({Constraint::InstanceShape, "", inst.id, std::nullopt,
                     "instance envelope is empty"});
    }
    if (inst.type.spot_only != (inst.type.market == MarketSpace::Spot)) {
      out.push_back({Constraint::InstanceShape, "", inst.id, std::nullopt,
                     "spot flag inconsistent with market"});
    }
  }

  // Per (app, slot) host ids, built from the run-length encoded assignment.
  std::unordered_map<std::string_view, std::vector<std::vector<std::string_view>>> hosts_at;
  for (const auto& a : apps) hosts_at[a.id].resize(static_cast<std::size_t>(a.length()));
  // Per (instance, slot) resident apps.
  std::unordered_map<std::string_view, std::map<Slot, std::vector<const Application*>>> residents;

  for (const auto& seg : alloc.assignment) {
    auto app_it = app_by_id.find(seg.app_id);
    if (app_it == app_by_id.end())
      throw ReferenceError("assignment references unknown application '" + seg.app_id + "'");
    auto inst_it = inst_by_id.find(seg.instance_id);
    if (inst_it == inst_by_id.end())
      throw ReferenceError("assignment references unknown instance '" + seg.instance_id + "'");
    const Application& app = *app_it->second;
    const ProvisionedInstance& inst = *inst_it->second;
    if (app.preemptible < inst.type.spot_only) {
      out.push_back({Constraint::MarketSuitability, app.id, inst.id, seg.begin,
                     "non-preemptible application on a spot-only instance"});
    }
    for (Slot t = seg.begin; t < seg.end; ++t) {
      if (t < app.start || t >= app.finish) {
        out.push_back({Constraint::Extent, app.id, inst.id, t,
                       "assignment outside the application's extent"});
        continue;
      }
      if (!inst.covers(t)) {
        out.push_back({Constraint::Envelope, app.id, inst.id, t,
                       "assignment outside the instance envelope"});
      }
      hosts_at[app.id][static_cast<std::size_t>(t - app.start)].push_back(inst.id);
      residents[inst.id][t].push_back(&app);
    }
  }

  for (const auto& a : apps) {
    const auto& slots = hosts_at[a.id];
    std::set<std::string_view> distinct_hosts;
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const Slot t = a.start + static_cast<Slot>(k);
      if (slots[k].empty()) {
        out.push_back({Constraint::Coverage, a.id, "", t, "application not assigned at slot"});
      } else if (slots[k].size() > 1) {
        out.push_back({Constraint::Coverage, a.id, std::string(slots[k][1]), t,
                       "application assigned to more than one instance at slot"});
      }
      for (auto h : slots[k]) distinct_hosts.insert(h);
    }
    if (!a.preemptible && distinct_hosts.size() > 1) {
      out.push_back({Constraint::Pinning, a.id, "", std::nullopt,
                     "non-preemptible application moves between instances"});
    }
  }

  const QosThreshold qos(portfolio.q_min);
  for (const auto& [inst_id, per_slot] : residents) {
    const ProvisionedInstance& inst = *inst_by_id.at(inst_id);
    for (const auto& [t, members] : per_slot) {
      AggregatedDemand d;
      double var = 0.0;
      for (const Application* a : members) {
        d.mu_sum += a->mu;
        var += a->sigma * a->sigma;
      }
      d.sigma_agg = std::sqrt(var);
      const double slack = kCapacitySlack * std::max(1.0, inst.type.capacity);
      if (!qos.admits(d, inst.type.capacity + slack)) {
        out.push_back({Constraint::Capacity, "", inst.id, t,
                       "aggregated demand exceeds capacity at the required quality of service"});
      }
    }
  }

  const double expected = allocation_cost(alloc);
  if (std::abs(expected - alloc.total_cost) > kCostRelTolerance * std::max(1.0, expected)) {
    out.push_back({Constraint::Cost, "", "", std::nullopt,
                   "total_cost does not equal the sum of instance costs"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const Application& a) {
  j = {{"id", a.id},       {"name", a.name},     {"mu", a.mu},        {"sigma", a.sigma},
       {"preemptible", a.preemptible}, {"start", a.start}, {"finish", a.finish}};
}

void from_json(const nlohmann::json& j, Application& a) {
  a.id = j.value("id", std::string{});
  a.name = j.at("name").get<std::string>();
  a.mu = j.at("mu").get<double>();
  a.sigma = j.at("sigma").get<double>();
  a.preemptible = j.at("preemptible").get<bool>();
  a.start = j.at("start").get<Slot>();
  a.finish = j.at("finish").get<Slot>();
}

void to_json(nlohmann::json& j, const InstanceType& t) {
  j = {{"id", t.id},
       {"provider", to_string(t.provider)},
       {"name", t.name},
       {"market", to_string(t.market)},
       {"capacity", t.capacity},
       {"price_per_slot", t.price_per_slot},
       {"spot_only_flag", t.spot_only}};
}

void from_json(const nlohmann::json& j, InstanceType& t) {
  t.id = j.value("id", std::string{});
  t.provider = parse_provider(j.at("provider").get<std::string>());
  t.name = j.at("name").get<std::string>();
  t.market = parse_market(j.at("market").get<std::string>());
  t.capacity = j.at("capacity").get<double>();
  t.price_per_slot = j.at("price_per_slot").get<double>();
  t.spot_only = j.value("spot_only_flag", t.market == MarketSpace::Spot);
}

void to_json(nlohmann::json& j, const ProvisionedInstance& p) {
  j = {{"id", p.id}, {"type_ref", p.type}, {"begin", p.begin}, {"end", p.end}};
}

void from_json(const nlohmann::json& j, ProvisionedInstance& p) {
  p.id = j.at("id").get<std::string>();
  p.type = j.at("type_ref").get<InstanceType>();
  p.begin = j.at("begin").get<Slot>();
  p.end = j.at("end").get<Slot>();
}

void to_json(nlohmann::json& j, const Portfolio& p) {
  auto providers = nlohmann::json::array();
  for (auto pr : p.providers) providers.push_back(to_string(pr));
  j = {{"id", p.id},           {"name", p.name},       {"providers", providers},
       {"q_min", p.q_min},     {"app_ids", p.app_ids}, {"version", p.version}};
}

void from_json(const nlohmann::json& j, Portfolio& p) {
  p.id = j.value("id", std::string{});
  p.name = j.at("name").get<std::string>();
  p.providers.clear();
  for (const auto& s : j.at("providers")) p.providers.push_back(parse_provider(s.get<std::string>()));
  p.q_min = j.at("q_min").get<double>();
  p.app_ids = j.value("app_ids", std::vector<std::string>{});
  p.version = j.value("version", std::int64_t{1});
}

void to_json(nlohmann::json& j, const AssignmentSegment& s) {
  j = {{"app_id", s.app_id}, {"instance_id", s.instance_id}, {"begin", s.begin}, {"end", s.end}};
}

void from_json(const nlohmann::json& j, AssignmentSegment& s) {
  s.app_id = j.at("app_id").get<std::string>();
  s.instance_id = j.at("instance_id").get<std::string>();
  s.begin = j.at("begin").get<Slot>();
  s.end = j.at("end").get<Slot>();
}

void to_json(nlohmann::json& j, const MarketStats& s) {
  j = {{"instances", s.instances}, {"cost", s.cost}, {"utilization", s.utilization}};
}

void from_json(const nlohmann::json& j, MarketStats& s) {
  s.instances = j.at("instances").get<int>();
  s.cost = j.at("cost").get<double>();
  s.utilization = j.at("utilization").get<double>();
}

void to_json(nlohmann::json& j, const Allocation& a) {
  auto stats = nlohmann::json::object();
  for (const auto& [m, s] : a.per_market_stats) stats[std::string(to_string(m))] = s;
  j = {{"id", a.id},
       {"portfolio_id", a.portfolio_id},
       {"portfolio_version", a.portfolio_version},
       {"algorithm", to_string(a.algorithm)},
       {"parameters", a.parameters},
       {"instances", a.instances},
       {"assignment", a.assignment},
       {"status", to_string(a.status)},
       {"total_cost", a.total_cost},
       {"mean_utilization", a.mean_utilization},
       {"per_market_stats", stats}};
}

void from_json(const nlohmann::json& j, Allocation& a) {
  a.id = j.value("id", std::string{});
  a.portfolio_id = j.value("portfolio_id", std::string{});
  a.portfolio_version = j.value("portfolio_version", std::int64_t{0});
  a.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  a.parameters = j.value("parameters", nlohmann::json::object());
  a.instances = j.at("instances").get<std::vector<ProvisionedInstance>>();
  a.assignment = j.at("assignment").get<std::vector<AssignmentSegment>>();
  a.status = parse_allocation_status(j.value("status", std::string("Pending")));
  a.total_cost = j.value("total_cost", 0.0);
  a.mean_utilization = j.value("mean_utilization", 0.0);
  a.per_market_stats.clear();
  if (j.contains("per_market_stats")) {
    for (const auto& [k, v] : j.at("per_market_stats").items())
      a.per_market_stats[parse_market(k)] = v.get<MarketStats>();
  }
}

void to_json(nlohmann::json& j, const Violation& v) {
  j = {{"constraint", to_string(v.constraint)},
       {"app_id", v.app_id},
       {"instance_id", v.instance_id},
       {"message", v.message}};
  j["slot"] = v.slot ? nlohmann::json(*v.slot) : nlohmann::json(nullptr);
}

}  // namespace cpo
