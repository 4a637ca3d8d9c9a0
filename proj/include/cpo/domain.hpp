#ifndef CPO_DOMAIN_HPP
#define CPO_DOMAIN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cpo {

// Slots are abstract billing periods; all intervals are half-open [begin, end).
using Slot = int;

enum class MarketSpace { Reserved, OnDemand, Spot };
enum class Provider { AWS, GoogleCloud, Azure, Alibaba };
enum class Algorithm { ERICH, GEORG };
enum class AllocationStatus { Pending, Completed, Failed };

std::string_view to_string(MarketSpace m);
std::string_view to_string(Provider p);
std::string_view to_string(Algorithm a);
std::string_view to_string(AllocationStatus s);
MarketSpace parse_market(std::string_view s);
Provider parse_provider(std::string_view s);
Algorithm parse_algorithm(std::string_view s);
AllocationStatus parse_allocation_status(std::string_view s);

inline constexpr MarketSpace kAllMarkets[] = {MarketSpace::Reserved, MarketSpace::OnDemand,
                                              MarketSpace::Spot};
inline constexpr Provider kAllProviders[] = {Provider::AWS, Provider::GoogleCloud,
                                             Provider::Azure, Provider::Alibaba};

// Thrown when an entity breaks one of its construction invariants.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Thrown when an id cannot be resolved against the supplied entities.
class ReferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No market variant in the catalog can host the named application on its own.
class InfeasibleAppError : public std::runtime_error {
 public:
  InfeasibleAppError(std::string app_id, const std::string& what)
      : std::runtime_error(what), app_id_(std::move(app_id)) {}
  const std::string& app_id() const noexcept { return app_id_; }

 private:
  std::string app_id_;
};

struct Application {
  std::string id;
  std::string name;
  double mu = 0.0;     // expected demand
  double sigma = 0.0;  // demand standard deviation
  bool preemptible = false;
  Slot start = 0;
  Slot finish = 1;  // exclusive

  Slot length() const { return finish - start; }
  void validate() const;
  friend bool operator==(const Application&, const Application&) = default;
};

struct InstanceType {
  std::string id;
  Provider provider = Provider::AWS;
  std::string name;
  MarketSpace market = MarketSpace::OnDemand;
  double capacity = 1.0;
  double price_per_slot = 1.0;
  bool spot_only = false;

  double price_per_capacity() const { return price_per_slot / capacity; }
  void validate() const;
  friend bool operator==(const InstanceType&, const InstanceType&) = default;
};

struct ProvisionedInstance {
  std::string id;
  InstanceType type;
  Slot begin = 0;
  Slot end = 1;  // exclusive

  Slot duration() const { return end - begin; }
  double cost() const { return type.price_per_slot * static_cast<double>(end - begin); }
  bool covers(Slot t) const { return begin <= t && t < end; }
  friend bool operator==(const ProvisionedInstance&, const ProvisionedInstance&) = default;
};

struct Portfolio {
  std::string id;
  std::string name;
  std::vector<Provider> providers;
  double q_min = 0.95;
  std::vector<std::string> app_ids;
  std::int64_t version = 1;

  void validate() const;
  friend bool operator==(const Portfolio&, const Portfolio&) = default;
};

// A run of consecutive slots [begin, end) during which an application sits on one
// instance. The assignment map (app, slot) -> instance is stored run-length encoded.
struct AssignmentSegment {
  std::string app_id;
  std::string instance_id;
  Slot begin = 0;
  Slot end = 1;
  friend bool operator==(const AssignmentSegment&, const AssignmentSegment&) = default;
};

struct MarketStats {
  int instances = 0;
  double cost = 0.0;
  double utilization = 0.0;
  friend bool operator==(const MarketStats&, const MarketStats&) = default;
};

struct Allocation {
  std::string id;
  std::string portfolio_id;
  std::int64_t portfolio_version = 0;
  Algorithm algorithm = Algorithm::ERICH;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<ProvisionedInstance> instances;
  std::vector<AssignmentSegment> assignment;
  AllocationStatus status = AllocationStatus::Pending;
  double total_cost = 0.0;
  double mean_utilization = 0.0;
  std::map<MarketSpace, MarketStats> per_market_stats;

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

enum class Constraint {
  Coverage,           // every app on exactly one instance at each slot of its extent
  MarketSuitability,  // spot-only hosts carry preemptible apps only
  Capacity,           // QoS quantile of the aggregated demand within capacity
  Envelope,           // assignment inside the host's [begin, end)
  Extent,             // no assignment outside the app's [start, finish)
  Pinning,            // non-preemptible apps keep one host for their whole extent
  InstanceShape,      // begin < end, spot flag consistent with market
  Cost,               // total_cost equals the sum of price x duration
};

std::string_view to_string(Constraint c);

struct Violation {
  Constraint constraint;
  std::string app_id;       // empty when not app-specific
  std::string instance_id;  // empty when not instance-specific
  std::optional<Slot> slot;
  std::string message;
};

// Checks the allocation against every structural invariant plus the QoS constraint
// per instance and slot. Throws ReferenceError when an id does not resolve.
std::vector<Violation> validate_allocation(const Allocation& alloc, const Portfolio& portfolio,
                                           std::span<const Application> apps);

// Sum over instances of price per slot times envelope length.
double allocation_cost(const Allocation& alloc);
double allocation_cost(std::span<const ProvisionedInstance> instances);

// Expected assigned demand over provisioned capacity-slots; 0 for an empty allocation.
double allocation_utilization(const Allocation& alloc, std::span<const Application> apps);

// Fills total_cost, mean_utilization and per_market_stats from instances and assignment.
void refresh_statistics(Allocation& alloc, std::span<const Application> apps);

// JSON (snake_case field names, enums as strings).
void to_json(nlohmann::json& j, const Application& a);
void from_json(const nlohmann::json& j, Application& a);
void to_json(nlohmann::json& j, const InstanceType& t);
void from_json(const nlohmann::json& j, InstanceType& t);
void to_json(nlohmann::json& j, const ProvisionedInstance& p);
void from_json(const nlohmann::json& j, ProvisionedInstance& p);
void to_json(nlohmann::json& j, const Portfolio& p);
void from_json(const nlohmann::json& j, Portfolio& p);
void to_json(nlohmann::json& j, const AssignmentSegment& s);
void from_json(const nlohmann::json& j, AssignmentSegment& s);
void to_json(nlohmann::json& j, const MarketStats& s);
void from_json(const nlohmann::json& j, MarketStats& s);
void to_json(nlohmann::json& j, const Allocation& a);
void from_json(const nlohmann::json& j, Allocation& a);
void to_json(nlohmann::json& j, const Violation& v);

}  // namespace cpo

#endif  // CPO_DOMAIN_HPP
