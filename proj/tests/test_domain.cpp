#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cpo/domain.hpp"

using namespace cpo;

namespace {

InstanceType type(double capacity, double price, MarketSpace m = MarketSpace::OnDemand) {
  InstanceType t;
  t.id = "t-" + std::string(to_string(m));
  t.name = "t";
  t.market = m;
  t.spot_only = m == MarketSpace::Spot;
  t.capacity = capacity;
  t.price_per_slot = price;
  return t;
}

ProvisionedInstance inst(std::string id, const InstanceType& t, Slot b, Slot e) {
  return {std::move(id), t, b, e};
}

struct Fixture {
  std::vector<Application> apps;
  Portfolio portfolio;
  Allocation alloc;
};

// One app (mu 2, sigma 0, [0,4)) fully covered by one on-demand instance of R=2.
Fixture single_app(MarketSpace m = MarketSpace::OnDemand, bool preemptible = false) {
  Fixture f;
  f.apps.push_back({"a1", "web", 2.0, 0.0, preemptible, 0, 4});
  f.portfolio = {"p1", "prod", {Provider::AWS}, 0.95, {"a1"}, 1};
  f.alloc.id = "x1";
  f.alloc.portfolio_id = "p1";
  f.alloc.portfolio_version = 1;
  f.alloc.instances.push_back(inst("i1", type(2, 1, m), 0, 4));
  f.alloc.assignment.push_back({"a1", "i1", 0, 4});
  f.alloc.status = AllocationStatus::Completed;
  refresh_statistics(f.alloc, f.apps);
  return f;
}

std::size_t count(const std::vector<Violation>& v, Constraint c) {
  return static_cast<std::size_t>(
      std::count_if(v.begin(), v.end(), [c](const Violation& x) { return x.constraint == c; }));
}

}  // namespace

TEST_CASE("entity invariants") {
  Application a{"a", "n", 1, 0, false, 2, 2};
  CHECK_THROWS_AS(a.validate(), ValidationError);
  try {
    a.validate();
  } catch (const ValidationError& e) {
    CHECK(e.field() == "finish");
  }
  a.finish = 3;
  CHECK_NOTHROW(a.validate());
  a.mu = -1;
  CHECK_THROWS_AS(a.validate(), ValidationError);
  a.mu = 1;
  a.start = -1;
  CHECK_THROWS_AS(a.validate(), ValidationError);

  auto t = type(0, 1);
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = type(1, 0);
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = type(1, 1, MarketSpace::Spot);
  t.spot_only = false;
  CHECK_THROWS_AS(t.validate(), ValidationError);

  Portfolio p{"p", "n", {}, 0.5, {}, 1};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.providers = {Provider::Azure};
  CHECK_NOTHROW(p.validate());
  p.q_min = 1.01;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("enum names round-trip") {
  for (auto m : kAllMarkets) CHECK(parse_market(to_string(m)) == m);
  for (auto p : kAllProviders) CHECK(parse_provider(to_string(p)) == p);
  CHECK(parse_algorithm("GEORG") == Algorithm::GEORG);
  CHECK_THROWS(parse_market("Dedicated"));
}

TEST_CASE("validate_allocation examples") {
  SUBCASE("fully covered single app") {
    auto f = single_app();
    CHECK(validate_allocation(f.alloc, f.portfolio, f.apps).empty());
  }
  SUBCASE("one slot's entry deleted") {
    auto f = single_app();
    f.alloc.assignment = {{"a1", "i1", 0, 1}, {"a1", "i1", 2, 4}};
    const auto v = validate_allocation(f.alloc, f.portfolio, f.apps);
    REQUIRE(v.size() == 1);
    CHECK(v[0].constraint == Constraint::Coverage);
    CHECK(v[0].app_id == "a1");
    CHECK(v[0].slot == 1);
  }
  SUBCASE("non-preemptible app on a spot instance") {
    auto f = single_app(MarketSpace::Spot, false);
    const auto v = validate_allocation(f.alloc, f.portfolio, f.apps);
    REQUIRE(v.size() == 1);
    CHECK(v[0].constraint == Constraint::MarketSuitability);
    CHECK(v[0].instance_id == "i1");
  }
  SUBCASE("preemptible app on a spot instance is fine") {
    auto f = single_app(MarketSpace::Spot, true);
    CHECK(validate_allocation(f.alloc, f.portfolio, f.apps).empty());
  }
  SUBCASE("over capacity") {
    auto f = single_app();
    f.apps[0].mu = 2.5;
    refresh_statistics(f.alloc, f.apps);
    const auto v = validate_allocation(f.alloc, f.portfolio, f.apps);
    CHECK(count(v, Constraint::Capacity) == 4);
  }
  SUBCASE("sigma pushes the quantile over capacity") {
    auto f = single_app();
    f.apps[0].mu = 1.5;
    f.apps[0].sigma = 0.5;  // 1.5 + 1.645 * 0.5 > 2
    CHECK(count(validate_allocation(f.alloc, f.portfolio, f.apps), Constraint::Capacity) == 4);
    f.portfolio.q_min = 0.5;
    CHECK(validate_allocation(f.alloc, f.portfolio, f.apps).empty());
  }
  SUBCASE("assignment outside the envelope and the extent") {
    auto f = single_app();
    f.alloc.instances[0].end = 3;
    refresh_statistics(f.alloc, f.apps);
    CHECK(count(validate_allocation(f.alloc, f.portfolio, f.apps), Constraint::Envelope) == 1);
    f = single_app();
    f.alloc.instances[0].end = 6;
    f.alloc.assignment[0].end = 6;
    refresh_statistics(f.alloc, f.apps);
    CHECK(count(validate_allocation(f.alloc, f.portfolio, f.apps), Constraint::Extent) == 2);
  }
  SUBCASE("duplicate coverage") {
    auto f = single_app();
    f.alloc.instances.push_back(inst("i2", type(2, 1), 0, 4));
    f.alloc.assignment.push_back({"a1", "i2", 3, 4});
    refresh_statistics(f.alloc, f.apps);
    const auto v = validate_allocation(f.alloc, f.portfolio, f.apps);
    CHECK(count(v, Constraint::Coverage) == 1);
  }
  SUBCASE("non-preemptible app switching hosts") {
    auto f = single_app();
    f.alloc.instances.push_back(inst("i2", type(2, 1), 0, 4));
    f.alloc.assignment = {{"a1", "i1", 0, 2}, {"a1", "i2", 2, 4}};
    refresh_statistics(f.alloc, f.apps);
    CHECK(count(validate_allocation(f.alloc, f.portfolio, f.apps), Constraint::Pinning) == 1);
    f.apps[0].preemptible = true;
    CHECK(validate_allocation(f.alloc, f.portfolio, f.apps).empty());
  }
  SUBCASE("stale total cost") {
    auto f = single_app();
    f.alloc.total_cost += 1;
    CHECK(count(validate_allocation(f.alloc, f.portfolio, f.apps), Constraint::Cost) == 1);
  }
  SUBCASE("unresolved ids") {
    auto f = single_app();
    f.alloc.assignment[0].instance_id = "nope";
    CHECK_THROWS_AS(validate_allocation(f.alloc, f.portfolio, f.apps), ReferenceError);
    f = single_app();
    f.portfolio.app_ids.push_back("ghost");
    CHECK_THROWS_AS(validate_allocation(f.alloc, f.portfolio, f.apps), ReferenceError);
  }
}

TEST_CASE("allocation_cost") {
  CHECK(allocation_cost(Allocation{}) == 0.0);
  std::vector<ProvisionedInstance> two{inst("a", type(1, 2), 0, 3), inst("b", type(1, 1), 1, 6)};
  CHECK(allocation_cost(two) == 11.0);
  std::vector<ProvisionedInstance> reserved{inst("r", type(4, 1.5, MarketSpace::Reserved), 0, 8)};
  CHECK(allocation_cost(reserved) == 12.0);

  SUBCASE("additive over disjoint subsets") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> price(0.1, 5.0);
    std::uniform_int_distribution<int> slot(0, 20);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<ProvisionedInstance> all;
      for (int k = 0; k < 10; ++k) {
        const int b = slot(rng);
        all.push_back(inst("i" + std::to_string(k), type(1, price(rng)), b, b + 1 + slot(rng)));
      }
      const std::size_t cut = static_cast<std::size_t>(trial % 11);
      const std::span<const ProvisionedInstance> s(all);
      CHECK(allocation_cost(s) ==
            doctest::Approx(allocation_cost(s.first(cut)) + allocation_cost(s.subspan(cut))));
    }
  }
}

TEST_CASE("utilization and per-market statistics") {
  Fixture f;
  f.apps.push_back({"a1", "x", 2.0, 0.0, false, 0, 2});
  f.alloc.instances.push_back(inst("i1", type(4, 1), 0, 2));
  f.alloc.assignment.push_back({"a1", "i1", 0, 2});
  refresh_statistics(f.alloc, f.apps);
  CHECK(f.alloc.mean_utilization == doctest::Approx(0.5));
  CHECK(f.alloc.total_cost == 2.0);
  CHECK(f.alloc.per_market_stats.at(MarketSpace::OnDemand).instances == 1);
  CHECK(f.alloc.per_market_stats.at(MarketSpace::OnDemand).utilization == doctest::Approx(0.5));
  CHECK(allocation_utilization(Allocation{}, f.apps) == 0.0);

  f.apps[0].mu = 4.0;
  CHECK(allocation_utilization(f.alloc, f.apps) == doctest::Approx(1.0));
}

TEST_CASE("JSON round-trip") {
  auto f = single_app();
  f.alloc.parameters = {{"q_min", 0.95}};
  f.alloc.algorithm = Algorithm::GEORG;
  const nlohmann::json j = f.alloc;
  CHECK(j.at("algorithm") == "GEORG");
  CHECK(j.at("instances")[0].contains("type_ref"));
  CHECK(j.at("instances")[0].at("type_ref").at("spot_only_flag") == false);
  CHECK(j.get<Allocation>() == f.alloc);
  CHECK(nlohmann::json(f.apps[0]).get<Application>() == f.apps[0]);
  CHECK(nlohmann::json(f.portfolio).get<Portfolio>() == f.portfolio);
  CHECK(nlohmann::json(f.alloc.instances[0].type).get<InstanceType>() == f.alloc.instances[0].type);
}
