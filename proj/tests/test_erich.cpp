#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cpo/datagen.hpp"
#include "cpo/erich.hpp"

using namespace cpo;

namespace {

Application app(std::string name, double mu, double sigma, Slot s, Slot f, bool pre = false) {
  return {name, name, mu, sigma, pre, s, f};
}

InstanceType type(std::string name, MarketSpace m, double capacity, double price) {
  InstanceType t;
  t.id = name + "-" + std::string(to_string(m));
  t.name = std::move(name);
  t.market = m;
  t.spot_only = m == MarketSpace::Spot;
  t.capacity = capacity;
  t.price_per_slot = price;
  return t;
}

std::vector<std::string> names(const std::vector<Application>& apps) {
  std::vector<std::string> out;
  for (const auto& a : apps) out.push_back(a.name);
  return out;
}

Portfolio portfolio_for(const ErichInput& in) {
  Portfolio p{"p", "p", {Provider::AWS}, in.q_min, {}, 1};
  for (const auto& a : in.non_preemptible) p.app_ids.push_back(a.id);
  for (const auto& a : in.preemptible) p.app_ids.push_back(a.id);
  return p;
}

std::vector<Application> all_apps(const ErichInput& in) {
  auto v = in.non_preemptible;
  v.insert(v.end(), in.preemptible.begin(), in.preemptible.end());
  return v;
}

std::size_t count_market(const Allocation& a, MarketSpace m) {
  return static_cast<std::size_t>(std::count_if(
      a.instances.begin(), a.instances.end(),
      [m](const ProvisionedInstance& i) { return i.type.market == m; }));
}

}  // namespace

TEST_CASE("sort_applications") {
  CHECK(erich::sort_applications({}).empty());
  CHECK(names(erich::sort_applications({app("b", 1, 1, 2, 3), app("a", 1, 0, 0, 1)})) ==
        std::vector<std::string>{"a", "b"});
  CHECK(names(erich::sort_applications(
            {app("a", 1, 1, 0, 1), app("b", 1, 3, 0, 1), app("c", 1, 3, 0, 1)})) ==
        std::vector<std::string>{"b", "c", "a"});
}

TEST_CASE("sort_instance_types") {
  auto ratios = [](const std::vector<InstanceType>& v) {
    std::vector<double> r;
    for (const auto& t : v) r.push_back(t.price_per_capacity());
    return r;
  };
  const auto two = erich::sort_instance_types(
      {type("x", MarketSpace::OnDemand, 2, 4), type("y", MarketSpace::OnDemand, 3, 3)});
  CHECK(two[0].name == "y");
  const auto tie = erich::sort_instance_types(
      {type("x", MarketSpace::OnDemand, 2, 2), type("y", MarketSpace::OnDemand, 4, 4)});
  CHECK(tie[0].capacity == 4);
  const auto three = erich::sort_instance_types({type("a", MarketSpace::OnDemand, 1, 2),
                                                 type("b", MarketSpace::OnDemand, 4, 2),
                                                 type("c", MarketSpace::OnDemand, 3, 3)});
  CHECK(ratios(three) == std::vector<double>{0.5, 1.0, 2.0});
}

TEST_CASE("stage 2: reserved first-fit") {
  SUBCASE("one app, cost 4") {
    ErichInput in;
    in.non_preemptible = {app("a", 2, 0, 0, 4)};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 1)};
    const auto p = erich::stage2_assign_reserved(std::make_shared<const Problem>(in));
    CHECK(p.live_hosts() == 1);
    CHECK(p.cost() == 4.0);
  }
  SUBCASE("two identical apps share one instance") {
    ErichInput in;
    in.non_preemptible = {app("a", 1, 0, 0, 4), app("b", 1, 0, 0, 4)};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 1)};
    const auto p = erich::stage2_assign_reserved(std::make_shared<const Problem>(in));
    CHECK(p.live_hosts() == 1);
  }
  SUBCASE("three full apps need three instances") {
    ErichInput in;
    in.non_preemptible = {app("a", 2, 0, 0, 4), app("b", 2, 0, 0, 4), app("c", 2, 0, 0, 4)};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 1)};
    const auto p = erich::stage2_assign_reserved(std::make_shared<const Problem>(in));
    CHECK(p.live_hosts() == 3);
    CHECK(p.cost() == 12.0);
  }
  SUBCASE("no type can host the app alone") {
    ErichInput in;
    in.non_preemptible = {app("huge", 5, 0, 0, 4)};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 1)};
    in.on_demand_types = {type("o", MarketSpace::OnDemand, 3, 1)};
    try {
      erich::optimize(in);
      FAIL("expected InfeasibleAppError");
    } catch (const InfeasibleAppError& e) {
      CHECK(e.app_id() == "huge");
    }
  }
}

TEST_CASE("stage 3: condense") {
  SUBCASE("short app moves from a long reserved term to on-demand") {
    ErichInput in;
    in.non_preemptible = {app("a", 1, 0, 0, 2)};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 1)};
    in.on_demand_types = {type("o", MarketSpace::OnDemand, 2, 2)};
    in.horizon = 10;
    auto problem = std::make_shared<const Problem>(in);
    auto before = erich::stage2_assign_reserved(problem);
    CHECK(before.cost() == 10.0);
    auto after = erich::stage3_condense(before);
    CHECK(after.cost() == 4.0);
  }
  SUBCASE("fully packed reserved stays") {
    ErichInput in;
    in.non_preemptible = {app("a", 2, 0, 0, 10)};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 1)};
    in.on_demand_types = {type("o", MarketSpace::OnDemand, 2, 3)};
    auto problem = std::make_shared<const Problem>(in);
    auto after = erich::stage3_condense(erich::stage2_assign_reserved(problem));
    CHECK(after.cost() == 10.0);
    CHECK(after.hosts()[0].type->market == MarketSpace::Reserved);
  }
  SUBCASE("empty") {
    ErichInput in;
    auto problem = std::make_shared<const Problem>(in);
    CHECK(erich::stage3_condense(erich::stage2_assign_reserved(problem)).live_hosts() == 0);
  }
  SUBCASE("never increases cost") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto in = datagen::build_case(1 + static_cast<int>(seed % 4), seed);
      auto problem = std::make_shared<const Problem>(in);
      auto s2 = erich::stage2_assign_reserved(problem);
      const double c2 = s2.cost();
      CHECK(erich::stage3_condense(std::move(s2)).cost() <= c2 + 1e-9);
    }
  }
}

TEST_CASE("stage 4: preemptible gaps") {
  SUBCASE("existing slack at {2,3}, spot elsewhere") {
    ErichInput in;
    in.non_preemptible = {app("x", 2, 0, 0, 2), app("y", 2, 0, 4, 6)};
    in.preemptible = {app("p", 1, 0, 0, 6, true)};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 1)};
    in.on_demand_types = {type("o", MarketSpace::OnDemand, 2, 100)};
    in.spot_types = {type("s", MarketSpace::Spot, 2, 0.5)};
    const auto alloc = erich::optimize(in);
    CHECK(validate_allocation(alloc, portfolio_for(in), all_apps(in)).empty());
    REQUIRE(count_market(alloc, MarketSpace::Reserved) == 1);
    REQUIRE(count_market(alloc, MarketSpace::Spot) == 2);
    std::vector<std::pair<Slot, Slot>> spot;
    std::string reserved_id;
    for (const auto& i : alloc.instances) {
      if (i.type.market == MarketSpace::Spot) spot.emplace_back(i.begin, i.end);
      else reserved_id = i.id;
    }
    std::sort(spot.begin(), spot.end());
    CHECK(spot == std::vector<std::pair<Slot, Slot>>{{0, 2}, {4, 6}});
    bool on_reserved = false;
    for (const auto& s : alloc.assignment) {
      if (s.app_id == "p" && s.instance_id == reserved_id) {
        on_reserved = true;
        CHECK(s.begin == 2);
        CHECK(s.end == 4);
      }
    }
    CHECK(on_reserved);
    CHECK(alloc.total_cost == doctest::Approx(6 + 0.5 * 4));
  }
  SUBCASE("no existing instances: one spot instance over the extent") {
    ErichInput in;
    in.preemptible = {app("p", 1, 0, 3, 7, true)};
    in.spot_types = {type("s", MarketSpace::Spot, 2, 0.5)};
    const auto alloc = erich::optimize(in);
    REQUIRE(alloc.instances.size() == 1);
    CHECK(alloc.instances[0].begin == 3);
    CHECK(alloc.instances[0].end == 7);
  }
  SUBCASE("fully hostable on existing capacity") {
    ErichInput in;
    in.non_preemptible = {app("x", 1, 0, 0, 6)};
    in.preemptible = {app("p", 1, 0, 1, 5, true)};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 1)};
    in.spot_types = {type("s", MarketSpace::Spot, 2, 0.1)};
    const auto alloc = erich::optimize(in);
    CHECK(alloc.instances.size() == 1);
    CHECK(count_market(alloc, MarketSpace::Spot) == 0);
  }
  SUBCASE("no spot type fits: on-demand fallback") {
    ErichInput in;
    in.preemptible = {app("p", 3, 0, 0, 2, true)};
    in.spot_types = {type("s", MarketSpace::Spot, 2, 0.1)};
    in.on_demand_types = {type("o", MarketSpace::OnDemand, 4, 1)};
    const auto alloc = erich::optimize(in);
    REQUIRE(alloc.instances.size() == 1);
    CHECK(alloc.instances[0].type.market == MarketSpace::OnDemand);
    in.on_demand_types.clear();
    CHECK_THROWS_AS(erich::optimize(in), InfeasibleAppError);
  }
}

TEST_CASE("optimize") {
  SUBCASE("empty input") {
    const auto alloc = erich::optimize(ErichInput{});
    CHECK(alloc.instances.empty());
    CHECK(alloc.total_cost == 0.0);
  }
  SUBCASE("single app with one feasible type is optimal") {
    ErichInput in;
    in.non_preemptible = {app("a", 3, 0.5, 2, 5)};
    in.on_demand_types = {type("small", MarketSpace::OnDemand, 3, 0.1),
                          type("big", MarketSpace::OnDemand, 4, 1.5)};
    const auto alloc = erich::optimize(in);
    CHECK(alloc.total_cost == doctest::Approx(1.5 * 3));
  }
  SUBCASE("generated case 1, seed 42, is validator-clean and deterministic") {
    const auto in = datagen::build_case(1, 42);
    const auto a = erich::optimize(in);
    CHECK(validate_allocation(a, portfolio_for(in), all_apps(in)).empty());
    const auto b = erich::optimize(in);
    CHECK(nlohmann::json(a).dump() == nlohmann::json(b).dump());
  }
  SUBCASE("every seeded case is validator-clean with spot only on preemptible apps") {
    for (int c = 1; c <= 6; ++c) {
      const auto in = datagen::build_case(c, 100 + c, datagen::desk_scale_options(c));
      const auto a = erich::optimize(in);
      CAPTURE(c);
      CHECK(validate_allocation(a, portfolio_for(in), all_apps(in)).empty());
    }
  }
  SUBCASE("reserved term shorter than the horizon") {
    ErichInput in;
    in.non_preemptible = {app("a", 1, 0, 0, 3), app("b", 1, 0, 5, 7), app("c", 1, 0, 3, 5)};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 0.2)};
    in.on_demand_types = {type("o", MarketSpace::OnDemand, 2, 1)};
    in.reserved_term = 4;
    const auto alloc = erich::optimize(in);
    CHECK(validate_allocation(alloc, portfolio_for(in), all_apps(in)).empty());
    for (const auto& i : alloc.instances) {
      if (i.type.market == MarketSpace::Reserved) {
        CHECK(i.duration() == 4);
        CHECK(i.begin % 4 == 0);
      }
    }
  }
}
