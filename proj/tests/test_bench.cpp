#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cpo/bench.hpp"
#include "cpo/datagen.hpp"
#include "cpo/erich.hpp"

using namespace cpo;
namespace fs = std::filesystem;

namespace {

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

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cpo_bench_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("utilization") {
  std::vector<Application> apps{{"a", "a", 2.0, 0.0, false, 0, 2}};
  Allocation alloc;
  alloc.instances.push_back({"i", type("t", MarketSpace::OnDemand, 4, 1), 0, 2});
  alloc.assignment.push_back({"a", "i", 0, 2});
  CHECK(bench::utilization(alloc, apps) == doctest::Approx(0.5));
  apps[0].mu = 4.0;
  CHECK(bench::utilization(alloc, apps) == doctest::Approx(1.0));
  CHECK(bench::utilization(Allocation{}, apps) == 0.0);

  SUBCASE("stage-4 example allocation") {
    ErichInput in;
    in.non_preemptible = {{"x", "x", 2, 0, false, 0, 2}, {"y", "y", 2, 0, false, 4, 6}};
    in.preemptible = {{"p", "p", 1, 0, true, 0, 6}};
    in.reserved_types = {type("r", MarketSpace::Reserved, 2, 1)};
    in.on_demand_types = {type("o", MarketSpace::OnDemand, 2, 100)};
    in.spot_types = {type("s", MarketSpace::Spot, 2, 0.5)};
    const auto a = erich::optimize(in);
    std::vector<Application> all{in.non_preemptible[0], in.non_preemptible[1], in.preemptible[0]};
    // demand 2*2 + 2*2 + 1*6 = 14 over capacity 2*6 + 2*2 + 2*2 = 20
    CHECK(bench::utilization(a, all) == doctest::Approx(0.7));
  }
  SUBCASE("at most 1 for validator-clean allocations with q_min >= 0.5") {
    for (int c = 1; c <= 4; ++c) {
      const auto in = datagen::build_case(c, 5);
      auto apps_all = in.non_preemptible;
      apps_all.insert(apps_all.end(), in.preemptible.begin(), in.preemptible.end());
      const double u = bench::utilization(erich::optimize(in), apps_all);
      CHECK(u > 0.0);
      CHECK(u <= 1.0);
    }
  }
}

TEST_CASE("run_case") {
  SUBCASE("one repetition, ERICH only") {
    bench::RunOptions opt;
    opt.algorithms = {Algorithm::ERICH};
    opt.repetitions = 1;
    const auto r = bench::run_case(1, opt);
    CHECK(r.case_label == "case_1");
    REQUIRE(r.results.size() == 1);
    CHECK(r.results[0].wall_ms.size() == 1);
    CHECK(r.ga_trace.empty());
  }
  SUBCASE("both algorithms, repetitions recorded") {
    bench::RunOptions opt;
    opt.repetitions = 3;
    opt.seed = 7;
    const auto r = bench::run_case(1, opt);
    REQUIRE(r.results.size() == 2);
    for (const auto& a : r.results) {
      CHECK(!a.error);
      CHECK(a.wall_ms.size() == 3);
      CHECK(a.costs.size() == 3);
      for (double u : a.utilizations) {
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
      }
      CHECK(a.market_utilization.size() >= 1);
    }
    const auto* e = r.find(Algorithm::ERICH);
    REQUIRE(e);
    CHECK(e->costs[0] == e->costs[1]);
    CHECK(e->costs[1] == e->costs[2]);
    CHECK(!r.ga_trace.empty());
    CHECK(r.find(Algorithm::GEORG)->total_cost == r.find(Algorithm::GEORG)->costs.back());
  }
  SUBCASE("invalid repetitions") {
    bench::RunOptions opt;
    opt.repetitions = 0;
    CHECK_THROWS_AS(bench::run_case(1, opt), ValidationError);
  }
}

TEST_CASE("median wall time") {
  bench::AlgorithmResult r;
  CHECK(r.median_wall_ms() == 0.0);
  r.wall_ms = {5, 1, 3};
  CHECK(r.median_wall_ms() == 3.0);
  r.wall_ms = {4, 1, 3, 2};
  CHECK(r.median_wall_ms() == 2.5);
}

TEST_CASE("export") {
  TempDir dir;
  SUBCASE("empty report: header only") {
    bench::export_csv({}, dir.path);
    CHECK(lines(dir.path / "bench.csv") ==
          std::vector<std::string>{"case,algorithm,rep,wall_ms,cost,utilization"});
  }
  SUBCASE("single entry: two lines") {
    bench::BenchReport r;
    r.case_label = "case_3";
    r.repetitions = 1;
    bench::AlgorithmResult a;
    a.algorithm = Algorithm::ERICH;
    a.wall_ms = {1.5};
    a.costs = {10};
    a.utilizations = {0.5};
    r.results.push_back(a);
    r.ga_trace = {{0, 10, 12}, {1, 9, 11}};
    const std::vector<bench::BenchReport> reports{r};
    bench::export_csv(reports, dir.path, "out");
    const auto rows = lines(dir.path / "out.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1] == "case_3,ERICH,0,1.5,10,0.5");
    const auto trace = lines(dir.path / "case_3_trace.csv");
    CHECK(trace == std::vector<std::string>{"generation,best_cost,mean_cost", "0,10,12", "1,9,11"});
  }
  SUBCASE("json round-trip") {
    bench::RunOptions opt;
    opt.repetitions = 2;
    std::vector<bench::BenchReport> reports{bench::run_case(1, opt)};
    reports[0].results[1].error = "boom";
    bench::export_json(reports, dir.path / "r.json");
    CHECK(bench::import_json(dir.path / "r.json") == reports);
  }
  SUBCASE("I/O errors name the path") {
    const auto missing = dir.path / "no" / "such" / "dir";
    try {
      bench::export_csv({}, missing);
      FAIL("expected an error");
    } catch (const std::system_error& e) {
      CHECK(std::string(e.what()).find(missing.string()) != std::string::npos);
    }
    CHECK_THROWS_AS(bench::import_json(missing / "x.json"), std::system_error);
  }
}
