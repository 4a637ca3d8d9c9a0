#include "cpo/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cpo/datagen.hpp"
#include "cpo/erich.hpp"

namespace cpo::bench {

double utilization(const Allocation& alloc, std::span<const Application> apps) {
  return allocation_utilization(alloc, apps);
}

double AlgorithmResult::median_wall_ms() const {
  if (wall_ms.empty()) return 0.0;
  std::vector<double> v = wall_ms;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const AlgorithmResult* BenchReport::find(Algorithm a) const {
  for (const auto& r : results) {
    if (r.algorithm == a) return &r;
  }
  return nullptr;
}

BenchReport run_case(int case_id, const RunOptions& options) {
  if (options.repetitions < 1) throw ValidationError("repetitions", "repetitions must be >= 1");
  auto case_opts = datagen::desk_scale_options(case_id);
  if (options.period_scale) case_opts.period_scale = *options.period_scale;
  const ErichInput input = datagen::build_case(case_id, options.seed, case_opts);
  const auto problem = std::make_shared<const Problem>(input);

  BenchReport report;
  report.case_label = "case_" + std::to_string(case_id);
  report.repetitions = options.repetitions;

  for (Algorithm algorithm : options.algorithms) {
    AlgorithmResult result;
    result.algorithm = algorithm;
    for (int rep = 0; rep < options.repetitions; ++rep) {
      Allocation alloc;
      std::vector<georg::GenerationStats> trace;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (algorithm == Algorithm::ERICH) {
          alloc = erich::optimize(problem);
        } else {
          georg::GaConfig cfg = options.ga;
          cfg.seed = options.seed * 1000003ULL + static_cast<std::uint64_t>(rep);
          auto run = georg::run(problem, cfg);
          alloc = std::move(run.allocation);
          trace = std::move(run.trace);
        }
      } catch (const std::exception& e) {
        result.error = e.what();
        break;
      }
      const auto t1 = std::chrono::steady_clock::now();
      result.wall_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      result.costs.push_back(alloc.total_cost);
      result.utilizations.push_back(alloc.mean_utilization);
      result.total_cost = alloc.total_cost;
      result.mean_utilization = alloc.mean_utilization;
      result.market_utilization.clear();
      for (const auto& [m, s] : alloc.per_market_stats) result.market_utilization[m] = s.utilization;
      if (algorithm == Algorithm::GEORG) report.ga_trace = std::move(trace);
    }
    report.results.push_back(std::move(result));
  }
  return report;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::system_error(errno, std::generic_category(),
                            "cannot open '" + path.string() + "' for writing");
  }
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) {
    throw std::system_error(errno, std::generic_category(),
                            "failed writing '" + path.string() + "'");
  }
}

std::string number(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

}  // namespace

void export_csv(std::span<const BenchReport> reports, const std::filesystem::path& dir,
                const std::string& stem) {
  const auto path = dir / (stem + ".csv");
  auto out = open_for_write(path);
  out << "case,algorithm,rep,wall_ms,cost,utilization\n";
  for (const auto& report : reports) {
    for (const auto& r : report.results) {
      for (std::size_t rep = 0; rep < r.wall_ms.size(); ++rep) {
        out << report.case_label << ',' << to_string(r.algorithm) << ',' << rep << ','
            << number(r.wall_ms[rep]) << ',' << number(r.costs[rep]) << ','
            << number(r.utilizations[rep]) << '\n';
      }
    }
  }
  check_written(out, path);

  for (const auto& report : reports) {
    if (report.ga_trace.empty()) continue;
    const auto trace_path = dir / (report.case_label + "_trace.csv");
    auto trace = open_for_write(trace_path);
    trace << "generation,best_cost,mean_cost\n";
    for (const auto& g : report.ga_trace) {
      trace << g.generation << ',' << number(g.best_cost) << ',' << number(g.mean_cost) << '\n';
    }
    check_written(trace, trace_path);
  }
}

void to_json(nlohmann::json& j, const BenchReport& r) {
  auto results = nlohmann::json::array();
  for (const auto& a : r.results) {
    nlohmann::json markets = nlohmann::json::object();
    for (const auto& [m, u] : a.market_utilization) markets[std::string(to_string(m))] = u;
    nlohmann::json entry = {{"algorithm", to_string(a.algorithm)},
                            {"wall_ms", a.wall_ms},
                            {"costs", a.costs},
                            {"utilizations", a.utilizations},
                            {"total_cost", a.total_cost},
                            {"mean_utilization", a.mean_utilization},
                            {"market_utilization", markets}};
    entry["error"] = a.error ? nlohmann::json(*a.error) : nlohmann::json(nullptr);
    results.push_back(std::move(entry));
  }
  auto trace = nlohmann::json::array();
  for (const auto& g : r.ga_trace) {
    trace.push_back({{"generation", g.generation},
                     {"best_cost", g.best_cost},
                     {"mean_cost", g.mean_cost}});
  }
  j = {{"case", r.case_label},
       {"repetitions", r.repetitions},
       {"results", results},
       {"ga_trace", trace}};
}

void from_json(const nlohmann::json& j, BenchReport& r) {
  r.case_label = j.at("case").get<std::string>();
  r.repetitions = j.at("repetitions").get<int>();
  r.results.clear();
  for (const auto& e : j.at("results")) {
    AlgorithmResult a;
    a.algorithm = parse_algorithm(e.at("algorithm").get<std::string>());
    a.wall_ms = e.at("wall_ms").get<std::vector<double>>();
    a.costs = e.at("costs").get<std::vector<double>>();
    a.utilizations = e.at("utilizations").get<std::vector<double>>();
    a.total_cost = e.at("total_cost").get<double>();
    a.mean_utilization = e.at("mean_utilization").get<double>();
    for (const auto& [k, v] : e.at("market_utilization").items())
      a.market_utilization[parse_market(k)] = v.get<double>();
    if (!e.at("error").is_null()) a.error = e.at("error").get<std::string>();
    r.results.push_back(std::move(a));
  }
  r.ga_trace.clear();
  for (const auto& g : j.at("ga_trace")) {
    r.ga_trace.push_back({g.at("generation").get<int>(), g.at("best_cost").get<double>(),
                          g.at("mean_cost").get<double>()});
  }
}

void export_json(std::span<const BenchReport> reports, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) j.push_back(r);
  out << j.dump(2) << '\n';
  check_written(out, path);
}

std::vector<BenchReport> import_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::system_error(errno, std::generic_category(),
                            "cannot open '" + path.string() + "' for reading");
  }
  return nlohmann::json::parse(in).get<std::vector<BenchReport>>();
}

}  // namespace cpo::bench
