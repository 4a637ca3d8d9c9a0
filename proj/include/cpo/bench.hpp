#ifndef CPO_BENCH_HPP
#define CPO_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpo/domain.hpp"
#include "cpo/georg.hpp"

namespace cpo::bench {

// Expected assigned demand over provisioned capacity-slots.
double utilization(const Allocation& alloc, std::span<const Application> apps);

struct AlgorithmResult {
  Algorithm algorithm = Algorithm::ERICH;
  std::vector<double> wall_ms;  // one entry per repetition
  // Cost and utilization of each repetition's allocation.
  std::vector<double> costs;
  std::vector<double> utilizations;
  double total_cost = 0.0;        // final repetition
  double mean_utilization = 0.0;  // final repetition
  std::map<MarketSpace, double> market_utilization;
  std::optional<std::string> error;  // set when the optimizer failed

  double median_wall_ms() const;
  friend bool operator==(const AlgorithmResult&, const AlgorithmResult&) = default;
};

struct BenchReport {
  std::string case_label;
  int repetitions = 0;
  std::vector<AlgorithmResult> results;
  std::vector<georg::GenerationStats> ga_trace;  // from the final GEORG repetition

  const AlgorithmResult* find(Algorithm a) const;
  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

struct RunOptions {
  std::vector<Algorithm> algorithms{Algorithm::ERICH, Algorithm::GEORG};
  int repetitions = 10;
  std::uint64_t seed = 0;
  georg::GaConfig ga;  // seed is overridden per repetition
  std::optional<double> period_scale;  // default: desk scale (0.1 for cases 5-6)
};

// Generates the case input once and times each algorithm on it. GEORG repetition r
// runs with seed derived from (seed, r).
BenchReport run_case(int case_id, const RunOptions& options);

// Writes `<dir>/<stem>.csv` (case,algorithm,rep,wall_ms,cost,utilization) and, when a
// GA trace exists, `<dir>/case_<id>_trace.csv` (generation,best_cost,mean_cost).
void export_csv(std::span<const BenchReport> reports, const std::filesystem::path& dir,
                const std::string& stem = "bench");
void export_json(std::span<const BenchReport> reports, const std::filesystem::path& path);
std::vector<BenchReport> import_json(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const BenchReport& r);
void from_json(const nlohmann::json& j, BenchReport& r);

}  // namespace cpo::bench

#endif  // CPO_BENCH_HPP
