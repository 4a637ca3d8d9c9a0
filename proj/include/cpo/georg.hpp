#ifndef CPO_GEORG_HPP
#define CPO_GEORG_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "cpo/packing.hpp"
#include "cpo/problem.hpp"

namespace cpo::georg {

using Rng = std::mt19937_64;

// Platform-independent draws (the std distributions are implementation-defined).
std::size_t uniform_index(Rng& rng, std::size_t n);
double uniform01(Rng& rng);

struct GaConfig {
  int population_size = 20;
  int max_generations = 10;
  double mutation_rate = 0.2;
  // Share of the current population, best first, allowed to compete with the
  // offspring for survival. 1.0 is a plain (mu + lambda) merge.
  double elite_fraction = 1.0;
  int stagnation_window = 5;
  double convergence_epsilon = 0.01;
  // Per-instance removal probability inside the mutation operator.
  double removal_probability = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const GaConfig& c);
void from_json(const nlohmann::json& j, GaConfig& c);  // absent fields keep defaults

// Temporal group encoding: one locus per slot, each holding the instances running at
// that slot together with the applications they carry there. Storage is the
// instance registry of a Packing; loci() materializes the per-slot view.
class Chromosome {
 public:
  explicit Chromosome(Packing packing);

  const Packing& packing() const { return packing_; }
  Packing& packing() { return packing_; }
  const Problem& problem() const { return packing_.problem(); }

  // loci()[t] lists host indices with begin <= t < end.
  std::vector<std::vector<HostIndex>> loci() const;

  // Every application covered on every slot of its extent.
  bool repaired() const;
  Allocation decode() const;

 private:
  Packing packing_;
};

// Cost of the decoded allocation. Throws std::logic_error for an unrepaired chromosome.
double fitness(const Chromosome& c);

std::vector<Chromosome> init_population(const ProblemPtr& problem, const GaConfig& cfg, Rng& rng);
std::vector<Chromosome> init_population(const ErichInput& input, const GaConfig& cfg);

// Roulette weights 1/cost normalized to sum 1; uniform when every cost is zero.
std::vector<double> selection_probabilities(std::span<const double> costs);

// Draws `count` individuals (count even) and pairs consecutive draws; the second
// member of a pair is redrawn from the others. Throws std::invalid_argument for an
// odd count or a population smaller than two.
std::vector<std::pair<std::size_t, std::size_t>> select_parents(std::span<const double> costs,
                                                                std::size_t count, Rng& rng);

// Places every orphan (fully or partly unassigned application) first-fit on the
// existing instances, opening a uniformly random admissible type where none fits.
void insertion_heuristic(Chromosome& c, std::span<const AppIndex> orphans, Rng& rng);

Chromosome crossover(const Chromosome& first, const Chromosome& second, Rng& rng);

// Tries to seat the unassigned application `a` in place of two residents of one host
// that it dominates. On success returns the displaced pair, now unassigned there.
std::optional<std::pair<AppIndex, AppIndex>> dominance_swap(Packing& p, AppIndex a);

Chromosome mutate(Chromosome c, Rng& rng, double removal_probability = 0.25);

// Concatenates, stable-sorts by cost and keeps the best population_size.
std::vector<Chromosome> merge_survivors(std::vector<Chromosome> population,
                                        std::vector<Chromosome> offspring, const GaConfig& cfg);

struct GenerationStats {
  int generation = 0;
  double best_cost = 0.0;
  double mean_cost = 0.0;
  friend bool operator==(const GenerationStats&, const GenerationStats&) = default;
};

using ProgressSink = std::function<void(const GenerationStats&)>;

struct RunResult {
  Allocation allocation;
  std::vector<GenerationStats> trace;
  std::vector<Chromosome> population;
};

RunResult run(const ProblemPtr& problem, const GaConfig& cfg, const ProgressSink& sink = {});
RunResult run(const ErichInput& input, const GaConfig& cfg, const ProgressSink& sink = {});

}  // namespace cpo::georg

#endif  // CPO_GEORG_HPP
