#include "cpo/georg.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace cpo::georg {

__extension__ using u128 = unsigned __int128;

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  return static_cast<std::size_t>((static_cast<u128>(rng()) * n) >> 64);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void GaConfig::validate() const {
  if (population_size < 2) throw ValidationError("population_size", "population_size must be >= 2");
  if (max_generations < 1) throw ValidationError("max_generations", "max_generations must be >= 1");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
    throw ValidationError("mutation_rate", "mutation_rate must be in [0, 1]");
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0))
    throw ValidationError("elite_fraction", "elite_fraction must be in (0, 1]");
  if (stagnation_window < 1)
    throw ValidationError("stagnation_window", "stagnation_window must be >= 1");
  if (!(convergence_epsilon >= 0.0))
    throw ValidationError("convergence_epsilon", "convergence_epsilon must be >= 0");
  if (!(removal_probability >= 0.0 && removal_probability <= 1.0))
    throw ValidationError("removal_probability", "removal_probability must be in [0, 1]");
}

void to_json(nlohmann::json& j, const GaConfig& c) {
  j = {{"population_size", c.population_size},
       {"max_generations", c.max_generations},
       {"mutation_rate", c.mutation_rate},
       {"elite_fraction", c.elite_fraction},
       {"stagnation_window", c.stagnation_window},
       {"convergence_epsilon", c.convergence_epsilon},
       {"removal_probability", c.removal_probability},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GaConfig& c) {
  c.population_size = j.value("population_size", c.population_size);
  c.max_generations = j.value("max_generations", c.max_generations);
  c.mutation_rate = j.value("mutation_rate", c.mutation_rate);
  c.elite_fraction = j.value("elite_fraction", c.elite_fraction);
  c.stagnation_window = j.value("stagnation_window", c.stagnation_window);
  c.convergence_epsilon = j.value("convergence_epsilon", c.convergence_epsilon);
  c.removal_probability = j.value("removal_probability", c.removal_probability);
  c.seed = j.value("seed", c.seed);
}

// ---------------------------------------------------------------------------
// Chromosome

Chromosome::Chromosome(Packing packing) : packing_(std::move(packing)) {}

std::vector<std::vector<HostIndex>> Chromosome::loci() const {
  Slot span = problem().horizon();
  for (const auto& h : packing_.hosts()) {
    if (h.alive) span = std::max(span, h.end);
  }
  std::vector<std::vector<HostIndex>> out(static_cast<std::size_t>(span));
  for (HostIndex i = 0; i < static_cast<HostIndex>(packing_.hosts().size()); ++i) {
    const Host& h = packing_.host(i);
    if (!h.alive) continue;
    for (Slot t = h.begin; t < h.end; ++t) out[static_cast<std::size_t>(t)].push_back(i);
  }
  return out;
}

bool Chromosome::repaired() const {
  const auto n = static_cast<AppIndex>(problem().apps().size());
  for (AppIndex a = 0; a < n; ++a) {
    if (!packing_.covered(a)) return false;
  }
  return true;
}

Allocation Chromosome::decode() const { return packing_.to_allocation(Algorithm::GEORG); }

double fitness(const Chromosome& c) {
  if (!c.repaired()) throw std::logic_error("fitness: chromosome is not repaired");
  double total = 0.0;
  for (const auto& h : c.packing().hosts()) {
    if (h.alive && !h.empty()) total += h.cost();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Placement helpers

namespace {

[[noreturn]] void throw_infeasible(const Application& app) {
  throw InfeasibleAppError(app.id, "no admissible instance type can host application '" +
                                       app.name + "' on its own");
}

HostIndex first_fit_whole(const Packing& p, AppIndex a) {
  const Application& app = p.problem().app(a);
  for (HostIndex h = 0; h < static_cast<HostIndex>(p.hosts().size()); ++h) {
    if (p.can_place(h, a, app.start, app.finish)) return h;
  }
  return kNoHost;
}

void first_fit_slots(Packing& p, AppIndex a, Slot t0, Slot t1) {
  for (Slot t = t0; t < t1; ++t) {
    for (HostIndex h = 0; h < static_cast<HostIndex>(p.hosts().size()); ++h) {
      if (p.can_place(h, a, t, t + 1)) {
        p.place(h, a, t, t + 1);
        break;
      }
    }
  }
}

void open_random(Packing& p, AppIndex a, Slot t0, Slot t1, Rng& rng) {
  const auto types = p.problem().feasible_types(a, t0, t1);
  if (types.empty()) throw_infeasible(p.problem().app(a));
  const InstanceType& type = *types[uniform_index(rng, types.size())];
  const auto [b, e] = *p.problem().envelope_for(type, t0, t1);
  p.place(p.provision(type, b, e), a, t0, t1);
}

// Admissible type with the lowest envelope cost per unit of capacity.
void open_cheapest(Packing& p, AppIndex a, Slot t0, Slot t1) {
  const auto types = p.problem().feasible_types(a, t0, t1);
  if (types.empty()) throw_infeasible(p.problem().app(a));
  const InstanceType* best = nullptr;
  double best_score = 0.0;
  for (const auto* type : types) {
    const auto [b, e] = *p.problem().envelope_for(*type, t0, t1);
    const double score = type->price_per_slot * (e - b) / type->capacity;
    if (!best || score < best_score) {
      best = type;
      best_score = score;
    }
  }
  const auto [b, e] = *p.problem().envelope_for(*best, t0, t1);
  p.place(p.provision(*best, b, e), a, t0, t1);
}

void place_greedy(Packing& p, AppIndex a) {
  const Application& app = p.problem().app(a);
  if (!app.preemptible) {
    const HostIndex h = first_fit_whole(p, a);
    if (h != kNoHost) {
      p.place(h, a, app.start, app.finish);
    } else {
      open_cheapest(p, a, app.start, app.finish);
    }
    return;
  }
  first_fit_slots(p, a, app.start, app.finish);
  for (const auto& [g0, g1] : p.gaps(a)) open_cheapest(p, a, g0, g1);
}

void place_random(Packing& p, AppIndex a, Rng& rng) {
  const Application& app = p.problem().app(a);
  std::vector<HostIndex> candidates;
  for (HostIndex h = 0; h < static_cast<HostIndex>(p.hosts().size()); ++h) {
    if (p.can_place(h, a, app.start, app.finish)) candidates.push_back(h);
  }
  const std::size_t pick = uniform_index(rng, candidates.size() + 1);
  if (pick < candidates.size()) {
    p.place(candidates[pick], a, app.start, app.finish);
  } else {
    open_random(p, a, app.start, app.finish, rng);
  }
}

std::vector<AppIndex> uncovered_apps(const Packing& p) {
  std::vector<AppIndex> out;
  const auto n = static_cast<AppIndex>(p.problem().apps().size());
  for (AppIndex a = 0; a < n; ++a) {
    if (!p.covered(a)) out.push_back(a);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Operators

std::vector<Chromosome> init_population(const ProblemPtr& problem, const GaConfig& cfg,
                                        Rng& rng) {
  cfg.validate();
  std::vector<Chromosome> population;
  population.reserve(static_cast<std::size_t>(cfg.population_size));
  const auto n = static_cast<AppIndex>(problem->apps().size());
  for (int k = 0; k < cfg.population_size; ++k) {
    Packing p(problem);
    for (AppIndex a = 0; a < n; ++a) {
      if (rng() & 1U) {
        place_greedy(p, a);
      } else {
        place_random(p, a, rng);
      }
    }
    p.compact();
    population.emplace_back(std::move(p));
  }
  return population;
}

std::vector<Chromosome> init_population(const ErichInput& input, const GaConfig& cfg) {
  Rng rng(cfg.seed);
  return init_population(std::make_shared<const Problem>(input), cfg, rng);
}

std::vector<double> selection_probabilities(std::span<const double> costs) {
  std::vector<double> w(costs.size(), 0.0);
  const bool all_zero = std::all_of(costs.begin(), costs.end(), [](double c) { return c <= 0.0; });
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = all_zero ? 1.0 : (costs[i] > 0.0 ? 1.0 / costs[i] : 0.0);
  }
  if (!all_zero && std::any_of(costs.begin(), costs.end(), [](double c) { return c <= 0.0; })) {
    // A free individual dominates the wheel outright.
    for (std::size_t i = 0; i < costs.size(); ++i) w[i] = costs[i] <= 0.0 ? 1.0 : 0.0;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return w;
}

namespace {

std::size_t spin(std::span<const double> probs, Rng& rng, std::size_t exclude) {
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i != exclude) total += probs[i];
  }
  if (total <= 0.0) {
    // Only zero-weight alternatives are left; fall back to uniform among them.
    std::size_t pick = uniform_index(rng, probs.size() - (exclude < probs.size() ? 1 : 0));
    if (exclude < probs.size() && pick >= exclude) ++pick;
    return pick;
  }
  const double r = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i == exclude) continue;
    acc += probs[i];
    last = i;
    if (r < acc) return i;
  }
  return last;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> select_parents(std::span<const double> costs,
                                                                std::size_t count, Rng& rng) {
  if (count % 2 != 0) throw std::invalid_argument("select_parents: count must be even");
  if (costs.size() < 2)
    throw std::invalid_argument("select_parents: need at least two distinct individuals");
  const auto probs = selection_probabilities(costs);
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < count / 2; ++k) {
    const std::size_t first = spin(probs, rng, kNone);
    const std::size_t second = spin(probs, rng, first);
    pairs.emplace_back(first, second);
  }
  return pairs;
}

void insertion_heuristic(Chromosome& c, std::span<const AppIndex> orphans, Rng& rng) {
  Packing& p = c.packing();
  std::vector<AppIndex> order(orphans.begin(), orphans.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  for (AppIndex a : order) {
    const Application& app = p.problem().app(a);
    if (!app.preemptible) {
      if (p.covered(a)) continue;
      p.unplace(a);
      const HostIndex h = first_fit_whole(p, a);
      if (h != kNoHost) {
        p.place(h, a, app.start, app.finish);
      } else {
        open_random(p, a, app.start, app.finish, rng);
      }
      continue;
    }
    for (const auto& [g0, g1] : p.gaps(a)) first_fit_slots(p, a, g0, g1);
    for (const auto& [g0, g1] : p.gaps(a)) open_random(p, a, g0, g1, rng);
  }
  p.compact();
}

Chromosome crossover(const Chromosome& first, const Chromosome& second, Rng& rng) {
  const Packing* parents[2] = {&first.packing(), &second.packing()};
  const Problem& problem = first.problem();
  Packing child(first.packing().problem_ptr());

  std::vector<HostIndex> ranked[2];
  std::vector<HostIndex> adopted[2];
  std::vector<char> rejected[2];
  Slot lo = INT_MAX, hi = 0;
  for (int p = 0; p < 2; ++p) {
    const auto& hosts = parents[p]->hosts();
    std::vector<double> util(hosts.size());
    for (HostIndex h = 0; h < static_cast<HostIndex>(hosts.size()); ++h) {
      if (!hosts[static_cast<std::size_t>(h)].alive) continue;
      util[static_cast<std::size_t>(h)] = hosts[static_cast<std::size_t>(h)].average_utilization();
      ranked[p].push_back(h);
      lo = std::min(lo, hosts[static_cast<std::size_t>(h)].begin);
      hi = std::max(hi, hosts[static_cast<std::size_t>(h)].end);
    }
    std::stable_sort(ranked[p].begin(), ranked[p].end(), [&](HostIndex x, HostIndex y) {
      const Host& hx = hosts[static_cast<std::size_t>(x)];
      const Host& hy = hosts[static_cast<std::size_t>(y)];
      const double ux = util[static_cast<std::size_t>(x)], uy = util[static_cast<std::size_t>(y)];
      if (ux != uy) return ux > uy;
      if (hx.type->price_per_slot != hy.type->price_per_slot)
        return hx.type->price_per_slot < hy.type->price_per_slot;
      return hx.serial < hy.serial;
    });
    adopted[p].assign(hosts.size(), kNoHost);
    rejected[p].assign(hosts.size(), 0);
  }

  std::vector<HostIndex> active[2];
  for (Slot t = lo; t < hi; ++t) {
    for (int p = 0; p < 2; ++p) {
      active[p].clear();
      for (HostIndex h : ranked[p]) {
        if (!rejected[p][static_cast<std::size_t>(h)] && parents[p]->host(h).covers(t))
          active[p].push_back(h);
      }
    }
    // Zip-merge: first of each parent, then the seconds, and so on.
    const std::size_t rounds = std::max(active[0].size(), active[1].size());
    for (std::size_t r = 0; r < rounds; ++r) {
      for (int p = 0; p < 2; ++p) {
        if (r >= active[p].size()) continue;
        const HostIndex h = active[p][r];
        const Host& src = parents[p]->host(h);
        const auto& members = src.members_at(t);
        HostIndex& mine = adopted[p][static_cast<std::size_t>(h)];

        bool conflict = false;
        for (AppIndex m : members) {
          if (child.host_at(m, t) != kNoHost) {
            conflict = true;
          } else if (const Application& app = problem.app(m);
                     !app.preemptible && t > app.start &&
                     (mine == kNoHost || child.host_at(m, t - 1) != mine)) {
            conflict = true;  // would split a pinned application
          }
          if (conflict) break;
        }
        if (conflict) {
          rejected[p][static_cast<std::size_t>(h)] = 1;
          if (mine != kNoHost) {
            // Pruned from here on; pinned residents that outlive this slot lose it.
            const Host& kept = child.host(mine);
            std::vector<AppIndex> cut;
            if (kept.covers(t - 1)) {
              for (AppIndex m : kept.members_at(t - 1)) {
                if (!problem.app(m).preemptible && problem.app(m).finish > t) cut.push_back(m);
              }
            }
            for (AppIndex m : cut) child.unplace(m, mine);
          }
          continue;
        }
        if (members.empty()) continue;
        if (mine == kNoHost) {
          mine = src.fixed ? child.provision(*src.type, src.begin, src.end)
                           : child.provision(*src.type, t, t + 1);
        }
        for (AppIndex m : members) child.place(mine, m, t, t + 1);
      }
    }
  }

  child.compact();
  Chromosome out(std::move(child));
  const auto orphans = uncovered_apps(out.packing());
  insertion_heuristic(out, orphans, rng);
  return out;
}

std::optional<std::pair<AppIndex, AppIndex>> dominance_swap(Packing& p, AppIndex a) {
  const Problem& problem = p.problem();
  const Application& app = problem.app(a);
  const double var_a = app.sigma * app.sigma;
  for (HostIndex h = 0; h < static_cast<HostIndex>(p.hosts().size()); ++h) {
    const Host& host = p.host(h);
    if (!host.alive || app.start < host.begin || app.finish > host.end) continue;
    if (app.preemptible < host.type->spot_only) continue;

    // Residents with the slot range they occupy on this host.
    std::vector<std::pair<AppIndex, std::pair<Slot, Slot>>> residents;
    for (Slot t = host.begin; t < host.end; ++t) {
      for (AppIndex m : host.members_at(t)) {
        auto it = std::find_if(residents.begin(), residents.end(),
                               [m](const auto& r) { return r.first == m; });
        if (it == residents.end()) {
          residents.push_back({m, {t, t + 1}});
        } else {
          it->second.second = t + 1;
        }
      }
    }
    std::sort(residents.begin(), residents.end());

    for (std::size_t i = 0; i < residents.size(); ++i) {
      for (std::size_t j = i + 1; j < residents.size(); ++j) {
        const auto& [p1, r1] = residents[i];
        const auto& [p2, r2] = residents[j];
        // Dominance: the extent of `a` covers the pair's slots on this host and
        // P(X_a > X_p1 + X_p2) > 0.5, i.e. mu_a > mu_p1 + mu_p2 for normals.
        if (r1.first < app.start || r1.second > app.finish) continue;
        if (r2.first < app.start || r2.second > app.finish) continue;
        const Application& a1 = problem.app(p1);
        const Application& a2 = problem.app(p2);
        if (!(app.mu > a1.mu + a2.mu)) continue;
        bool ok = true;
        for (Slot t = app.start; t < app.finish && ok; ++t) {
          SlotLoad l = host.load[static_cast<std::size_t>(t - host.begin)];
          if (p.host_at(p1, t) == h) {
            l.mu -= a1.mu;
            l.var -= a1.sigma * a1.sigma;
          }
          if (p.host_at(p2, t) == h) {
            l.mu -= a2.mu;
            l.var -= a2.sigma * a2.sigma;
          }
          ok = problem.qos().admits(l.mu + app.mu, std::max(0.0, l.var + var_a),
                                    host.type->capacity);
        }
        if (!ok) continue;
        const AppIndex q1 = p1, q2 = p2;
        p.unplace(q1, h);
        p.unplace(q2, h);
        p.place(h, a, app.start, app.finish);
        return std::pair{q1, q2};
      }
    }
  }
  return std::nullopt;
}

Chromosome mutate(Chromosome c, Rng& rng, double removal_probability) {
  Packing& p = c.packing();
  std::vector<HostIndex> doomed;
  for (HostIndex h = 0; h < static_cast<HostIndex>(p.hosts().size()); ++h) {
    if (p.host(h).alive && uniform01(rng) < removal_probability) doomed.push_back(h);
  }
  if (doomed.empty() && p.live_hosts() > 0) {
    std::vector<HostIndex> live;
    for (HostIndex h = 0; h < static_cast<HostIndex>(p.hosts().size()); ++h) {
      if (p.host(h).alive) live.push_back(h);
    }
    doomed.push_back(live[uniform_index(rng, live.size())]);
  }
  std::vector<AppIndex> affected;
  for (HostIndex h : doomed) {
    auto lost = p.remove_host(h);
    affected.insert(affected.end(), lost.begin(), lost.end());
  }
  std::sort(affected.begin(), affected.end());
  affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

  std::vector<AppIndex> orphans;
  for (AppIndex a : affected) {
    if (!p.unassigned(a)) {
      orphans.push_back(a);
      continue;
    }
    if (auto displaced = dominance_swap(p, a)) {
      orphans.push_back(displaced->first);
      orphans.push_back(displaced->second);
    } else {
      orphans.push_back(a);
    }
  }
  p.compact();
  insertion_heuristic(c, orphans, rng);
  return c;
}

std::vector<Chromosome> merge_survivors(std::vector<Chromosome> population,
                                        std::vector<Chromosome> offspring, const GaConfig& cfg) {
  auto by_cost = [](std::vector<Chromosome>& v) {
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t i = 0; i < v.size(); ++i) keyed.emplace_back(fitness(v[i]), i);
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    return keyed;
  };

  const auto elite_count = static_cast<std::size_t>(
      std::ceil(cfg.elite_fraction * static_cast<double>(population.size())));
  std::vector<Chromosome> pool;
  pool.reserve(population.size() + offspring.size());
  for (const auto& [cost, i] : by_cost(population)) {
    if (pool.size() >= elite_count) break;
    pool.push_back(std::move(population[i]));
  }
  for (auto& c : offspring) pool.push_back(std::move(c));

  std::vector<Chromosome> next;
  const auto keep = static_cast<std::size_t>(cfg.population_size);
  for (const auto& [cost, i] : by_cost(pool)) {
    if (next.size() >= keep) break;
    next.push_back(std::move(pool[i]));
  }
  return next;
}

namespace {

GenerationStats stats_of(int generation, std::span<const double> costs) {
  GenerationStats s{generation, costs.empty() ? 0.0 : costs[0], 0.0};
  for (double c : costs) {
    s.best_cost = std::min(s.best_cost, c);
    s.mean_cost += c;
  }
  if (!costs.empty()) s.mean_cost /= static_cast<double>(costs.size());
  return s;
}

bool converged(std::span<const double> costs, double epsilon) {
  const auto [mn, mx] = std::minmax_element(costs.begin(), costs.end());
  if (*mn <= 0.0) return *mx <= 0.0;
  return (*mx - *mn) / *mn < epsilon;
}

std::vector<double> costs_of(const std::vector<Chromosome>& pop) {
  std::vector<double> out;
  out.reserve(pop.size());
  for (const auto& c : pop) out.push_back(fitness(c));
  return out;
}

}  // namespace

RunResult run(const ProblemPtr& problem, const GaConfig& cfg, const ProgressSink& sink) {
  cfg.validate();
  Rng rng(cfg.seed);
  RunResult result;
  auto population = init_population(problem, cfg, rng);
  auto costs = costs_of(population);

  auto record = [&](int generation) {
    result.trace.push_back(stats_of(generation, costs));
    if (sink) sink(result.trace.back());
  };
  record(0);

  if (!converged(costs, cfg.convergence_epsilon)) {
    int stagnant = 0;
    const std::size_t draws = static_cast<std::size_t>(cfg.population_size + cfg.population_size % 2);
    for (int g = 1; g <= cfg.max_generations; ++g) {
      const auto pairs = select_parents(costs, draws, rng);
      std::vector<Chromosome> offspring;
      offspring.reserve(draws);
      for (const auto& [i, j] : pairs) {
        for (const auto& [x, y] : {std::pair{i, j}, std::pair{j, i}}) {
          Chromosome child = crossover(population[x], population[y], rng);
          if (uniform01(rng) < cfg.mutation_rate)
            child = mutate(std::move(child), rng, cfg.removal_probability);
          offspring.push_back(std::move(child));
        }
      }
      offspring.resize(std::min(offspring.size(), static_cast<std::size_t>(cfg.population_size)),
                       Chromosome(Packing(problem)));
      const double previous_best = result.trace.back().best_cost;
      population = merge_survivors(std::move(population), std::move(offspring), cfg);
      costs = costs_of(population);
      record(g);
      stagnant = result.trace.back().best_cost < previous_best ? 0 : stagnant + 1;
      if (stagnant >= cfg.stagnation_window) break;
      if (converged(costs, cfg.convergence_epsilon)) break;
    }
  }

  nlohmann::json params = cfg;
  params["q_min"] = problem->q_min();
  params["horizon"] = problem->horizon();
  params["reserved_term"] = problem->reserved_term();
  const auto best = static_cast<std::size_t>(
      std::min_element(costs.begin(), costs.end()) - costs.begin());
  result.allocation = population[best].packing().to_allocation(Algorithm::GEORG, params);
  result.population = std::move(population);
  return result;
}

RunResult run(const ErichInput& input, const GaConfig& cfg, const ProgressSink& sink) {
  return run(std::make_shared<const Problem>(input), cfg, sink);
}

}  // namespace cpo::georg
