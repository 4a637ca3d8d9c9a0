#include "cpo/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "cpo/georg.hpp"

namespace cpo::datagen {

namespace {

using georg::Rng;
using georg::uniform01;
using georg::uniform_index;

double standard_normal(Rng& rng) {
  // Box-Muller on our own uniforms keeps streams identical across standard libraries.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Lognormal parameterized by its own mean and standard deviation.
struct MomentLognormal {
  double log_mu = 0.0;
  double log_sigma = 0.0;
  bool degenerate = false;
  double constant = 0.0;

  MomentLognormal(double mean, double std) {
    if (mean <= 0.0 || std <= 0.0) {
      degenerate = true;
      constant = std::max(mean, 0.0);
      return;
    }
    log_sigma = std::sqrt(std::log1p((std * std) / (mean * mean)));
    log_mu = std::log(mean) - 0.5 * log_sigma * log_sigma;
  }

  double at(double z) const { return degenerate ? constant : std::exp(log_mu + log_sigma * z); }
};

constexpr double kDemandFloor = 0.1;
constexpr double kPriceFloor = 0.01;
constexpr double kCapacityFloor = 0.5;
constexpr double kPriceCapacityCorrelation = 0.8;
constexpr int kOrderingRetries = 32;

std::string padded(const char* prefix, int k, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, k);
  return buf;
}

}  // namespace

void AppSetProfile::validate() const {
  if (n_non_preemptible < 0 || n_preemptible < 0)
    throw ValidationError("count", "application counts must be >= 0");
  for (double v : {demand_mean, demand_std, deviation_mean, deviation_std, alloc_periods_mean,
                   alloc_periods_std}) {
    if (!(v >= 0.0)) throw ValidationError("profile", "profile targets must be >= 0");
  }
  if (!(period_scale > 0.0)) throw ValidationError("period_scale", "period_scale must be > 0");
}

void TypeSetProfile::validate() const {
  if (n_types < 1) throw ValidationError("n_types", "n_types must be >= 1");
  if (!(capacity_mean > 0.0)) throw ValidationError("capacity_mean", "capacity_mean must be > 0");
  for (double v : {reserved_price_mean, on_demand_price_mean, spot_price_mean}) {
    if (!(v > 0.0)) throw ValidationError("price", "price means must be > 0");
  }
  for (double v : {capacity_std, reserved_price_std, on_demand_price_std, spot_price_std}) {
    if (!(v >= 0.0)) throw ValidationError("std", "standard deviations must be >= 0");
  }
}

void to_json(nlohmann::json& j, const AppSetProfile& p) {
  j = {{"label", p.label},
       {"n_non_preemptible", p.n_non_preemptible},
       {"n_preemptible", p.n_preemptible},
       {"demand_mean", p.demand_mean},
       {"demand_std", p.demand_std},
       {"deviation_mean", p.deviation_mean},
       {"deviation_std", p.deviation_std},
       {"alloc_periods_mean", p.alloc_periods_mean},
       {"alloc_periods_std", p.alloc_periods_std},
       {"period_scale", p.period_scale}};
}

void from_json(const nlohmann::json& j, AppSetProfile& p) {
  p.label = j.value("label", std::string{});
  p.n_non_preemptible = j.at("n_non_preemptible").get<int>();
  p.n_preemptible = j.at("n_preemptible").get<int>();
  p.demand_mean = j.at("demand_mean").get<double>();
  p.demand_std = j.at("demand_std").get<double>();
  p.deviation_mean = j.at("deviation_mean").get<double>();
  p.deviation_std = j.at("deviation_std").get<double>();
  p.alloc_periods_mean = j.at("alloc_periods_mean").get<double>();
  p.alloc_periods_std = j.at("alloc_periods_std").get<double>();
  p.period_scale = j.value("period_scale", 1.0);
}

void to_json(nlohmann::json& j, const TypeSetProfile& p) {
  j = {{"label", p.label},
       {"n_types", p.n_types},
       {"capacity_mean", p.capacity_mean},
       {"capacity_std", p.capacity_std},
       {"reserved_price_mean", p.reserved_price_mean},
       {"reserved_price_std", p.reserved_price_std},
       {"on_demand_price_mean", p.on_demand_price_mean},
       {"on_demand_price_std", p.on_demand_price_std},
       {"spot_price_mean", p.spot_price_mean},
       {"spot_price_std", p.spot_price_std}};
}

void from_json(const nlohmann::json& j, TypeSetProfile& p) {
  p.label = j.value("label", std::string{});
  p.n_types = j.at("n_types").get<int>();
  p.capacity_mean = j.at("capacity_mean").get<double>();
  p.capacity_std = j.at("capacity_std").get<double>();
  p.reserved_price_mean = j.at("reserved_price_mean").get<double>();
  p.reserved_price_std = j.at("reserved_price_std").get<double>();
  p.on_demand_price_mean = j.at("on_demand_price_mean").get<double>();
  p.on_demand_price_std = j.at("on_demand_price_std").get<double>();
  p.spot_price_mean = j.at("spot_price_mean").get<double>();
  p.spot_price_std = j.at("spot_price_std").get<double>();
}

AppSetProfile app_profile(int set) {
  // non-pre, pre, demand mean/std, deviation mean/std, periods mean/std
  static const AppSetProfile kSets[] = {
      {"apps_1", 14, 6, 3.2, 1.7, 0.5, 0.5, 43.1, 33.4},
      {"apps_2", 59, 41, 3.0, 2.6, 0.5, 0.7, 63.9, 43.9},
      {"apps_3", 10, 10, 3.0, 2.0, 0.7, 0.6, 212.2, 167.8},
      {"apps_4", 42, 58, 3.1, 2.6, 0.5, 0.6, 237.2, 171.5},
      {"apps_5", 7, 13, 3.1, 2.7, 0.6, 0.6, 2758.5, 1996.9},
      {"apps_6", 41, 59, 2.8, 2.0, 0.5, 0.6, 2871.7, 2055.6},
  };
  if (set < 1 || set > 6) throw std::domain_error("application set must be in 1..6");
  return kSets[set - 1];
}

TypeSetProfile type_profile(int set) {
  // capacity mean/std, reserved, on-demand, spot price mean/std
  static const TypeSetProfile kSets[] = {
      {"types_1", 500, 9.6, 8.8, 2.3, 2.8, 3.1, 2.2, 2.5, 2.2},
      {"types_2", 500, 10.3, 11.4, 2.2, 2.4, 3.1, 2.6, 3.1, 4.8},
      {"types_3", 500, 9.8, 9.9, 2.4, 3.8, 3.1, 2.4, 2.3, 1.7},
  };
  if (set < 1 || set > 3) throw std::domain_error("type set must be in 1..3");
  return kSets[set - 1];
}

Slot minimum_horizon(const AppSetProfile& profile) {
  return std::max<Slot>(1, static_cast<Slot>(std::lround(profile.alloc_periods_mean *
                                                         profile.period_scale)));
}

Slot default_horizon(const AppSetProfile& profile) {
  const double s = profile.period_scale;
  return std::max<Slot>(
      1, static_cast<Slot>(std::ceil((profile.alloc_periods_mean + 3.0 * profile.alloc_periods_std) * s)));
}

std::vector<Application> generate_applications(const AppSetProfile& profile, Slot horizon,
                                               std::uint64_t seed) {
  profile.validate();
  if (horizon < minimum_horizon(profile)) {
    throw ValidationError("horizon", "horizon " + std::to_string(horizon) +
                                         " is shorter than the mean extent of the profile");
  }
  Rng rng(seed);
  const int n = profile.n_non_preemptible + profile.n_preemptible;
  const MomentLognormal demand(profile.demand_mean, profile.demand_std);
  const MomentLognormal deviation(profile.deviation_mean, profile.deviation_std);
  const MomentLognormal periods(profile.alloc_periods_mean * profile.period_scale,
                                profile.alloc_periods_std * profile.period_scale);

  std::vector<bool> preemptible(static_cast<std::size_t>(n), false);
  for (int k = profile.n_non_preemptible; k < n; ++k) preemptible[static_cast<std::size_t>(k)] = true;
  for (std::size_t k = preemptible.size(); k > 1; --k) {
    const std::size_t j = uniform_index(rng, k);
    const bool tmp = preemptible[k - 1];
    preemptible[k - 1] = preemptible[j];
    preemptible[j] = tmp;
  }

  std::vector<Application> apps;
  apps.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Application a;
    a.id = padded("app-", k + 1, 4);
    a.name = padded("app_", k + 1, 4);
    a.mu = std::max(kDemandFloor, demand.at(standard_normal(rng)));
    a.sigma = std::max(0.0, deviation.at(standard_normal(rng)));
    const auto length = std::clamp<Slot>(
        static_cast<Slot>(std::lround(periods.at(standard_normal(rng)))), 1, horizon);
    a.start = static_cast<Slot>(uniform_index(rng, static_cast<std::size_t>(horizon - length + 1)));
    a.finish = a.start + length;
    a.preemptible = preemptible[static_cast<std::size_t>(k)];
    apps.push_back(std::move(a));
  }
  return apps;
}

std::vector<InstanceType> generate_instance_types(const TypeSetProfile& profile,
                                                  std::uint64_t seed) {
  profile.validate();
  Rng rng(seed);
  const MomentLognormal capacity(profile.capacity_mean, profile.capacity_std);
  const MomentLognormal reserved(profile.reserved_price_mean, profile.reserved_price_std);
  const MomentLognormal on_demand(profile.on_demand_price_mean, profile.on_demand_price_std);
  const MomentLognormal spot(profile.spot_price_mean, profile.spot_price_std);
  const double rho = kPriceCapacityCorrelation;
  const double rest = std::sqrt(1.0 - rho * rho);

  std::vector<InstanceType> types;
  types.reserve(static_cast<std::size_t>(profile.n_types) * 3);
  for (int k = 0; k < profile.n_types; ++k) {
    // Prices share a latent size factor with capacity so larger machines cost more.
    const double z = standard_normal(rng);
    const double cap = std::max(kCapacityFloor, capacity.at(z));
    auto price = [&](const MomentLognormal& dist) {
      return std::max(kPriceFloor, dist.at(rho * z + rest * standard_normal(rng)));
    };
    const double on = price(on_demand);
    auto discounted = [&](const MomentLognormal& dist) {
      double p = price(dist);
      for (int r = 0; r < kOrderingRetries && p >= on; ++r) p = price(dist);
      return p < on ? p : std::max(kPriceFloor, 0.95 * on);
    };
    const double res = discounted(reserved);
    const double spt = discounted(spot);

    const Provider provider = kAllProviders[static_cast<std::size_t>(k) % 4];
    const std::string base = padded("t", k + 1, 4);
    const std::string name = std::string(to_string(provider)) + "." + base;
    const std::pair<MarketSpace, double> variants[] = {
        {MarketSpace::Reserved, res}, {MarketSpace::OnDemand, on}, {MarketSpace::Spot, spt}};
    for (const auto& [market, p] : variants) {
      InstanceType t;
      t.id = base + "-" + std::string(to_string(market));
      t.provider = provider;
      t.name = name;
      t.market = market;
      t.capacity = cap;
      t.price_per_slot = p;
      t.spot_only = market == MarketSpace::Spot;
      types.push_back(std::move(t));
    }
  }
  return types;
}

CaseOptions desk_scale_options(int case_id) {
  CaseOptions o;
  if (case_id == 5 || case_id == 6) o.period_scale = 0.1;
  return o;
}

ErichInput build_case(int case_id, std::uint64_t seed, const CaseOptions& options) {
  if (case_id < 1 || case_id > 6) throw std::domain_error("case id must be in 1..6");
  AppSetProfile apps_profile = app_profile(case_id);
  apps_profile.period_scale = options.period_scale;
  const TypeSetProfile types_profile = type_profile((case_id + 1) / 2);

  const auto apps = generate_applications(apps_profile, default_horizon(apps_profile), seed);
  // Distinct stream for the catalog so both sets stay independent.
  const auto types = generate_instance_types(types_profile, seed ^ 0x9e3779b97f4a7c15ULL);
  return make_input(apps, types, options.q_min, 0, options.reserved_term);
}

}  // namespace cpo::datagen
