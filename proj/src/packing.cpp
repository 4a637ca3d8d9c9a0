#include "cpo/packing.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace cpo {

double Host::average_utilization() const {
  if (load.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& l : load) sum += l.mu;
  return sum / (type->capacity * static_cast<double>(load.size()));
}

bool Host::empty() const {
  return std::all_of(members.begin(), members.end(), [](const auto& m) { return m.empty(); });
}

Packing::Packing(ProblemPtr problem) : problem_(std::move(problem)) {
  cover_.resize(problem_->apps().size());
  for (std::size_t a = 0; a < cover_.size(); ++a)
    cover_[a].assign(static_cast<std::size_t>(problem_->app(a).length()), kNoHost);
}

HostIndex Packing::host_at(AppIndex a, Slot t) const {
  const Application& app = problem_->app(a);
  if (t < app.start || t >= app.finish) return kNoHost;
  return cover_[a][static_cast<std::size_t>(t - app.start)];
}

bool Packing::covered(AppIndex a) const {
  return std::none_of(cover_[a].begin(), cover_[a].end(), [](HostIndex h) { return h == kNoHost; });
}

bool Packing::unassigned(AppIndex a) const {
  return std::all_of(cover_[a].begin(), cover_[a].end(), [](HostIndex h) { return h == kNoHost; });
}

std::vector<std::pair<Slot, Slot>> Packing::gaps(AppIndex a) const {
  std::vector<std::pair<Slot, Slot>> out;
  const Slot start = problem_->app(a).start;
  const auto& cov = cover_[a];
  std::size_t k = 0;
  while (k < cov.size()) {
    if (cov[k] != kNoHost) {
      ++k;
      continue;
    }
    std::size_t e = k;
    while (e < cov.size() && cov[e] == kNoHost) ++e;
    out.emplace_back(start + static_cast<Slot>(k), start + static_cast<Slot>(e));
    k = e;
  }
  return out;
}

HostIndex Packing::provision(const InstanceType& type, Slot begin, Slot end) {
  if (begin >= end) throw std::invalid_argument("provision: empty envelope");
  Host h;
  h.serial = next_serial_++;
  h.type = &type;
  h.begin = begin;
  h.end = end;
  h.fixed = type.market == MarketSpace::Reserved;
  h.load.resize(static_cast<std::size_t>(end - begin));
  h.members.resize(static_cast<std::size_t>(end - begin));
  hosts_.push_back(std::move(h));
  return static_cast<HostIndex>(hosts_.size() - 1);
}

bool Packing::can_place(HostIndex h, AppIndex a, Slot t0, Slot t1) const {
  const Host& host = hosts_[static_cast<std::size_t>(h)];
  if (!host.alive) return false;
  if (t0 < host.begin || t1 > host.end) return false;
  const Application& app = problem_->app(a);
  if (app.preemptible < host.type->spot_only) return false;
  const double var = app.sigma * app.sigma;
  const auto& qos = problem_->qos();
  for (Slot t = t0; t < t1; ++t) {
    const SlotLoad& l = host.load[static_cast<std::size_t>(t - host.begin)];
    if (!qos.admits(l.mu + app.mu, l.var + var, host.type->capacity)) return false;
  }
  return true;
}

std::optional<Slot> Packing::can_place_extending(HostIndex h, AppIndex a, Slot t0,
                                                 Slot t1) const {
  const Host& host = hosts_[static_cast<std::size_t>(h)];
  if (!host.alive) return std::nullopt;
  if (t0 >= host.begin && t1 <= host.end) {
    if (can_place(h, a, t0, t1)) return Slot{0};
    return std::nullopt;
  }
  if (host.fixed) return std::nullopt;
  if (t1 < host.begin || t0 > host.end) return std::nullopt;  // would leave an idle gap
  const Application& app = problem_->app(a);
  if (app.preemptible < host.type->spot_only) return std::nullopt;
  const auto& qos = problem_->qos();
  const double var = app.sigma * app.sigma;
  if (!qos.admits(app.mu, var, host.type->capacity)) return std::nullopt;
  const Slot lo = std::max(t0, host.begin), hi = std::min(t1, host.end);
  for (Slot t = lo; t < hi; ++t) {
    const SlotLoad& l = host.load[static_cast<std::size_t>(t - host.begin)];
    if (!qos.admits(l.mu + app.mu, l.var + var, host.type->capacity)) return std::nullopt;
  }
  return std::max<Slot>(0, host.begin - t0) + std::max<Slot>(0, t1 - host.end);
}

void Packing::grow(Host& host, Slot t0, Slot t1) {
  if (t0 >= host.begin && t1 <= host.end) return;
  if (host.fixed) throw std::logic_error("cannot grow a reserved envelope");
  if (t0 < host.begin) {
    const auto n = static_cast<std::size_t>(host.begin - t0);
    host.load.insert(host.load.begin(), n, SlotLoad{});
    host.members.insert(host.members.begin(), n, {});
    host.begin = t0;
  }
  if (t1 > host.end) {
    host.load.resize(static_cast<std::size_t>(t1 - host.begin));
    host.members.resize(static_cast<std::size_t>(t1 - host.begin));
    host.end = t1;
  }
}

void Packing::place(HostIndex h, AppIndex a, Slot t0, Slot t1) {
  Host& host = hosts_[static_cast<std::size_t>(h)];
  const Application& app = problem_->app(a);
  assert(t0 >= app.start && t1 <= app.finish);
  grow(host, t0, t1);
  for (Slot t = t0; t < t1; ++t) {
    auto& slot_cover = cover_[a][static_cast<std::size_t>(t - app.start)];
    if (slot_cover != kNoHost) throw std::logic_error("place: slot already assigned");
    slot_cover = h;
    const auto k = static_cast<std::size_t>(t - host.begin);
    host.members[k].push_back(a);
    host.load[k].add(app);
  }
}

void Packing::recompute_load(Host& host, std::size_t k) const {
  SlotLoad l;
  for (AppIndex m : host.members[k]) l.add(problem_->app(m));
  host.load[k] = l;
}

void Packing::unplace(AppIndex a, HostIndex h) {
  Host& host = hosts_[static_cast<std::size_t>(h)];
  const Application& app = problem_->app(a);
  for (std::size_t k = 0; k < cover_[a].size(); ++k) {
    if (cover_[a][k] != h) continue;
    cover_[a][k] = kNoHost;
    const auto hk = static_cast<std::size_t>(app.start + static_cast<Slot>(k) - host.begin);
    auto& mem = host.members[hk];
    mem.erase(std::remove(mem.begin(), mem.end(), a), mem.end());
    recompute_load(host, hk);
  }
}

void Packing::unplace(AppIndex a) {
  std::vector<HostIndex> seen;
  for (HostIndex h : cover_[a]) {
    if (h != kNoHost && std::find(seen.begin(), seen.end(), h) == seen.end()) seen.push_back(h);
  }
  for (HostIndex h : seen) unplace(a, h);
}

std::vector<AppIndex> Packing::remove_host(HostIndex h) {
  Host& host = hosts_[static_cast<std::size_t>(h)];
  std::vector<AppIndex> apps;
  for (const auto& mem : host.members) apps.insert(apps.end(), mem.begin(), mem.end());
  std::sort(apps.begin(), apps.end());
  apps.erase(std::unique(apps.begin(), apps.end()), apps.end());
  for (AppIndex a : apps) {
    for (auto& c : cover_[a]) {
      if (c == h) c = kNoHost;
    }
  }
  host.alive = false;
  host.members.clear();
  host.load.clear();
  return apps;
}

void Packing::compact() {
  std::vector<HostIndex> remap(hosts_.size(), kNoHost);
  std::vector<Host> kept;
  kept.reserve(hosts_.size());
  for (std::size_t i = 0; i < hosts_.size(); ++i) {
    Host& host = hosts_[i];
    if (!host.alive || host.empty()) continue;
    if (!host.fixed) {
      std::size_t lo = 0, hi = host.members.size();
      while (host.members[lo].empty()) ++lo;
      while (host.members[hi - 1].empty()) --hi;
      if (lo > 0 || hi < host.members.size()) {
        host.members = {host.members.begin() + static_cast<std::ptrdiff_t>(lo),
                        host.members.begin() + static_cast<std::ptrdiff_t>(hi)};
        host.load = {host.load.begin() + static_cast<std::ptrdiff_t>(lo),
                     host.load.begin() + static_cast<std::ptrdiff_t>(hi)};
        host.end = host.begin + static_cast<Slot>(hi);
        host.begin += static_cast<Slot>(lo);
      }
    }
    remap[i] = static_cast<HostIndex>(kept.size());
    kept.push_back(std::move(host));
  }
  hosts_ = std::move(kept);
  for (auto& cov : cover_) {
    for (auto& c : cov) {
      if (c != kNoHost) c = remap[static_cast<std::size_t>(c)];
    }
  }
}

double Packing::cost() const {
  double total = 0.0;
  for (const auto& h : hosts_) {
    if (h.alive) total += h.cost();
  }
  return total;
}

std::size_t Packing::live_hosts() const {
  return static_cast<std::size_t>(
      std::count_if(hosts_.begin(), hosts_.end(), [](const Host& h) { return h.alive; }));
}

Allocation Packing::to_allocation(Algorithm algorithm, nlohmann::json parameters) const {
  Packing tidy = *this;
  tidy.compact();

  Allocation alloc;
  alloc.algorithm = algorithm;
  alloc.parameters = parameters.is_null() ? nlohmann::json::object() : std::move(parameters);
  alloc.status = AllocationStatus::Completed;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < tidy.hosts_.size(); ++i) {
    const Host& h = tidy.hosts_[i];
    ids.push_back("i" + std::to_string(i));
    alloc.instances.push_back({ids.back(), *h.type, h.begin, h.end});
  }
  for (std::size_t a = 0; a < tidy.cover_.size(); ++a) {
    const Application& app = problem_->app(a);
    const auto& cov = tidy.cover_[a];
    std::size_t k = 0;
    while (k < cov.size()) {
      if (cov[k] == kNoHost) {
        ++k;
        continue;
      }
      std::size_t e = k;
      while (e < cov.size() && cov[e] == cov[k]) ++e;
      alloc.assignment.push_back({app.id, ids[static_cast<std::size_t>(cov[k])],
                                  app.start + static_cast<Slot>(k),
                                  app.start + static_cast<Slot>(e)});
      k = e;
    }
  }
  refresh_statistics(alloc, problem_->apps());
  return alloc;
}

}  // namespace cpo
