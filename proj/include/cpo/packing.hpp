#ifndef CPO_PACKING_HPP
#define CPO_PACKING_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cpo/problem.hpp"

namespace cpo {

using AppIndex = std::uint32_t;
using HostIndex = std::int32_t;
inline constexpr HostIndex kNoHost = -1;

// A provisioned instance under construction. Slot-indexed vectors are relative to
// `begin`. Reserved hosts keep their term window; other hosts grow and shrink with
// the slots they actually carry.
struct Host {
  std::uint64_t serial = 0;  // provisioning order, stable across compaction
  const InstanceType* type = nullptr;
  Slot begin = 0;
  Slot end = 0;
  bool fixed = false;
  bool alive = true;
  std::vector<SlotLoad> load;
  std::vector<std::vector<AppIndex>> members;

  bool covers(Slot t) const { return begin <= t && t < end; }
  double cost() const { return type->price_per_slot * static_cast<double>(end - begin); }
  const std::vector<AppIndex>& members_at(Slot t) const {
    return members[static_cast<std::size_t>(t - begin)];
  }
  // Mean over envelope slots of expected load / capacity.
  double average_utilization() const;
  bool empty() const;
};

// Mutable assignment of applications to hosts per slot, kept consistent in both
// directions (host -> residents, app -> host per slot).
class Packing {
 public:
  explicit Packing(ProblemPtr problem);

  const Problem& problem() const { return *problem_; }
  const ProblemPtr& problem_ptr() const { return problem_; }

  const std::vector<Host>& hosts() const { return hosts_; }
  const Host& host(HostIndex h) const { return hosts_[static_cast<std::size_t>(h)]; }

  HostIndex host_at(AppIndex a, Slot t) const;
  bool covered(AppIndex a) const;
  bool unassigned(AppIndex a) const;
  // Maximal runs of slots in the app's extent that have no host.
  std::vector<std::pair<Slot, Slot>> gaps(AppIndex a) const;

  HostIndex provision(const InstanceType& type, Slot begin, Slot end);

  // Envelope, market and quality-of-service check for slots [t0, t1) on host h.
  bool can_place(HostIndex h, AppIndex a, Slot t0, Slot t1) const;
  // Like can_place but lets a non-reserved host grow its envelope, provided the
  // result stays contiguous. Returns the number of slots the envelope would grow by.
  std::optional<Slot> can_place_extending(HostIndex h, AppIndex a, Slot t0, Slot t1) const;

  void place(HostIndex h, AppIndex a, Slot t0, Slot t1);
  void unplace(AppIndex a);
  void unplace(AppIndex a, HostIndex h);
  // Removes the host and returns the applications it carried (ascending).
  std::vector<AppIndex> remove_host(HostIndex h);

  // Drops removed and empty hosts, trims growable envelopes to the slots in use.
  void compact();

  double cost() const;
  std::size_t live_hosts() const;

  // Decodes into the domain Allocation; instance ids are "i<n>" in host order.
  Allocation to_allocation(Algorithm algorithm, nlohmann::json parameters = {}) const;

 private:
  void grow(Host& host, Slot t0, Slot t1);
  void recompute_load(Host& host, std::size_t k) const;

  ProblemPtr problem_;
  std::vector<Host> hosts_;
  std::vector<std::vector<HostIndex>> cover_;  // per app, per slot offset from start
  std::uint64_t next_serial_ = 0;
};

}  // namespace cpo

#endif  // CPO_PACKING_HPP
