#ifndef CPO_ERICH_HPP
#define CPO_ERICH_HPP

#include <vector>

#include "cpo/packing.hpp"
#include "cpo/problem.hpp"

// Greedy four-stage optimizer:
//   1. sort applications (start ascending, sigma descending) and instance types
//      (price per capacity ascending);
//   2. first-fit non-preemptible applications onto reserved instances;
//   3. try dropping each reserved instance and re-homing its applications on
//      on-demand capacity, keeping the change only if the portfolio gets cheaper;
//   4. place preemptible applications slot by slot on spare capacity, covering the
//      remaining gaps with fresh spot instances.
namespace cpo::erich {

// Stable sort by (start ascending, sigma descending, name ascending).
std::vector<Application> sort_applications(std::vector<Application> apps);

// Sort by price per capacity ascending, then larger capacity, then name.
std::vector<InstanceType> sort_instance_types(std::vector<InstanceType> types);

Packing stage2_assign_reserved(const ProblemPtr& problem);
Packing stage3_condense(Packing portfolio);
Packing stage4_assign_preemptible(Packing portfolio);

// Runs all stages. Deterministic; throws InfeasibleAppError when some application
// cannot be hosted by any admissible type.
Allocation optimize(const ErichInput& input);
Allocation optimize(const ProblemPtr& problem);

}  // namespace cpo::erich

#endif  // CPO_ERICH_HPP
