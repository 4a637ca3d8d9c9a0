#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cpo/bench.hpp"
#include "cpo/catalog.hpp"
#include "cpo/datagen.hpp"
#include "cpo/erich.hpp"
#include "cpo/feasibility.hpp"
#include "cpo/georg.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace cpo;

namespace {

// Every entity crosses the boundary as a JSON string in the canonical layout.
template <typename T>
T parse_as(const std::string& text) {
  try {
    return json::parse(text).get<T>();
  } catch (const json::exception& e) {
    throw py::value_error(e.what());
  }
}

std::string optimize(const std::string& apps, const std::string& types,
                     const std::string& algorithm, double q_min, Slot horizon,
                     Slot reserved_term, const std::string& ga_config) {
  const auto a = parse_as<std::vector<Application>>(apps);
  const auto t = parse_as<std::vector<InstanceType>>(types);
  const auto algo = parse_algorithm(algorithm);
  const auto cfg = parse_as<georg::GaConfig>(ga_config);
  cfg.validate();
  Allocation alloc;
  {
    py::gil_scoped_release release;
    const auto input = make_input(a, t, q_min, horizon, reserved_term);
    alloc = algo == Algorithm::ERICH ? erich::optimize(input) : georg::run(input, cfg).allocation;
  }
  return json(alloc).dump();
}

std::string validate(const std::string& allocation, const std::string& portfolio,
                     const std::string& apps) {
  const auto alloc = parse_as<Allocation>(allocation);
  const auto pf = parse_as<Portfolio>(portfolio);
  const auto a = parse_as<std::vector<Application>>(apps);
  return json(validate_allocation(alloc, pf, a)).dump();
}

std::string generate_case(int case_id, std::uint64_t seed, std::optional<double> period_scale) {
  auto options = datagen::desk_scale_options(case_id);
  if (period_scale) options.period_scale = *period_scale;
  const auto input = datagen::build_case(case_id, seed, options);
  json apps = input.non_preemptible;
  for (const auto& p : input.preemptible) apps.push_back(p);
  json types = json::array();
  for (const auto* group : {&input.reserved_types, &input.on_demand_types, &input.spot_types}) {
    for (const auto& t : *group) types.push_back(t);
  }
  return json{{"apps", apps}, {"types", types}, {"q_min", input.q_min}, {"horizon", input.horizon}}
      .dump();
}

std::string filter(const std::string& types, std::optional<std::vector<std::string>> providers,
                   std::optional<std::vector<std::string>> markets,
                   std::optional<double> min_capacity, std::optional<double> max_price) {
  const auto t = parse_as<std::vector<InstanceType>>(types);
  catalog::Query q;
  if (providers) {
    q.providers.emplace();
    for (const auto& p : *providers) q.providers->push_back(parse_provider(p));
  }
  if (markets) {
    q.markets.emplace();
    for (const auto& m : *markets) q.markets->push_back(parse_market(m));
  }
  q.min_capacity = min_capacity;
  q.max_price = max_price;
  return json(catalog::filter_catalog(t, q)).dump();
}

std::string bench_case(int case_id, int repetitions, std::uint64_t seed) {
  bench::RunOptions options;
  options.repetitions = repetitions;
  options.seed = seed;
  bench::BenchReport report;
  {
    py::gil_scoped_release release;
    report = bench::run_case(case_id, options);
  }
  return json(report).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cloud portfolio optimizer core";

  static py::exception<InfeasibleAppError> infeasible(m, "InfeasibleAppError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InfeasibleAppError& e) {
      py::set_error(infeasible, (e.app_id() + ": " + e.what()).c_str());
    } catch (const ValidationError& e) {
      py::set_error(PyExc_ValueError, e.what());
    } catch (const ReferenceError& e) {
      py::set_error(PyExc_KeyError, e.what());
    }
  });

  m.def("optimize", &optimize, py::arg("apps"), py::arg("types"), py::arg("algorithm") = "ERICH",
        py::arg("q_min") = 0.95, py::arg("horizon") = 0, py::arg("reserved_term") = 0,
        py::arg("ga_config") = "{}", "Allocation JSON for the given apps and types.");
  m.def("validate_allocation", &validate, py::arg("allocation"), py::arg("portfolio"),
        py::arg("apps"), "Violations as a JSON array; empty when the allocation is valid.");
  m.def("generate_case", &generate_case, py::arg("case_id"), py::arg("seed") = 0,
        py::arg("period_scale") = py::none());
  m.def("filter_catalog", &filter, py::arg("types"), py::arg("providers") = py::none(),
        py::arg("markets") = py::none(), py::arg("min_capacity") = py::none(),
        py::arg("max_price") = py::none());
  m.def("parse_catalog_csv", [](const std::string& text) {
    return json(catalog::parse_csv(text)).dump();
  });
  m.def("bench_case", &bench_case, py::arg("case_id"), py::arg("repetitions") = 1,
        py::arg("seed") = 0);
  m.def("normal_quantile", &normal_quantile, py::arg("p"));
  m.def("normal_cdf", &normal_cdf, py::arg("z"));
}
