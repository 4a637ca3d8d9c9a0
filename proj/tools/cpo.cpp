// cpo: generate, optimize, bench, catalog and serve from the command line.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

#include "cpo/bench.hpp"
#include "cpo/catalog.hpp"
#include "cpo/datagen.hpp"
#include "cpo/erich.hpp"
#include "cpo/georg.hpp"
#include "cpo/service/http.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cpo;

namespace {

constexpr int kExitInfeasible = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitIo = 74;

// Input that parses but does not describe a valid problem.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  if (path == "-") {
    std::ostringstream s;
    s << std::cin.rdbuf();
    return s.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::system_error(errno, std::generic_category(), "cannot write '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw std::system_error(errno, std::generic_category(), "failed writing '" + path + "'");
}

template <typename T>
T read_json_as(const fs::path& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text).get<T>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<Provider> to_providers(const std::vector<std::string>& v) {
  std::vector<Provider> out;
  for (const auto& s : v) out.push_back(parse_provider(s));
  return out;
}

std::vector<MarketSpace> to_markets(const std::vector<std::string>& v) {
  std::vector<MarketSpace> out;
  for (const auto& s : v) out.push_back(parse_market(s));
  return out;
}

catalog::Format format_for(const std::string& flag, const fs::path& path) {
  if (!flag.empty()) return catalog::parse_format(flag);
  return path.extension() == ".json" ? catalog::Format::Json : catalog::Format::Csv;
}

std::string render_types(const std::vector<InstanceType>& types, catalog::Format format) {
  if (format == catalog::Format::Csv) return catalog::to_csv(types);
  return json(types).dump(2) + "\n";
}

struct GaFlags {
  int population = georg::GaConfig{}.population_size;
  int generations = georg::GaConfig{}.max_generations;
  double mutation = georg::GaConfig{}.mutation_rate;

  void add(CLI::App* cmd) {
    cmd->add_option("--population", population, "GEORG population size")->capture_default_str();
    cmd->add_option("--generations", generations, "GEORG generation limit")->capture_default_str();
    cmd->add_option("--mutation-rate", mutation, "GEORG mutation rate")->capture_default_str();
  }
  georg::GaConfig config(std::uint64_t seed) const {
    georg::GaConfig c;
    c.population_size = population;
    c.max_generations = generations;
    c.mutation_rate = mutation;
    c.seed = seed;
    c.validate();
    return c;
  }
};

int run_serve(const std::string& config_path) {
  auto config = config_path.empty() ? service::ServiceConfig{} : service::load_config(config_path);
  config = service::apply_environment(config);

  // Route SIGINT/SIGTERM to a watcher thread; every other thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Service svc(config);
  service::HttpServer server(svc);
  const int port = server.bind();
  std::cerr << "cpo: serving on http://" << config.host << ':' << port << " (data in "
            << config.data_dir.string() << ")\n";
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  // listen() can also return on its own; wake the watcher so it can be joined.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  svc.shutdown();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloud portfolio optimizer"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic evaluation case");
  int gen_case = 1;
  std::uint64_t gen_seed = 0;
  std::string gen_out = ".";
  std::optional<double> gen_scale;
  gen->add_option("--case", gen_case, "Case id")->required()->check(CLI::Range(1, 6));
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--period-scale", gen_scale, "Extent-length scale (default: 0.1 for cases 5-6)");

  // optimize
  auto* opt = app.add_subcommand("optimize", "Compute an allocation");
  std::string opt_apps, opt_types, opt_out = "-", opt_algorithm = "erich";
  double opt_q = 0.95;
  std::uint64_t opt_seed = 0;
  Slot opt_horizon = 0, opt_term = 0;
  bool opt_progress = false;
  GaFlags opt_ga;
  opt->add_option("--apps", opt_apps, "Applications JSON")->required();
  opt->add_option("--types", opt_types, "Instance types (JSON or CSV)")->required();
  opt->add_option("--algorithm", opt_algorithm, "erich or georg")
      ->transform(CLI::IsMember({"erich", "georg"}, CLI::ignore_case))
      ->capture_default_str();
  opt->add_option("--q-min", opt_q, "Quality of service")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  opt->add_option("--seed", opt_seed, "GEORG seed")->capture_default_str();
  opt->add_option("--horizon", opt_horizon, "Horizon in slots (0: latest finish)")->check(CLI::NonNegativeNumber);
  opt->add_option("--reserved-term", opt_term, "Reserved term in slots (0: horizon)")->check(CLI::NonNegativeNumber);
  opt->add_option("--out", opt_out, "Allocation JSON path, - for stdout")->capture_default_str();
  opt->add_flag("--progress", opt_progress, "Print GEORG generations to stderr");
  opt_ga.add(opt);

  // bench
  auto* bench = app.add_subcommand("bench", "Run the benchmark cases");
  std::vector<int> bench_cases{1, 2, 3, 4, 5, 6};
  int bench_reps = 10;
  std::uint64_t bench_seed = 0;
  std::string bench_out = ".";
  std::optional<double> bench_scale;
  GaFlags bench_ga;
  bench->add_option("--cases", bench_cases, "Case ids")->delimiter(',')->check(CLI::Range(1, 6));
  bench->add_option("--reps", bench_reps, "Repetitions per algorithm")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--seed", bench_seed, "Random seed")->capture_default_str();
  bench->add_option("--out", bench_out, "Output directory")->capture_default_str();
  bench->add_option("--period-scale", bench_scale, "Extent-length scale override");
  bench_ga.add(bench);

  // catalog
  auto* cat = app.add_subcommand("catalog", "Import or query an instance catalog");
  cat->require_subcommand(1);
  auto* cat_import = cat->add_subcommand("import", "Validate a catalog and convert it");
  std::string imp_in, imp_from, imp_out = "-", imp_to = "json";
  cat_import->add_option("--in", imp_in, "Catalog file")->required();
  cat_import->add_option("--from", imp_from, "Input format (csv|json, default by extension)");
  cat_import->add_option("--to", imp_to, "Output format (csv|json)")->capture_default_str();
  cat_import->add_option("--out", imp_out, "Output path, - for stdout")->capture_default_str();

  auto* cat_filter = cat->add_subcommand("filter", "Filter a catalog");
  std::string flt_in, flt_to = "json", flt_out = "-";
  std::vector<std::string> flt_providers, flt_markets;
  std::optional<double> flt_min_cap, flt_max_price;
  cat_filter->add_option("--in", flt_in, "Catalog file (default: bundled catalog)");
  cat_filter->add_option("--providers", flt_providers, "Providers")->delimiter(',');
  cat_filter->add_option("--markets", flt_markets, "Market spaces")->delimiter(',');
  cat_filter->add_option("--min-capacity", flt_min_cap, "Minimum capacity");
  cat_filter->add_option("--max-price", flt_max_price, "Maximum price per slot");
  cat_filter->add_option("--to", flt_to, "Output format (csv|json)")->capture_default_str();
  cat_filter->add_option("--out", flt_out, "Output path, - for stdout")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the REST service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "Service config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      auto options = datagen::desk_scale_options(gen_case);
      if (gen_scale) options.period_scale = *gen_scale;
      const auto input = datagen::build_case(gen_case, gen_seed, options);
      std::vector<Application> apps = input.non_preemptible;
      apps.insert(apps.end(), input.preemptible.begin(), input.preemptible.end());
      std::vector<InstanceType> types = input.reserved_types;
      types.insert(types.end(), input.on_demand_types.begin(), input.on_demand_types.end());
      types.insert(types.end(), input.spot_types.begin(), input.spot_types.end());
      std::error_code ec;
      fs::create_directories(gen_out, ec);
      if (ec) throw std::system_error(ec, "cannot create '" + gen_out + "'");
      write_file((fs::path(gen_out) / "apps.json").string(), json(apps).dump(2) + "\n");
      write_file((fs::path(gen_out) / "types.json").string(), json(types).dump(2) + "\n");
    } else if (*opt) {
      const auto apps = read_json_as<std::vector<Application>>(opt_apps);
      const auto types_format = format_for({}, opt_types);
      const auto types = types_format == catalog::Format::Json
                             ? read_json_as<std::vector<InstanceType>>(opt_types)
                             : catalog::parse_csv(read_file(opt_types));
      const auto input = make_input(apps, types, opt_q, opt_horizon, opt_term);
      Allocation alloc;
      if (parse_algorithm(opt_algorithm == "erich" ? "ERICH" : "GEORG") == Algorithm::ERICH) {
        alloc = erich::optimize(input);
      } else {
        georg::ProgressSink sink;
        if (opt_progress) {
          sink = [](const georg::GenerationStats& g) {
            std::cerr << "generation " << g.generation << ": best " << g.best_cost << ", mean "
                      << g.mean_cost << '\n';
          };
        }
        alloc = georg::run(input, opt_ga.config(opt_seed), sink).allocation;
      }
      write_file(opt_out, json(alloc).dump(2) + "\n");
    } else if (*bench) {
      bench::RunOptions options;
      options.repetitions = bench_reps;
      options.seed = bench_seed;
      options.ga = bench_ga.config(bench_seed);
      options.period_scale = bench_scale;
      std::vector<bench::BenchReport> reports;
      for (int c : bench_cases) {
        std::cerr << "case " << c << "...\n";
        reports.push_back(bench::run_case(c, options));
        for (const auto& r : reports.back().results) {
          std::cerr << "  " << to_string(r.algorithm) << ": cost " << r.total_cost << ", utilization "
                    << r.mean_utilization << ", median " << r.median_wall_ms() << " ms";
          if (r.error) std::cerr << ", error: " << *r.error;
          std::cerr << '\n';
        }
      }
      std::error_code ec;
      fs::create_directories(bench_out, ec);
      if (ec) throw std::system_error(ec, "cannot create '" + bench_out + "'");
      bench::export_csv(reports, bench_out);
      bench::export_json(reports, fs::path(bench_out) / "bench.json");
    } else if (*cat_import) {
      const auto types = catalog::import_catalog(imp_in, format_for(imp_from, imp_in));
      write_file(imp_out, render_types(types, catalog::parse_format(imp_to)));
    } else if (*cat_filter) {
      const fs::path in = flt_in.empty() ? service::bundled_catalog_path() : fs::path(flt_in);
      const auto types = catalog::import_catalog(in, format_for({}, in));
      catalog::Query q;
      if (!flt_providers.empty()) q.providers = to_providers(flt_providers);
      if (!flt_markets.empty()) q.markets = to_markets(flt_markets);
      q.min_capacity = flt_min_cap;
      q.max_price = flt_max_price;
      write_file(flt_out, render_types(catalog::filter_catalog(types, q), catalog::parse_format(flt_to)));
    } else if (*serve) {
      return run_serve(serve_config);
    }
  } catch (const InfeasibleAppError& e) {
    std::cerr << "cpo: infeasible application " << e.app_id() << ": " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::system_error& e) {
    std::cerr << "cpo: " << e.what() << '\n';
    return kExitIo;
  } catch (const DataError& e) {
    std::cerr << "cpo: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    // Bad values that passed flag parsing (unknown provider, invalid GA config, ...).
    std::cerr << "cpo: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
