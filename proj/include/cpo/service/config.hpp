#ifndef CPO_SERVICE_CONFIG_HPP
#define CPO_SERVICE_CONFIG_HPP

#include <filesystem>
#include <string>

#include "cpo/domain.hpp"

namespace cpo::service {

struct ServiceConfig {
  std::filesystem::path data_dir = "cpo-data";
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  int workers = 2;
  Slot horizon = 0;        // 0: max finish of the submitted apps
  Slot reserved_term = 0;  // 0: the horizon
  std::filesystem::path catalog;     // CSV; empty uses the bundled catalog
  std::filesystem::path static_dir;  // served under "/" when set
  int token_ttl_seconds = 24 * 60 * 60;
  int pbkdf2_iterations = 100000;

  void validate() const;
};

// Reads a JSON config file (every key optional). Keys: data_dir, bind ("host:port"),
// workers, horizon, reserved_term, catalog, static_dir, token_ttl_seconds,
// pbkdf2_iterations.
ServiceConfig load_config(const std::filesystem::path& path);

// Applies CPO_DATA_DIR, CPO_BIND, CPO_WORKERS, CPO_HORIZON, CPO_RESERVED_TERM,
// CPO_CATALOG and CPO_STATIC_DIR on top of `config`.
ServiceConfig apply_environment(ServiceConfig config);

void parse_bind(const std::string& bind, ServiceConfig& config);

// Path of the catalog shipped with the sources.
std::filesystem::path bundled_catalog_path();

}  // namespace cpo::service

#endif  // CPO_SERVICE_CONFIG_HPP
