#include "cpo/service/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <system_error>

#ifndef CPO_DEFAULT_CATALOG
#define CPO_DEFAULT_CATALOG "data/catalog.csv"
#endif

namespace cpo::service {

namespace {

int to_int(const std::string& s, const char* field) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ValidationError(field, std::string(field) + " must be an integer");
  return v;
}

}  // namespace

void ServiceConfig::validate() const {
  if (data_dir.empty()) throw ValidationError("data_dir", "data_dir must be set");
  if (port < 0 || port > 65535) throw ValidationError("bind", "port must be in 0..65535");
  if (workers < 1) throw ValidationError("workers", "workers must be >= 1");
  if (horizon < 0) throw ValidationError("horizon", "horizon must be >= 0");
  if (reserved_term < 0) throw ValidationError("reserved_term", "reserved_term must be >= 0");
  if (token_ttl_seconds < 1) throw ValidationError("token_ttl_seconds", "token_ttl_seconds must be >= 1");
  if (pbkdf2_iterations < 1) throw ValidationError("pbkdf2_iterations", "pbkdf2_iterations must be >= 1");
}

void parse_bind(const std::string& bind, ServiceConfig& config) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ValidationError("bind", "bind must be host:port");
  config.host = bind.substr(0, colon);
  config.port = to_int(bind.substr(colon + 1), "bind");
  if (config.host.empty()) throw ValidationError("bind", "bind must be host:port");
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot read config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config", "invalid config '" + path.string() + "': " + e.what());
  }
  ServiceConfig c;
  if (!j.is_object()) throw ValidationError("config", "config must be a JSON object");
  const auto base = path.parent_path();
  auto rel = [&](const std::string& s) {
    std::filesystem::path p(s);
    return p.is_absolute() ? p : base / p;
  };
  try {
    if (j.contains("data_dir")) c.data_dir = rel(j["data_dir"].get<std::string>());
    if (j.contains("bind")) parse_bind(j["bind"].get<std::string>(), c);
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("horizon")) c.horizon = j["horizon"].get<Slot>();
    if (j.contains("reserved_term")) c.reserved_term = j["reserved_term"].get<Slot>();
    if (j.contains("catalog")) c.catalog = rel(j["catalog"].get<std::string>());
    if (j.contains("static_dir")) c.static_dir = rel(j["static_dir"].get<std::string>());
    if (j.contains("token_ttl_seconds")) c.token_ttl_seconds = j["token_ttl_seconds"].get<int>();
    if (j.contains("pbkdf2_iterations")) c.pbkdf2_iterations = j["pbkdf2_iterations"].get<int>();
  } catch (const nlohmann::json::type_error& e) {
    throw ValidationError("config", "invalid config '" + path.string() + "': " + e.what());
  }
  c.validate();
  return c;
}

ServiceConfig apply_environment(ServiceConfig c) {
  auto env = [](const char* name) -> const char* {
    const char* v = std::getenv(name);
    return v && *v ? v : nullptr;
  };
  if (const char* v = env("CPO_DATA_DIR")) c.data_dir = v;
  if (const char* v = env("CPO_BIND")) parse_bind(v, c);
  if (const char* v = env("CPO_WORKERS")) c.workers = to_int(v, "workers");
  if (const char* v = env("CPO_HORIZON")) c.horizon = to_int(v, "horizon");
  if (const char* v = env("CPO_RESERVED_TERM")) c.reserved_term = to_int(v, "reserved_term");
  if (const char* v = env("CPO_CATALOG")) c.catalog = v;
  if (const char* v = env("CPO_STATIC_DIR")) c.static_dir = v;
  c.validate();
  return c;
}

std::filesystem::path bundled_catalog_path() { return CPO_DEFAULT_CATALOG; }

}  // namespace cpo::service
