#include "cpo/service/http.hpp"

#include <httplib.h>

#include <sstream>
#include <system_error>

namespace cpo::service {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

int status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return 400;
    case ErrorKind::Authentication: return 401;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict: return 409;
  }
  return 500;
}

const char* code_of(int status) {
  switch (status) {
    case 400: return "validation_error";
    case 401: return "unauthorized";
    case 404: return "not_found";
    case 409: return "conflict";
    default: return "internal_error";
  }
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::string& field = {}) {
  json err = {{"code", code_of(status)}, {"message", message}};
  err["field"] = field.empty() ? json(nullptr) : json(field);
  res.status = status;
  res.set_content(json{{"error", err}}.dump(), kJson);
}

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(ErrorKind::Validation, std::string("malformed JSON: ") + e.what(), "body");
  }
}

std::string bearer(const httplib::Request& req) {
  const auto header = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0)
    throw ServiceError(ErrorKind::Authentication, "missing or invalid token");
  return header.substr(prefix.size());
}

// Comma-separated or repeated values of any of `keys`.
std::vector<std::string> split_values(const httplib::Request& req,
                                      std::initializer_list<const char*> keys) {
  std::vector<std::string> out;
  for (const char* key : keys) {
    const auto n = req.get_param_value_count(key);
    for (std::size_t i = 0; i < n; ++i) {
      std::stringstream ss(req.get_param_value(key, i));
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
      }
    }
  }
  return out;
}

double number_param(const httplib::Request& req, const std::string& key) {
  const auto v = req.get_param_value(key);
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw ServiceError(ErrorKind::Validation, key + " must be a number", key);
  return d;
}

catalog::Query parse_query(const httplib::Request& req) {
  catalog::Query q;
  if (req.has_param("providers") || req.has_param("provider")) {
    q.providers.emplace();
    for (const auto& v : split_values(req, {"providers", "provider"})) {
      try {
        q.providers->push_back(parse_provider(v));
      } catch (const std::exception&) {
        throw ServiceError(ErrorKind::Validation, "unknown provider '" + v + "'", "providers");
      }
    }
  }
  if (req.has_param("markets") || req.has_param("market")) {
    q.markets.emplace();
    for (const auto& v : split_values(req, {"markets", "market"})) {
      try {
        q.markets->push_back(parse_market(v));
      } catch (const std::exception&) {
        throw ServiceError(ErrorKind::Validation, "unknown market '" + v + "'", "markets");
      }
    }
  }
  if (req.has_param("min_capacity")) q.min_capacity = number_param(req, "min_capacity");
  if (req.has_param("max_price")) q.max_price = number_param(req, "max_price");
  return q;
}

// Runs a handler and maps its exceptions onto the error body.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, status_of(e.kind()), e.what(), e.field());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

// Same, after resolving the bearer token to an owner.
template <typename F>
httplib::Server::Handler authed(Service& svc, F f) {
  return guarded([&svc, f](const httplib::Request& req, httplib::Response& res) {
    const auto owner = svc.authenticate(bearer(req));
    f(owner, req, res);
  });
}

}  // namespace

HttpServer::HttpServer(Service& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& s = *server_;
  auto& svc = service_;
  using Req = const httplib::Request&;
  using Res = httplib::Response&;
  using Owner = const std::string&;

  s.Post("/api/register", guarded([&svc](Req req, Res res) {
           send(res, 201, svc.register_account(parse_body(req)));
         }));
  s.Post("/api/login", guarded([&svc](Req req, Res res) {
           send(res, 200, svc.login(parse_body(req)));
         }));
  s.Post("/api/logout", guarded([&svc](Req req, Res res) {
           svc.logout(bearer(req));
           send(res, 200, json::object());
         }));

  s.Get("/api/instances", authed(svc, [&svc](Owner, Req req, Res res) {
          send(res, 200, svc.list_instances(parse_query(req)));
        }));

  s.Get("/api/applications", authed(svc, [&svc](Owner o, Req, Res res) {
          send(res, 200, svc.list_applications(o));
        }));
  s.Post("/api/applications", authed(svc, [&svc](Owner o, Req req, Res res) {
           send(res, 201, svc.create_application(o, parse_body(req)));
         }));
  s.Put("/api/applications/:id", authed(svc, [&svc](Owner o, Req req, Res res) {
          send(res, 200, svc.update_application(o, req.path_params.at("id"), parse_body(req)));
        }));
  s.Delete("/api/applications/:id", authed(svc, [&svc](Owner o, Req req, Res res) {
             svc.delete_application(o, req.path_params.at("id"));
             send(res, 200, json::object());
           }));
  s.Post("/api/applications/:id/copy", authed(svc, [&svc](Owner o, Req req, Res res) {
           send(res, 201, svc.copy_application(o, req.path_params.at("id")));
         }));

  s.Get("/api/portfolios", authed(svc, [&svc](Owner o, Req, Res res) {
          send(res, 200, svc.list_portfolios(o));
        }));
  s.Post("/api/portfolios", authed(svc, [&svc](Owner o, Req req, Res res) {
           send(res, 201, svc.create_portfolio(o, parse_body(req)));
         }));
  s.Get("/api/portfolios/:id", authed(svc, [&svc](Owner o, Req req, Res res) {
          send(res, 200, svc.get_portfolio(o, req.path_params.at("id")));
        }));
  s.Put("/api/portfolios/:id", authed(svc, [&svc](Owner o, Req req, Res res) {
          send(res, 200, svc.update_portfolio(o, req.path_params.at("id"), parse_body(req)));
        }));
  s.Delete("/api/portfolios/:id", authed(svc, [&svc](Owner o, Req req, Res res) {
             svc.delete_portfolio(o, req.path_params.at("id"));
             send(res, 200, json::object());
           }));
  s.Get("/api/portfolios/:id/allocations", authed(svc, [&svc](Owner o, Req req, Res res) {
          send(res, 200, svc.list_allocations(o, req.path_params.at("id")));
        }));
  s.Post("/api/portfolios/:id/allocations", authed(svc, [&svc](Owner o, Req req, Res res) {
           send(res, 201, svc.create_allocation(o, req.path_params.at("id"), parse_body(req)));
         }));

  s.Get("/api/allocations/:id", authed(svc, [&svc](Owner o, Req req, Res res) {
          send(res, 200, svc.get_allocation(o, req.path_params.at("id")));
        }));
  s.Delete("/api/allocations/:id", authed(svc, [&svc](Owner o, Req req, Res res) {
             svc.delete_allocation(o, req.path_params.at("id"));
             send(res, 200, json::object());
           }));
  s.Get("/api/jobs/:id", authed(svc, [&svc](Owner o, Req req, Res res) {
          send(res, 200, svc.get_job(o, req.path_params.at("id")));
        }));

  const auto& static_dir = svc.config().static_dir;
  if (!static_dir.empty() && !s.set_mount_point("/", static_dir.string()))
    throw std::runtime_error("static directory '" + static_dir.string() + "' does not exist");

  s.set_error_handler([](Req req, Res res) {
    if (res.body.empty() && req.path.rfind("/api/", 0) == 0) {
      send_error(res, res.status, res.status == 404 ? "no such endpoint" : "request failed");
    }
  });
}

int HttpServer::bind() {
  const auto& cfg = service_.config();
  if (cfg.port == 0) {
    port_ = server_->bind_to_any_port(cfg.host);
  } else {
    port_ = server_->bind_to_port(cfg.host, cfg.port) ? cfg.port : -1;
  }
  if (port_ < 0) {
    throw std::system_error(std::make_error_code(std::errc::address_in_use),
                            "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  }
  return port_;
}

void HttpServer::listen() { server_->listen_after_bind(); }

int HttpServer::start() {
  const int p = bind();
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return p;
}

void HttpServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cpo::service
