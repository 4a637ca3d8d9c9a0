#ifndef CPO_SERVICE_HTTP_HPP
#define CPO_SERVICE_HTTP_HPP

#include <memory>
#include <thread>

#include "cpo/service/service.hpp"

namespace httplib {
class Server;
}

namespace cpo::service {

// REST front end for a Service. Routes live under /api; static files, when
// configured, are served under /.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds the configured host and port and returns the bound port.
  int bind();
  // Serves until stop(). bind() must have succeeded.
  void listen();
  // bind() then listen() on a background thread.
  int start();
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace cpo::service

#endif  // CPO_SERVICE_HTTP_HPP
