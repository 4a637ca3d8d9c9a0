#ifndef CPO_SERVICE_SERVICE_HPP
#define CPO_SERVICE_SERVICE_HPP

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cpo/catalog.hpp"
#include "cpo/service/config.hpp"
#include "cpo/service/store.hpp"

namespace cpo::service {

enum class ErrorKind { Validation, Authentication, NotFound, Conflict };

class ServiceError : public std::runtime_error {
 public:
  ServiceError(ErrorKind kind, const std::string& what, std::string field = {})
      : std::runtime_error(what), kind_(kind), field_(std::move(field)) {}
  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

enum class JobStatus { Pending, Running, Completed, Failed };
std::string_view to_string(JobStatus s);

// Accounts, owner-scoped entities and the allocation job queue. Every method taking
// an `owner` reports entities of other owners as not found. Request bodies and
// results are JSON in the canonical domain layout.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const { return config_; }

  nlohmann::json register_account(const nlohmann::json& body);
  // Returns {"token", "expires_at"}.
  nlohmann::json login(const nlohmann::json& body);
  void logout(const std::string& token);
  // Account id for a live token; throws Authentication otherwise.
  std::string authenticate(const std::string& token) const;

  nlohmann::json list_instances(const catalog::Query& query) const;

  nlohmann::json list_applications(const std::string& owner) const;
  nlohmann::json create_application(const std::string& owner, const nlohmann::json& body);
  nlohmann::json update_application(const std::string& owner, const std::string& id,
                                    const nlohmann::json& body);
  void delete_application(const std::string& owner, const std::string& id);
  nlohmann::json copy_application(const std::string& owner, const std::string& id);

  nlohmann::json list_portfolios(const std::string& owner) const;
  nlohmann::json get_portfolio(const std::string& owner, const std::string& id) const;
  nlohmann::json create_portfolio(const std::string& owner, const nlohmann::json& body);
  nlohmann::json update_portfolio(const std::string& owner, const std::string& id,
                                  const nlohmann::json& body);
  void delete_portfolio(const std::string& owner, const std::string& id);

  // Snapshots the portfolio and its apps, stores a Pending allocation and queues a
  // job. Body: {"algorithm": "ERICH"|"GEORG", "ga_config": {...}}. Returns the job.
  nlohmann::json create_allocation(const std::string& owner, const std::string& portfolio_id,
                                   const nlohmann::json& body);
  nlohmann::json list_allocations(const std::string& owner, const std::string& portfolio_id) const;
  nlohmann::json get_allocation(const std::string& owner, const std::string& id) const;
  void delete_allocation(const std::string& owner, const std::string& id);
  nlohmann::json get_job(const std::string& owner, const std::string& id) const;

  // Waits until no job is queued or running. Returns false on timeout.
  bool wait_idle(std::chrono::milliseconds timeout);

  // Stops accepting jobs and joins the workers after their current job.
  void shutdown();

 private:
  nlohmann::json owned(const std::string& collection, const std::string& owner,
                       const std::string& id, const char* what) const;
  std::vector<nlohmann::json> owned_list(const std::string& collection,
                                         const std::string& owner) const;
  void check_app_name_free(const std::string& owner, const std::string& name,
                           const std::string& except_id) const;
  void bump_portfolios_containing(const std::string& owner, const std::string& app_id,
                                  bool remove);
  std::int64_t next_seq();
  void recover_jobs();
  void worker_loop();
  void run_job(const std::string& job_id);
  void finish_job(const std::string& job_id, const Allocation* result, const std::string& error);

  ServiceConfig config_;
  DocumentStore store_;
  std::vector<InstanceType> catalog_;
  mutable std::shared_mutex mutex_;  // entity model: writers exclusive, readers shared
  std::int64_t seq_ = 0;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  int active_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace cpo::service

#endif  // CPO_SERVICE_SERVICE_HPP
