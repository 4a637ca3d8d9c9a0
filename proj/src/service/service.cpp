#include "cpo/service/service.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>

#include "cpo/erich.hpp"
#include "cpo/georg.hpp"
#include "cpo/service/security.hpp"

namespace cpo::service {

using nlohmann::json;

namespace {

constexpr const char* kAccounts = "accounts";
constexpr const char* kSessions = "sessions";
constexpr const char* kApps = "applications";
constexpr const char* kPortfolios = "portfolios";
constexpr const char* kAllocations = "allocations";
constexpr const char* kJobs = "jobs";

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string iso_time(std::int64_t epoch) {
  const std::time_t t = static_cast<std::time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string new_id(const char* prefix) { return std::string(prefix) + random_hex(8); }

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  throw ServiceError(ErrorKind::Validation, message, field);
}

[[noreturn]] void not_found(const std::string& what) {
  throw ServiceError(ErrorKind::NotFound, what + " not found");
}

void require_object(const json& body) {
  if (!body.is_object()) invalid("body", "request body must be a JSON object");
}

std::string require_string(const json& body, const char* field) {
  const auto it = body.find(field);
  if (it == body.end() || !it->is_string()) invalid(field, std::string(field) + " must be a string");
  return it->get<std::string>();
}

double require_number(const json& body, const char* field) {
  const auto it = body.find(field);
  if (it == body.end() || !it->is_number()) invalid(field, std::string(field) + " must be a number");
  return it->get<double>();
}

Slot require_slot(const json& body, const char* field) {
  const auto it = body.find(field);
  if (it == body.end() || !it->is_number_integer())
    invalid(field, std::string(field) + " must be an integer slot");
  return it->get<Slot>();
}

bool valid_email(const std::string& e) {
  const auto at = e.find('@');
  if (at == std::string::npos || at == 0 || e.find('@', at + 1) != std::string::npos) return false;
  const std::string domain = e.substr(at + 1);
  const auto dot = domain.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= domain.size()) return false;
  return std::none_of(e.begin(), e.end(), [](unsigned char c) { return std::isspace(c) || c < 0x20; });
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

Application parse_application(const json& body) {
  require_object(body);
  Application a;
  a.name = require_string(body, "name");
  if (a.name.empty()) invalid("name", "name must not be empty");
  a.mu = require_number(body, "mu");
  a.sigma = require_number(body, "sigma");
  a.start = require_slot(body, "start");
  a.finish = require_slot(body, "finish");
  if (body.contains("preemptible")) {
    if (!body["preemptible"].is_boolean()) invalid("preemptible", "preemptible must be a boolean");
    a.preemptible = body["preemptible"].get<bool>();
  }
  try {
    a.validate();
  } catch (const ValidationError& e) {
    invalid(e.field(), e.what());
  }
  return a;
}

Portfolio parse_portfolio(const json& body) {
  require_object(body);
  Portfolio p;
  p.name = require_string(body, "name");
  const auto providers = body.find("providers");
  if (providers == body.end() || !providers->is_array())
    invalid("providers", "providers must be an array");
  for (const auto& v : *providers) {
    if (!v.is_string()) invalid("providers", "providers must be strings");
    try {
      const Provider pr = parse_provider(v.get<std::string>());
      if (std::find(p.providers.begin(), p.providers.end(), pr) == p.providers.end())
        p.providers.push_back(pr);
    } catch (const std::exception&) {
      invalid("providers", "unknown provider '" + v.get<std::string>() + "'");
    }
  }
  p.q_min = require_number(body, "q_min");
  if (body.contains("app_ids")) {
    if (!body["app_ids"].is_array()) invalid("app_ids", "app_ids must be an array");
    for (const auto& v : body["app_ids"]) {
      if (!v.is_string()) invalid("app_ids", "app_ids must be strings");
      const auto id = v.get<std::string>();
      if (std::find(p.app_ids.begin(), p.app_ids.end(), id) != p.app_ids.end())
        invalid("app_ids", "duplicate application id '" + id + "'");
      p.app_ids.push_back(id);
    }
  }
  try {
    p.validate();
  } catch (const ValidationError& e) {
    invalid(e.field(), e.what());
  }
  return p;
}

// Public view of a stored document.
json strip(json doc) {
  for (const char* k : {"owner", "seq", "snapshot", "password_digest"}) doc.erase(k);
  return doc;
}

json app_view(const json& doc) { return nlohmann::json(doc.get<Application>()); }
json portfolio_view(const json& doc) { return nlohmann::json(doc.get<Portfolio>()); }

}  // namespace

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Pending: return "Pending";
    case JobStatus::Running: return "Running";
    case JobStatus::Completed: return "Completed";
    case JobStatus::Failed: return "Failed";
  }
  return "?";
}

Service::Service(ServiceConfig config)
    : config_(std::move(config)), store_((config_.validate(), config_.data_dir)) {
  const auto catalog_path = config_.catalog.empty() ? bundled_catalog_path() : config_.catalog;
  catalog_ = catalog::import_catalog(catalog_path, catalog_path.extension() == ".json"
                                                       ? catalog::Format::Json
                                                       : catalog::Format::Csv);
  for (const char* c : {kApps, kPortfolios, kAllocations, kJobs}) {
    for (const auto& d : store_.list(c)) seq_ = std::max(seq_, d.value("seq", std::int64_t{0}));
  }
  recover_jobs();
  for (int i = 0; i < config_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() { shutdown(); }

void Service::shutdown() {
  {
    std::lock_guard lock(queue_mutex_);
    if (stopping_ && workers_.empty()) return;
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
  idle_cv_.notify_all();
}

std::int64_t Service::next_seq() { return ++seq_; }

// ---------------------------------------------------------------------------
// Accounts

json Service::register_account(const json& body) {
  require_object(body);
  const auto email = require_string(body, "email");
  const auto username = require_string(body, "username");
  const auto password = require_string(body, "password");
  if (!valid_email(email)) invalid("email", "email address is not valid");
  if (username.empty()) invalid("username", "username must not be empty");
  if (password.size() < 8) invalid("password", "password must have at least 8 characters");
  const auto digest = hash_password(password, config_.pbkdf2_iterations);

  std::unique_lock lock(mutex_);
  const auto key = lower(email);
  for (const auto& a : store_.list(kAccounts)) {
    if (lower(a.at("email").get<std::string>()) == key)
      throw ServiceError(ErrorKind::Conflict, "email is already registered", "email");
  }
  const auto now = now_seconds();
  json account = {{"id", new_id("acc_")},       {"email", email},
                  {"username", username},       {"password_digest", digest},
                  {"created_at", iso_time(now)}};
  store_.put(kAccounts, account["id"], account);
  return strip(account);
}

json Service::login(const json& body) {
  require_object(body);
  const auto email = lower(require_string(body, "email"));
  const auto password = require_string(body, "password");
  std::optional<json> account;
  {
    std::shared_lock lock(mutex_);
    for (const auto& a : store_.list(kAccounts)) {
      if (lower(a.at("email").get<std::string>()) == email) account = a;
    }
  }
  // Unknown emails pay for one hash too, so both failures look alike.
  static const std::string kDummy = hash_password("not-a-password", config_.pbkdf2_iterations);
  const bool ok = verify_password(password, account ? account->at("password_digest").get<std::string>()
                                                    : kDummy) &&
                  account.has_value();
  if (!ok) throw ServiceError(ErrorKind::Authentication, "invalid email or password");

  const auto token = random_hex(32);
  const auto expires = now_seconds() + config_.token_ttl_seconds;
  std::unique_lock lock(mutex_);
  store_.put(kSessions, sha256_hex(token),
             {{"account_id", account->at("id")}, {"expires_at", expires}});
  return {{"token", token}, {"expires_at", iso_time(expires)}};
}

void Service::logout(const std::string& token) {
  authenticate(token);
  std::unique_lock lock(mutex_);
  store_.remove(kSessions, sha256_hex(token));
}

std::string Service::authenticate(const std::string& token) const {
  if (token.size() != 64) throw ServiceError(ErrorKind::Authentication, "missing or invalid token");
  const auto key = sha256_hex(token);
  const auto session = store_.get(kSessions, key);
  if (!session || session->at("expires_at").get<std::int64_t>() <= now_seconds())
    throw ServiceError(ErrorKind::Authentication, "missing or invalid token");
  return session->at("account_id").get<std::string>();
}

json Service::list_instances(const catalog::Query& query) const {
  return catalog::filter_catalog(catalog_, query);
}

// ---------------------------------------------------------------------------
// Owner-scoped helpers

json Service::owned(const std::string& collection, const std::string& owner,
                    const std::string& id, const char* what) const {
  auto doc = store_.get(collection, id);
  if (!doc || doc->value("owner", std::string{}) != owner) not_found(what);
  return *doc;
}

std::vector<json> Service::owned_list(const std::string& collection,
                                      const std::string& owner) const {
  std::vector<json> out;
  for (auto& d : store_.list(collection)) {
    if (d.value("owner", std::string{}) == owner) out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), [](const json& a, const json& b) {
    return a.value("seq", std::int64_t{0}) < b.value("seq", std::int64_t{0});
  });
  return out;
}

void Service::check_app_name_free(const std::string& owner, const std::string& name,
                                  const std::string& except_id) const {
  for (const auto& a : owned_list(kApps, owner)) {
    if (a.at("name") == name && a.at("id") != except_id)
      throw ServiceError(ErrorKind::Conflict, "an application named '" + name + "' exists", "name");
  }
}

void Service::bump_portfolios_containing(const std::string& owner, const std::string& app_id,
                                         bool remove) {
  for (auto p : owned_list(kPortfolios, owner)) {
    auto& ids = p["app_ids"];
    const auto it = std::find(ids.begin(), ids.end(), app_id);
    if (it == ids.end()) continue;
    if (remove) ids.erase(it);
    p["version"] = p["version"].get<std::int64_t>() + 1;
    store_.put(kPortfolios, p["id"], p);
  }
}

// ---------------------------------------------------------------------------
// Applications

json Service::list_applications(const std::string& owner) const {
  std::shared_lock lock(mutex_);
  json out = json::array();
  for (const auto& a : owned_list(kApps, owner)) out.push_back(app_view(a));
  return out;
}

json Service::create_application(const std::string& owner, const json& body) {
  auto app = parse_application(body);
  std::unique_lock lock(mutex_);
  check_app_name_free(owner, app.name, {});
  app.id = new_id("app_");
  json doc = app;
  doc["owner"] = owner;
  doc["seq"] = next_seq();
  store_.put(kApps, app.id, doc);
  return app_view(doc);
}

json Service::update_application(const std::string& owner, const std::string& id,
                                 const json& body) {
  auto app = parse_application(body);
  std::unique_lock lock(mutex_);
  auto doc = owned(kApps, owner, id, "application");
  check_app_name_free(owner, app.name, id);
  app.id = id;
  json updated = app;
  updated["owner"] = owner;
  updated["seq"] = doc["seq"];
  store_.put(kApps, id, updated);
  bump_portfolios_containing(owner, id, false);
  return app_view(updated);
}

void Service::delete_application(const std::string& owner, const std::string& id) {
  std::unique_lock lock(mutex_);
  owned(kApps, owner, id, "application");
  store_.remove(kApps, id);
  bump_portfolios_containing(owner, id, true);
}

json Service::copy_application(const std::string& owner, const std::string& id) {
  std::unique_lock lock(mutex_);
  auto doc = owned(kApps, owner, id, "application");
  auto app = doc.get<Application>();
  app.name += "_copy";
  check_app_name_free(owner, app.name, {});
  app.id = new_id("app_");
  json copy = app;
  copy["owner"] = owner;
  copy["seq"] = next_seq();
  store_.put(kApps, app.id, copy);
  return app_view(copy);
}

// ---------------------------------------------------------------------------
// Portfolios

json Service::list_portfolios(const std::string& owner) const {
  std::shared_lock lock(mutex_);
  json out = json::array();
  for (const auto& p : owned_list(kPortfolios, owner)) out.push_back(portfolio_view(p));
  return out;
}

json Service::get_portfolio(const std::string& owner, const std::string& id) const {
  std::shared_lock lock(mutex_);
  return portfolio_view(owned(kPortfolios, owner, id, "portfolio"));
}

json Service::create_portfolio(const std::string& owner, const json& body) {
  auto p = parse_portfolio(body);
  std::unique_lock lock(mutex_);
  for (const auto& other : owned_list(kPortfolios, owner)) {
    if (other.at("name") == p.name)
      throw ServiceError(ErrorKind::Conflict, "a portfolio named '" + p.name + "' exists", "name");
  }
  for (const auto& app_id : p.app_ids) {
    const auto a = store_.get(kApps, app_id);
    if (!a || a->value("owner", std::string{}) != owner)
      invalid("app_ids", "unknown application '" + app_id + "'");
  }
  p.id = new_id("pf_");
  p.version = 1;
  json doc = p;
  doc["owner"] = owner;
  doc["seq"] = next_seq();
  store_.put(kPortfolios, p.id, doc);
  return portfolio_view(doc);
}

json Service::update_portfolio(const std::string& owner, const std::string& id, const json& body) {
  auto p = parse_portfolio(body);
  std::unique_lock lock(mutex_);
  auto doc = owned(kPortfolios, owner, id, "portfolio");
  for (const auto& other : owned_list(kPortfolios, owner)) {
    if (other.at("name") == p.name && other.at("id") != id)
      throw ServiceError(ErrorKind::Conflict, "a portfolio named '" + p.name + "' exists", "name");
  }
  for (const auto& app_id : p.app_ids) {
    const auto a = store_.get(kApps, app_id);
    if (!a || a->value("owner", std::string{}) != owner)
      invalid("app_ids", "unknown application '" + app_id + "'");
  }
  p.id = id;
  p.version = doc.at("version").get<std::int64_t>() + 1;
  json updated = p;
  updated["owner"] = owner;
  updated["seq"] = doc["seq"];
  store_.put(kPortfolios, id, updated);
  return portfolio_view(updated);
}

void Service::delete_portfolio(const std::string& owner, const std::string& id) {
  std::unique_lock lock(mutex_);
  owned(kPortfolios, owner, id, "portfolio");
  for (const auto& a : owned_list(kAllocations, owner)) {
    if (a.at("portfolio_id") == id) {
      store_.remove(kJobs, a.at("job_id").get<std::string>());
      store_.remove(kAllocations, a.at("id").get<std::string>());
    }
  }
  store_.remove(kPortfolios, id);
}

// ---------------------------------------------------------------------------
// Allocations and jobs

json Service::create_allocation(const std::string& owner, const std::string& portfolio_id,
                                const json& body) {
  require_object(body);
  Algorithm algorithm;
  try {
    algorithm = parse_algorithm(require_string(body, "algorithm"));
  } catch (const ServiceError&) {
    throw;
  } catch (const std::exception&) {
    invalid("algorithm", "algorithm must be ERICH or GEORG");
  }
  georg::GaConfig ga;
  if (body.contains("ga_config") && !body["ga_config"].is_null()) {
    if (!body["ga_config"].is_object()) invalid("ga_config", "ga_config must be an object");
    try {
      ga = body["ga_config"].get<georg::GaConfig>();
      ga.validate();
    } catch (const ValidationError& e) {
      invalid("ga_config." + e.field(), e.what());
    } catch (const nlohmann::json::exception& e) {
      invalid("ga_config", e.what());
    }
  }

  std::unique_lock lock(mutex_);
  const auto pf = owned(kPortfolios, owner, portfolio_id, "portfolio").get<Portfolio>();
  catalog::Query q;
  q.providers = pf.providers;
  const auto types = catalog::filter_catalog(catalog_, q);
  if (types.empty()) invalid("providers", "no instance types are offered by the portfolio's providers");
  json apps = json::array();
  for (const auto& app_id : pf.app_ids) {
    const auto a = store_.get(kApps, app_id);
    if (a) apps.push_back(app_view(*a));
  }

  const auto now = iso_time(now_seconds());
  const auto job_id = new_id("job_");
  Allocation alloc;
  alloc.id = new_id("alloc_");
  alloc.portfolio_id = pf.id;
  alloc.portfolio_version = pf.version;
  alloc.algorithm = algorithm;
  alloc.status = AllocationStatus::Pending;
  if (algorithm == Algorithm::GEORG) alloc.parameters = ga;
  json alloc_doc = alloc;
  alloc_doc["owner"] = owner;
  alloc_doc["seq"] = next_seq();
  alloc_doc["job_id"] = job_id;
  alloc_doc["created_at"] = now;

  json job = {{"id", job_id},
              {"owner", owner},
              {"seq", alloc_doc["seq"]},
              {"allocation_id", alloc.id},
              {"portfolio_id", pf.id},
              {"algorithm", to_string(algorithm)},
              {"ga_config", ga},
              {"status", to_string(JobStatus::Pending)},
              {"progress", nullptr},
              {"trace", json::array()},
              {"error", nullptr},
              {"created_at", now},
              {"started_at", nullptr},
              {"finished_at", nullptr},
              {"snapshot", {{"portfolio", pf}, {"apps", apps}, {"types", types}}}};
  store_.put(kAllocations, alloc.id, alloc_doc);
  store_.put(kJobs, job_id, job);
  lock.unlock();
  {
    std::lock_guard q_lock(queue_mutex_);
    queue_.push_back(job_id);
  }
  queue_cv_.notify_one();
  return strip(job);
}

json Service::list_allocations(const std::string& owner, const std::string& portfolio_id) const {
  std::shared_lock lock(mutex_);
  owned(kPortfolios, owner, portfolio_id, "portfolio");
  json out = json::array();
  for (const auto& a : owned_list(kAllocations, owner)) {
    if (a.at("portfolio_id") == portfolio_id) out.push_back(strip(a));
  }
  return out;
}

json Service::get_allocation(const std::string& owner, const std::string& id) const {
  std::shared_lock lock(mutex_);
  return strip(owned(kAllocations, owner, id, "allocation"));
}

void Service::delete_allocation(const std::string& owner, const std::string& id) {
  std::unique_lock lock(mutex_);
  const auto doc = owned(kAllocations, owner, id, "allocation");
  store_.remove(kJobs, doc.at("job_id").get<std::string>());
  store_.remove(kAllocations, id);
}

json Service::get_job(const std::string& owner, const std::string& id) const {
  std::shared_lock lock(mutex_);
  return strip(owned(kJobs, owner, id, "job"));
}

bool Service::wait_idle(std::chrono::milliseconds timeout) {
  std::unique_lock lock(queue_mutex_);
  return idle_cv_.wait_for(lock, timeout, [this] { return queue_.empty() && active_ == 0; });
}

void Service::recover_jobs() {
  auto jobs = store_.list(kJobs);
  std::sort(jobs.begin(), jobs.end(), [](const json& a, const json& b) {
    return a.value("seq", std::int64_t{0}) < b.value("seq", std::int64_t{0});
  });
  for (auto& job : jobs) {
    const auto status = job.at("status").get<std::string>();
    if (status == "Pending") {
      queue_.push_back(job.at("id").get<std::string>());
    } else if (status == "Running") {
      finish_job(job.at("id").get<std::string>(), nullptr, "interrupted by a service restart");
    }
  }
}

void Service::worker_loop() {
  while (true) {
    std::string job_id;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job_id = queue_.front();
      queue_.pop_front();
      ++active_;
    }
    run_job(job_id);
    {
      std::lock_guard lock(queue_mutex_);
      --active_;
    }
    idle_cv_.notify_all();
  }
}

void Service::run_job(const std::string& job_id) {
  json snapshot;
  Algorithm algorithm;
  georg::GaConfig ga;
  {
    std::unique_lock lock(mutex_);
    auto job = store_.get(kJobs, job_id);
    if (!job || job->at("status") != "Pending") return;
    (*job)["status"] = to_string(JobStatus::Running);
    (*job)["started_at"] = iso_time(now_seconds());
    store_.put(kJobs, job_id, *job);
    snapshot = job->at("snapshot");
    algorithm = parse_algorithm(job->at("algorithm").get<std::string>());
    ga = job->at("ga_config").get<georg::GaConfig>();
  }

  try {
    const auto pf = snapshot.at("portfolio").get<Portfolio>();
    const auto apps = snapshot.at("apps").get<std::vector<Application>>();
    const auto types = snapshot.at("types").get<std::vector<InstanceType>>();
    const auto input = make_input(apps, types, pf.q_min, config_.horizon, config_.reserved_term);
    Allocation result;
    if (algorithm == Algorithm::ERICH) {
      result = erich::optimize(input);
    } else {
      auto sink = [&](const georg::GenerationStats& g) {
        std::unique_lock lock(mutex_);
        auto job = store_.get(kJobs, job_id);
        if (!job) return;
        const json stats = {{"generation", g.generation},
                            {"best_cost", g.best_cost},
                            {"mean_cost", g.mean_cost}};
        (*job)["progress"] = stats;
        (*job)["trace"].push_back(stats);
        store_.put(kJobs, job_id, *job);
      };
      result = georg::run(input, ga, sink).allocation;
    }
    finish_job(job_id, &result, {});
  } catch (const InfeasibleAppError& e) {
    finish_job(job_id, nullptr, std::string(e.what()) + " (application id " + e.app_id() + ")");
  } catch (const std::exception& e) {
    finish_job(job_id, nullptr, e.what());
  }
}

void Service::finish_job(const std::string& job_id, const Allocation* result,
                         const std::string& error) {
  std::unique_lock lock(mutex_);
  auto job = store_.get(kJobs, job_id);
  if (!job) return;  // deleted while running
  const auto alloc_id = job->at("allocation_id").get<std::string>();
  if (auto doc = store_.get(kAllocations, alloc_id)) {
    Allocation alloc = doc->get<Allocation>();
    if (result) {
      const auto keep_id = alloc.id;
      const auto keep_pf = alloc.portfolio_id;
      const auto keep_version = alloc.portfolio_version;
      alloc = *result;
      alloc.id = keep_id;
      alloc.portfolio_id = keep_pf;
      alloc.portfolio_version = keep_version;
      alloc.status = AllocationStatus::Completed;
    } else {
      alloc.status = AllocationStatus::Failed;
    }
    json updated = alloc;
    for (const char* k : {"owner", "seq", "job_id", "created_at"}) updated[k] = (*doc)[k];
    if (!result) updated["error"] = error;
    store_.put(kAllocations, alloc_id, updated);
  }
  (*job)["status"] = to_string(result ? JobStatus::Completed : JobStatus::Failed);
  (*job)["finished_at"] = iso_time(now_seconds());
  if (!result) (*job)["error"] = error;
  store_.put(kJobs, job_id, *job);
}

}  // namespace cpo::service
