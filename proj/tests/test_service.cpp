#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "cpo/erich.hpp"
#include "cpo/problem.hpp"
#include "cpo/service/http.hpp"
#include "cpo/service/security.hpp"
#include "cpo/service/service.hpp"

using namespace cpo;
using namespace cpo::service;
using nlohmann::json;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

// Scratch directory removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("cpo_service_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// One reserved type (R=2, C=1), a pricier on-demand type and a spot type.
constexpr const char* kCatalog =
    "provider,name,market,capacity,price_per_slot\n"
    "AWS,small,Reserved,2,1\n"
    "AWS,small,OnDemand,2,3\n"
    "AWS,small,Spot,2,0.5\n"
    "Azure,big,OnDemand,8,9\n";

ServiceConfig make_config(const fs::path& dir) {
  {
    std::ofstream out(dir / "catalog.csv");
    out << kCatalog;
  }
  ServiceConfig c;
  c.data_dir = dir / "data";
  c.catalog = dir / "catalog.csv";
  c.port = 0;
  c.pbkdf2_iterations = 1000;
  return c;
}

std::string login(Service& svc, const std::string& email) {
  svc.register_account({{"email", email}, {"username", "u"}, {"password", "password1"}});
  return svc.authenticate(
      svc.login({{"email", email}, {"password", "password1"}})["token"].get<std::string>());
}

json app_body(const std::string& name, double mu, Slot s, Slot f, bool pre = false) {
  return {{"name", name}, {"mu", mu}, {"sigma", 0.0}, {"start", s}, {"finish", f},
          {"preemptible", pre}};
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    return e.kind();
  }
  FAIL("no ServiceError thrown");
  return ErrorKind::Validation;
}

}  // namespace

TEST_CASE("password hashing") {
  const auto h = hash_password("secret-pass", 1000);
  CHECK(h.rfind("pbkdf2-sha256$1000$", 0) == 0);
  CHECK(h.find("secret-pass") == std::string::npos);
  CHECK(verify_password("secret-pass", h));
  CHECK_FALSE(verify_password("secret-pasS", h));
  CHECK_FALSE(verify_password("secret-pass", "garbage"));
  CHECK(hash_password("secret-pass", 1000) != h);  // salted
  CHECK(constant_time_equal("abc", "abc"));
  CHECK_FALSE(constant_time_equal("abc", "abd"));
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("document store") {
  TempDir tmp;
  {
    DocumentStore s(tmp.path);
    s.put("things", "a", {{"id", "a"}, {"v", 1}});
    s.put("things", "b", {{"id", "b"}, {"v", 2}});
    CHECK(s.remove("things", "b"));
    CHECK_FALSE(s.remove("things", "b"));
    CHECK_THROWS_AS(s.put("things", "../x", json::object()), std::invalid_argument);
  }
  std::ofstream(tmp.path / "things" / ".c.json.tmp") << "{";
  DocumentStore s(tmp.path);
  REQUIRE(s.get("things", "a"));
  CHECK((*s.get("things", "a"))["v"] == 1);
  CHECK_FALSE(s.get("things", "b"));
  CHECK(s.list("things").size() == 1);
  CHECK_FALSE(fs::exists(tmp.path / "things" / ".c.json.tmp"));

  std::ofstream(tmp.path / "things" / "bad.json") << "{";
  CHECK_THROWS(DocumentStore(tmp.path));
}

TEST_CASE("config") {
  TempDir tmp;
  std::ofstream(tmp.path / "c.json") << R"({"bind": "0.0.0.0:9001", "workers": 3, "data_dir": "d"})";
  auto c = load_config(tmp.path / "c.json");
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9001);
  CHECK(c.workers == 3);
  CHECK(c.data_dir == tmp.path / "d");
  CHECK(c.horizon == 0);
  ServiceConfig bad;
  bad.workers = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(parse_bind("nohost", c), ValidationError);
}

TEST_CASE("accounts") {
  TempDir tmp;
  Service svc(make_config(tmp.path));
  const auto acc = svc.register_account(
      {{"email", "ann@example.com"}, {"username", "ann"}, {"password", "password1"}});
  CHECK(acc.contains("id"));
  CHECK_FALSE(acc.contains("password_digest"));

  CHECK(kind_of([&] {
          svc.register_account(
              {{"email", "ANN@example.com"}, {"username", "x"}, {"password", "password2"}});
        }) == ErrorKind::Conflict);
  CHECK(kind_of([&] {
          svc.register_account({{"email", "bob@example.com"}, {"username", "b"}, {"password", "short"}});
        }) == ErrorKind::Validation);
  CHECK(kind_of([&] {
          svc.register_account({{"email", "not-an-email"}, {"username", "b"}, {"password", "password1"}});
        }) == ErrorKind::Validation);

  const auto session = svc.login({{"email", "ann@example.com"}, {"password", "password1"}});
  const auto token = session["token"].get<std::string>();
  CHECK(svc.authenticate(token) == acc["id"]);

  std::string wrong_pw, wrong_email;
  try {
    svc.login({{"email", "ann@example.com"}, {"password", "password2"}});
  } catch (const ServiceError& e) {
    CHECK(e.kind() == ErrorKind::Authentication);
    wrong_pw = e.what();
  }
  try {
    svc.login({{"email", "nobody@example.com"}, {"password", "password1"}});
  } catch (const ServiceError& e) {
    CHECK(e.kind() == ErrorKind::Authentication);
    wrong_email = e.what();
  }
  CHECK(wrong_pw == wrong_email);
  CHECK_FALSE(wrong_pw.empty());

  svc.logout(token);
  CHECK(kind_of([&] { svc.authenticate(token); }) == ErrorKind::Authentication);
  CHECK(kind_of([&] { svc.authenticate("x"); }) == ErrorKind::Authentication);

  // Sessions are keyed by a digest; the raw token is not on disk.
  const auto again = svc.login({{"email", "ann@example.com"}, {"password", "password1"}});
  for (const auto& f : fs::recursive_directory_iterator(tmp.path / "data")) {
    if (!f.is_regular_file()) continue;
    std::ifstream in(f.path());
    std::string content((std::istreambuf_iterator<char>(in)), {});
    CHECK(content.find(again["token"].get<std::string>()) == std::string::npos);
    CHECK(content.find("password1") == std::string::npos);
  }
}

TEST_CASE("applications and portfolios") {
  TempDir tmp;
  Service svc(make_config(tmp.path));
  const auto me = login(svc, "a@example.com");

  const auto db = svc.create_application(me, app_body("db", 2, 0, 4));
  const auto id = db["id"].get<std::string>();
  CHECK(svc.list_applications(me).size() == 1);
  CHECK(kind_of([&] { svc.create_application(me, app_body("db", 1, 0, 2)); }) == ErrorKind::Conflict);

  SUBCASE("field-level validation") {
    try {
      svc.create_application(me, app_body("bad", 1, 4, 4));
      FAIL("accepted F <= S");
    } catch (const ServiceError& e) {
      CHECK(e.kind() == ErrorKind::Validation);
      CHECK_FALSE(e.field().empty());
    }
    CHECK(kind_of([&] { svc.create_application(me, {{"name", "x"}}); }) == ErrorKind::Validation);
    CHECK(kind_of([&] { svc.create_application(me, json::array()); }) == ErrorKind::Validation);
  }

  SUBCASE("copy") {
    const auto copy = svc.copy_application(me, id);
    CHECK(copy["name"] == "db_copy");
    CHECK(copy["id"] != db["id"]);
    for (const char* k : {"mu", "sigma", "start", "finish", "preemptible"}) CHECK(copy[k] == db[k]);
    CHECK(kind_of([&] { svc.copy_application(me, id); }) == ErrorKind::Conflict);
  }

  SUBCASE("versioning") {
    const auto pf = svc.create_portfolio(
        me, {{"name", "p"}, {"providers", {"AWS"}}, {"q_min", 0.95}, {"app_ids", {id}}});
    const auto pid = pf["id"].get<std::string>();
    CHECK(pf["version"] == 1);
    svc.update_application(me, id, app_body("db", 3, 0, 4));
    CHECK(svc.get_portfolio(me, pid)["version"] == 2);
    svc.delete_application(me, id);
    const auto after = svc.get_portfolio(me, pid);
    CHECK(after["version"] == 3);
    CHECK(after["app_ids"].empty());
    const auto upd = svc.update_portfolio(
        me, pid, {{"name", "p2"}, {"providers", {"Azure"}}, {"q_min", 0.5}});
    CHECK(upd["version"] == 4);
  }

  SUBCASE("portfolio validation") {
    CHECK(kind_of([&] {
            svc.create_portfolio(me, {{"name", "p"}, {"providers", json::array()}, {"q_min", 0.9}});
          }) == ErrorKind::Validation);
    CHECK(kind_of([&] {
            svc.create_portfolio(me, {{"name", "p"}, {"providers", {"AWS"}}, {"q_min", 1.5}});
          }) == ErrorKind::Validation);
    CHECK(kind_of([&] {
            svc.create_portfolio(me, {{"name", "p"}, {"providers", {"Nimbus"}}, {"q_min", 0.9}});
          }) == ErrorKind::Validation);
    CHECK(kind_of([&] {
            svc.create_portfolio(
                me, {{"name", "p"}, {"providers", {"AWS"}}, {"q_min", 0.9}, {"app_ids", {"app_x"}}});
          }) == ErrorKind::Validation);
    svc.create_portfolio(me, {{"name", "p"}, {"providers", {"AWS"}}, {"q_min", 0.9}});
    CHECK(kind_of([&] {
            svc.create_portfolio(me, {{"name", "p"}, {"providers", {"AWS"}}, {"q_min", 0.9}});
          }) == ErrorKind::Conflict);
  }

  SUBCASE("unknown ids") {
    CHECK(kind_of([&] { svc.update_application(me, "app_nope", app_body("z", 1, 0, 1)); }) ==
          ErrorKind::NotFound);
    CHECK(kind_of([&] { svc.delete_portfolio(me, "pf_nope"); }) == ErrorKind::NotFound);
    CHECK(kind_of([&] { svc.get_job(me, "job_nope"); }) == ErrorKind::NotFound);
  }
}

TEST_CASE("owner scoping") {
  TempDir tmp;
  Service svc(make_config(tmp.path));
  const auto alice = login(svc, "alice@example.com");
  const auto bob = login(svc, "bob@example.com");
  const auto app = svc.create_application(alice, app_body("db", 2, 0, 4));
  const auto id = app["id"].get<std::string>();
  const auto pf = svc.create_portfolio(
      alice, {{"name", "p"}, {"providers", {"AWS"}}, {"q_min", 0.95}, {"app_ids", {id}}});
  const auto pid = pf["id"].get<std::string>();

  CHECK(svc.list_applications(bob).empty());
  CHECK(svc.list_portfolios(bob).empty());
  CHECK(kind_of([&] { svc.update_application(bob, id, app_body("db", 1, 0, 4)); }) ==
        ErrorKind::NotFound);
  CHECK(kind_of([&] { svc.copy_application(bob, id); }) == ErrorKind::NotFound);
  CHECK(kind_of([&] { svc.get_portfolio(bob, pid); }) == ErrorKind::NotFound);
  CHECK(kind_of([&] { svc.create_allocation(bob, pid, {{"algorithm", "ERICH"}}); }) ==
        ErrorKind::NotFound);
  // Bob cannot reference Alice's app, and his own name space is separate.
  CHECK(kind_of([&] {
          svc.create_portfolio(
              bob, {{"name", "q"}, {"providers", {"AWS"}}, {"q_min", 0.9}, {"app_ids", {id}}});
        }) == ErrorKind::Validation);
  CHECK_NOTHROW(svc.create_application(bob, app_body("db", 2, 0, 4)));

  const auto job = svc.create_allocation(alice, pid, {{"algorithm", "ERICH"}});
  REQUIRE(svc.wait_idle(10s));
  CHECK(kind_of([&] { svc.get_job(bob, job["id"]); }) == ErrorKind::NotFound);
  CHECK(kind_of([&] { svc.get_allocation(bob, job["allocation_id"]); }) == ErrorKind::NotFound);
  CHECK(kind_of([&] { svc.delete_allocation(bob, job["allocation_id"]); }) == ErrorKind::NotFound);
}

TEST_CASE("allocation jobs") {
  TempDir tmp;
  Service svc(make_config(tmp.path));
  const auto me = login(svc, "a@example.com");
  const auto app = svc.create_application(me, app_body("db", 2, 0, 4));
  const auto id = app["id"].get<std::string>();
  const auto pid = svc.create_portfolio(me, {{"name", "p"},
                                             {"providers", {"AWS"}},
                                             {"q_min", 0.95},
                                             {"app_ids", {id}}})["id"]
                       .get<std::string>();

  SUBCASE("ERICH on one app costs 4") {
    const auto job = svc.create_allocation(me, pid, {{"algorithm", "ERICH"}});
    CHECK(job["status"] == "Pending");
    CHECK_FALSE(job.contains("snapshot"));
    REQUIRE(svc.wait_idle(10s));
    const auto done = svc.get_job(me, job["id"]);
    CHECK(done["status"] == "Completed");
    CHECK(svc.get_job(me, job["id"]) == done);  // polling does not mutate

    const auto alloc = svc.get_allocation(me, job["allocation_id"]);
    CHECK(alloc["status"] == "Completed");
    CHECK(alloc["total_cost"].get<double>() == doctest::Approx(4.0));
    CHECK(alloc["portfolio_version"] == 1);
    CHECK(alloc["portfolio_id"] == pid);
    CHECK(alloc.contains("per_market_stats"));
    const auto a = alloc.get<Allocation>();
    const auto apps = std::vector<Application>{app.get<Application>()};
    const auto pf = svc.get_portfolio(me, pid).get<Portfolio>();
    CHECK(validate_allocation(a, pf, apps).empty());

    svc.update_application(me, id, app_body("db", 1, 0, 4));
    CHECK(svc.get_allocation(me, job["allocation_id"])["portfolio_version"] <
          svc.get_portfolio(me, pid)["version"]);
    CHECK(svc.list_allocations(me, pid).size() == 1);
    svc.delete_allocation(me, job["allocation_id"]);
    CHECK(svc.list_allocations(me, pid).empty());
    CHECK(kind_of([&] { svc.get_job(me, job["id"]); }) == ErrorKind::NotFound);
  }

  SUBCASE("GEORG streams progress") {
    const auto job = svc.create_allocation(me, pid, {{"algorithm", "GEORG"}});
    REQUIRE(svc.wait_idle(30s));
    const auto done = svc.get_job(me, job["id"]);
    CHECK(done["status"] == "Completed");
    CHECK(done["trace"].size() >= 1);
    CHECK(done["trace"].size() <= 10);
    CHECK(done["progress"] == done["trace"].back());
    const auto alloc = svc.get_allocation(me, job["allocation_id"]);
    CHECK(alloc["algorithm"] == "GEORG");
    CHECK(alloc["parameters"]["population_size"] == 20);
  }

  SUBCASE("GA config is validated") {
    CHECK(kind_of([&] {
            svc.create_allocation(me, pid, {{"algorithm", "GEORG"}, {"ga_config", {{"population_size", 0}}}});
          }) == ErrorKind::Validation);
    CHECK(kind_of([&] { svc.create_allocation(me, pid, {{"algorithm", "SIMPLEX"}}); }) ==
          ErrorKind::Validation);
  }

  SUBCASE("empty filtered catalog") {
    const auto gcp = svc.create_portfolio(
        me, {{"name", "g"}, {"providers", {"GoogleCloud"}}, {"q_min", 0.9}, {"app_ids", {id}}});
    CHECK(kind_of([&] { svc.create_allocation(me, gcp["id"], {{"algorithm", "ERICH"}}); }) ==
          ErrorKind::Validation);
  }

  SUBCASE("infeasible app fails the job") {
    svc.create_application(me, app_body("huge", 100, 0, 4));
    const auto huge = svc.list_applications(me).back();
    const auto p2 = svc.create_portfolio(
        me, {{"name", "p2"}, {"providers", {"AWS", "Azure"}}, {"q_min", 0.95}, {"app_ids", {huge["id"]}}});
    const auto job = svc.create_allocation(me, p2["id"], {{"algorithm", "ERICH"}});
    REQUIRE(svc.wait_idle(10s));
    const auto done = svc.get_job(me, job["id"]);
    CHECK(done["status"] == "Failed");
    CHECK(done["error"].get<std::string>().find(huge["id"].get<std::string>()) != std::string::npos);
    CHECK(svc.get_allocation(me, job["allocation_id"])["status"] == "Failed");
  }

  SUBCASE("deleting a portfolio removes its allocations") {
    const auto job = svc.create_allocation(me, pid, {{"algorithm", "ERICH"}});
    REQUIRE(svc.wait_idle(10s));
    svc.delete_portfolio(me, pid);
    CHECK(kind_of([&] { svc.get_allocation(me, job["allocation_id"]); }) == ErrorKind::NotFound);
    CHECK(kind_of([&] { svc.get_job(me, job["id"]); }) == ErrorKind::NotFound);
  }
}

TEST_CASE("jobs run FIFO on a bounded pool") {
  TempDir tmp;
  auto cfg = make_config(tmp.path);
  cfg.workers = 1;
  Service svc(cfg);
  const auto me = login(svc, "a@example.com");
  const auto id = svc.create_application(me, app_body("db", 2, 0, 4))["id"];
  const auto pid = svc.create_portfolio(
      me, {{"name", "p"}, {"providers", {"AWS"}}, {"q_min", 0.95}, {"app_ids", {id}}})["id"];
  std::vector<json> jobs;
  for (int i = 0; i < 4; ++i) jobs.push_back(svc.create_allocation(me, pid, {{"algorithm", "ERICH"}}));
  REQUIRE(svc.wait_idle(10s));
  std::string prev;
  for (const auto& j : jobs) {
    const auto done = svc.get_job(me, j["id"]);
    CHECK(done["status"] == "Completed");
    const auto started = done["started_at"].get<std::string>();
    CHECK(started >= prev);
    prev = started;
  }
}

TEST_CASE("persistence across restart") {
  TempDir tmp;
  const auto cfg = make_config(tmp.path);
  std::string me, token, app_id, pid, alloc_id;
  json app_before, pf_before, alloc_before;
  {
    Service svc(cfg);
    svc.register_account({{"email", "a@example.com"}, {"username", "a"}, {"password", "password1"}});
    token = svc.login({{"email", "a@example.com"}, {"password", "password1"}})["token"];
    me = svc.authenticate(token);
    app_before = svc.create_application(me, app_body("db", 2, 0, 4));
    app_id = app_before["id"];
    pf_before = svc.create_portfolio(
        me, {{"name", "p"}, {"providers", {"AWS"}}, {"q_min", 0.95}, {"app_ids", {app_id}}});
    pid = pf_before["id"];
    alloc_id = svc.create_allocation(me, pid, {{"algorithm", "ERICH"}})["allocation_id"];
    REQUIRE(svc.wait_idle(10s));
    alloc_before = svc.get_allocation(me, alloc_id);
  }

  // A job caught mid-run and one still queued when the process died.
  {
    DocumentStore store(cfg.data_dir);
    auto alloc_doc = *store.get("allocations", alloc_id);
    auto job = *store.get("jobs", alloc_doc["job_id"].get<std::string>());
    auto running = job;
    running["id"] = "job_running";
    running["status"] = "Running";
    running["allocation_id"] = "alloc_running";
    auto a_running = alloc_doc;
    a_running["id"] = "alloc_running";
    a_running["job_id"] = "job_running";
    a_running["status"] = "Pending";
    auto pending = job;
    pending["id"] = "job_pending";
    pending["status"] = "Pending";
    pending["allocation_id"] = "alloc_pending";
    pending["seq"] = 1000;
    auto a_pending = a_running;
    a_pending["id"] = "alloc_pending";
    a_pending["job_id"] = "job_pending";
    store.put("jobs", "job_running", running);
    store.put("allocations", "alloc_running", a_running);
    store.put("jobs", "job_pending", pending);
    store.put("allocations", "alloc_pending", a_pending);
  }

  Service svc(cfg);
  CHECK(svc.authenticate(token) == me);
  CHECK(svc.list_applications(me)[0] == app_before);
  CHECK(svc.get_portfolio(me, pid) == pf_before);
  CHECK(svc.get_allocation(me, alloc_id) == alloc_before);
  REQUIRE(svc.wait_idle(10s));
  const auto interrupted = svc.get_job(me, "job_running");
  CHECK(interrupted["status"] == "Failed");
  CHECK(interrupted["error"].get<std::string>().find("restart") != std::string::npos);
  CHECK(svc.get_allocation(me, "alloc_running")["status"] == "Failed");
  CHECK(svc.get_job(me, "job_pending")["status"] == "Completed");
  CHECK(svc.get_allocation(me, "alloc_pending")["total_cost"].get<double>() == doctest::Approx(4.0));

  // New ids keep increasing after a restart.
  const auto later = svc.create_application(me, app_body("later", 1, 0, 2));
  CHECK(svc.list_applications(me).back()["id"] == later["id"]);
}

TEST_CASE("http round trip") {
  TempDir tmp;
  Service svc(make_config(tmp.path));
  HttpServer server(svc);
  const int port = server.start();
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);
  auto post = [&](const std::string& path, const json& body, const std::string& token = {}) {
    httplib::Headers h;
    if (!token.empty()) h.emplace("Authorization", "Bearer " + token);
    return cli.Post(path, h, body.dump(), "application/json");
  };

  auto r = post("/api/register", {{"email", "h@example.com"}, {"username", "h"}, {"password", "password1"}});
  REQUIRE(r);
  CHECK(r->status == 201);
  r = post("/api/register", {{"email", "h@example.com"}, {"username", "h"}, {"password", "password1"}});
  CHECK(r->status == 409);
  CHECK(json::parse(r->body)["error"]["code"] == "conflict");
  r = post("/api/login", {{"email", "h@example.com"}, {"password", "wrong-pass"}});
  CHECK(r->status == 401);
  r = post("/api/login", {{"email", "h@example.com"}, {"password", "password1"}});
  REQUIRE(r->status == 200);
  const auto token = json::parse(r->body)["token"].get<std::string>();
  const httplib::Headers auth{{"Authorization", "Bearer " + token}};

  CHECK(cli.Get("/api/applications")->status == 401);
  r = cli.Get("/api/instances?providers=AWS&markets=Reserved,Spot", auth);
  REQUIRE(r->status == 200);
  CHECK(json::parse(r->body).size() == 2);
  CHECK(cli.Get("/api/instances?providers=Nimbus", auth)->status == 400);
  CHECK(cli.Get("/api/instances?min_capacity=abc", auth)->status == 400);

  r = post("/api/applications", app_body("db", 2, 0, 4), token);
  REQUIRE(r->status == 201);
  const auto app_id = json::parse(r->body)["id"].get<std::string>();
  r = post("/api/applications", app_body("bad", 2, 4, 1), token);
  CHECK(r->status == 400);
  CHECK_FALSE(json::parse(r->body)["error"]["field"].is_null());
  r = cli.Post("/api/applications", auth, "{not json", "application/json");
  CHECK(r->status == 400);
  CHECK(post("/api/applications/" + app_id + "/copy", json::object(), token)->status == 201);
  CHECK(json::parse(cli.Get("/api/applications", auth)->body).size() == 2);

  r = post("/api/portfolios",
           {{"name", "p"}, {"providers", {"AWS"}}, {"q_min", 0.95}, {"app_ids", {app_id}}}, token);
  REQUIRE(r->status == 201);
  const auto pid = json::parse(r->body)["id"].get<std::string>();
  r = cli.Put("/api/applications/" + app_id, auth, app_body("db", 2, 0, 4).dump(), "application/json");
  CHECK(r->status == 200);
  CHECK(json::parse(cli.Get("/api/portfolios", auth)->body)[0]["version"] == 2);

  r = post("/api/portfolios/" + pid + "/allocations", {{"algorithm", "ERICH"}}, token);
  REQUIRE(r->status == 201);
  const auto job = json::parse(r->body);
  REQUIRE(svc.wait_idle(10s));
  r = cli.Get("/api/jobs/" + job["id"].get<std::string>(), auth);
  CHECK(json::parse(r->body)["status"] == "Completed");
  r = cli.Get("/api/portfolios/" + pid + "/allocations", auth);
  const auto allocs = json::parse(r->body);
  REQUIRE(allocs.size() == 1);
  CHECK(allocs[0]["portfolio_version"] == 2);
  CHECK(allocs[0]["total_cost"].get<double>() == doctest::Approx(4.0));
  CHECK(cli.Delete("/api/allocations/" + job["allocation_id"].get<std::string>(), auth)->status == 200);
  CHECK(cli.Delete("/api/allocations/" + job["allocation_id"].get<std::string>(), auth)->status == 404);
  CHECK(cli.Delete("/api/portfolios/" + pid, auth)->status == 200);
  CHECK(cli.Delete("/api/applications/" + app_id, auth)->status == 200);
  CHECK(cli.Get("/api/nothing", auth)->status == 404);

  CHECK(post("/api/logout", json::object(), token)->status == 200);
  CHECK(cli.Get("/api/applications", auth)->status == 401);
  server.stop();
}

TEST_CASE("static assets") {
  TempDir tmp;
  auto cfg = make_config(tmp.path);
  fs::create_directories(tmp.path / "www");
  std::ofstream(tmp.path / "www" / "index.html") << "<html>hi</html>";
  cfg.static_dir = tmp.path / "www";
  Service svc(cfg);
  HttpServer server(svc);
  const int port = server.start();
  httplib::Client cli("127.0.0.1", port);
  auto r = cli.Get("/index.html");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->body == "<html>hi</html>");
  CHECK(cli.Get("/api/applications")->status == 401);
}
