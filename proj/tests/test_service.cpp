#include <doctest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "kgintent/service.hpp"
#include "kgintent/synth.hpp"

using namespace kgintent;
using nlohmann::json;

namespace {

const std::string kData = TEST_DATA_DIR;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Graph small_corpus() {
  SynthConfig cfg;
  cfg.n_users = 8;
  cfg.n_datasets_cat = 10;
  cfg.n_datasets_num = 6;
  cfg.tasks_per_dataset = 4;
  return synthesize_full(Schema::data_analytics(), cfg);
}

HttpResponse call(Service& s, const std::string& method, const std::string& path, const json& body = json::object(),
                  std::map<std::string, std::string> params = {}) {
  HttpRequest req;
  req.method = method;
  req.path = path;
  req.body = body.is_string() ? body.get<std::string>() : body.dump();
  req.params = std::move(params);
  return s.handle(req);
}

const char* kSmallModel = R"({"model":"TransH","dim":8,"lr":0.01,"npp":4,"max_epochs":30})";

json submission(const std::string& dataset) {
  return {{"user", "user/u01"},
          {"dataset", dataset},
          {"intent", "Classification"},
          {"metric", "Accuracy"},
          {"constraints", {{{"algorithm", "SVC"}, {"action", "use"}, {"hard", true}}}}};
}

}  // namespace

TEST_CASE("datasets can be uploaded and listed") {
  Service s(small_corpus());
  auto up = call(s, "POST", "/datasets", json(slurp(kData + "/iris.csv")), {{"target", "class"}, {"name", "iris"}});
  REQUIRE(up.status == 201);
  auto j = json::parse(up.body);
  CHECK(j["dataset"] == "dataset/iris");
  CHECK(j["profile"]["n_instances"] == 150);
  CHECK(j["profile"]["n_classes"] == 3);

  auto list = json::parse(call(s, "GET", "/datasets").body);
  CHECK(list.size() == 17);
  CHECK(call(s, "POST", "/datasets", json(std::string("a,b\n1,2\n"))).status == 400);  // no target
  CHECK(call(s, "POST", "/datasets", json(std::string("a,b\n1,2\n")), {{"target", "zzz"}}).status == 400);
}

TEST_CASE("error statuses") {
  Service s(small_corpus());
  CHECK(call(s, "GET", "/nowhere").status == 404);
  CHECK(call(s, "POST", "/kg/stats").status == 405);
  CHECK(call(s, "POST", "/recommend", json(std::string("{not json"))).status == 400);
  CHECK(call(s, "POST", "/recommend", {{"user", "user/u01"}, {"target", "colour"}}).status == 400);
  CHECK(call(s, "POST", "/recommend", {{"user", "user/u01"}, {"context", {{"dataset", "dataset/none"}}}}).status ==
        404);
  // metric without intent and no model: nothing can answer
  CHECK(call(s, "POST", "/recommend", {{"user", "user/u01"}, {"target", "metric"}}).status == 404);
  CHECK(call(s, "POST", "/tasks", submission("dataset/none")).status == 404);
  CHECK(call(s, "POST", "/tasks", {{"user", "user/u01"}}).status == 400);
  auto contra = submission("dataset/synth_cat_001");
  contra["constraints"].push_back({{"algorithm", "SVC"}, {"action", "exclude"}});
  CHECK(call(s, "POST", "/tasks", contra).status == 409);
  CHECK(call(s, "POST", "/feedback", {{"task_id", "req-99999"}, {"score", 3}}).status == 404);
  CHECK(call(s, "GET", "/train/7").status == 404);
  CHECK(call(s, "GET", "/eval/report").status == 404);
  CHECK(call(s, "POST", "/train", json(std::string(R"({"dim":0})"))).status == 400);
}

TEST_CASE("query recommendations, task submission and feedback without a model") {
  Service s(small_corpus());
  auto r = call(s, "POST", "/recommend",
                {{"user", "user/u01"}, {"context", {{"dataset", "dataset/synth_cat_001"}}}, {"method", "query"}});
  REQUIRE(r.status == 200);
  auto rec = json::parse(r.body);
  CHECK(rec["method"] == "query");
  CHECK(!rec["items"].empty());

  auto t = call(s, "POST", "/tasks", submission("dataset/synth_cat_001"));
  REQUIRE(t.status == 201);
  auto task = json::parse(t.body);
  CHECK(task["task_id"] == "req-00001");
  CHECK(task["workflow"].back() == "SVC");
  CHECK(task["evaluation"]["metric"] == "Accuracy");
  auto t2 = json::parse(call(s, "POST", "/tasks", submission("dataset/synth_cat_001")).body);
  CHECK(t2["task_id"] == "req-00002");

  CHECK(call(s, "POST", "/feedback", {{"task_id", "req-00001"}, {"score", 0}}).status == 400);
  auto fb = call(s, "POST", "/feedback", {{"task_id", "req-00001"}, {"score", 5}, {"tags", {"good"}}});
  REQUIRE(fb.status == 200);
  CHECK(json::parse(fb.body)["fine_tune"] == "no_model");
  const Graph g = s.graph();
  CHECK(g.contains({Term::iri("task/req-00001"), Term::iri("hasIntent"), Term::iri("Classification")}));
  CHECK(g.contains({Term::iri("workflow/req-00001"), Term::iri("hasFeedback"), Term::iri("feedback/req-00001")}));
}

TEST_CASE("training jobs run in the background and feed recommendations") {
  Service s(small_corpus());
  auto job = call(s, "POST", "/train", json(std::string(kSmallModel)));
  REQUIRE(job.status == 202);
  const int id = json::parse(job.body)["job_id"];
  CHECK(call(s, "POST", "/train", json(std::string(kSmallModel))).status == 503);
  REQUIRE(s.wait_idle());
  auto state = json::parse(call(s, "GET", "/train/" + std::to_string(id)).body);
  CHECK(state["state"] == "done");
  CHECK(state["history"]["epoch_loss"].size() == state["history"]["epochs_run"].get<std::size_t>());
  CHECK(s.has_model());
  auto report = json::parse(call(s, "GET", "/eval/report").body);
  CHECK(report["raw"]["mode"] == "raw");
  CHECK(report["filtered"]["mode"] == "filtered");
  CHECK(report["filtered"]["tail"]["hits3"].get<double>() >= report["raw"]["tail"]["hits3"].get<double>());

  auto r = call(s, "POST", "/recommend",
                {{"user", "user/new"}, {"context", {{"dataset", "dataset/synth_num_002"}}}, {"method", "lp"}, {"k", 2}});
  REQUIRE(r.status == 200);
  auto rec = json::parse(r.body);
  CHECK(rec["method"] == "lp");
  CHECK(rec["items"].size() == 2);

  auto t = json::parse(call(s, "POST", "/tasks", submission("dataset/synth_num_002")).body);
  auto fb = json::parse(call(s, "POST", "/feedback", {{"task_id", t["task_id"]}, {"score", 2}}).body);
  CHECK(fb["fine_tune"] == "queued");
  REQUIRE(s.wait_idle());
  CHECK(s.has_model());

  // a diverging configuration is reported, not fatal
  auto bad = call(s, "POST", "/train", json(std::string(R"({"model":"RotatE","dim":4,"lr":1e300,"max_epochs":5})")));
  REQUIRE(bad.status == 202);
  REQUIRE(s.wait_idle());
  auto bad_state = json::parse(call(s, "GET", "/train/" + std::to_string(json::parse(bad.body)["job_id"].get<int>())).body);
  CHECK(bad_state["state"] == "diverged");
}

TEST_CASE("the HTTP listener serves the same API") {
  auto snapshot = std::filesystem::temp_directory_path() / "kgintent_service_snapshot.nt";
  std::filesystem::remove(snapshot);
  {
    ServiceConfig cfg;
    cfg.snapshot = snapshot;
    Service s(small_corpus(), std::nullopt, cfg);
    const int port = s.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread server([&] { s.run(); });
    httplib::Client cli("127.0.0.1", port);
    cli.set_read_timeout(30, 0);

    auto stats = cli.Get("/kg/stats");
    REQUIRE(stats);
    CHECK(stats->status == 200);
    CHECK(json::parse(stats->body)["triples"].get<std::size_t>() > 0);

    httplib::MultipartFormDataItems form = {{"file", slurp(kData + "/wine.csv"), "wine.csv", "text/csv"},
                                            {"target", "class", "", ""},
                                            {"name", "wine", "", ""}};
    auto up = cli.Post("/datasets", form);
    REQUIRE(up);
    CHECK(up->status == 201);
    CHECK(json::parse(up->body)["dataset"] == "dataset/wine");

    auto raw = cli.Post("/datasets?target=class&name=iris", slurp(kData + "/iris.csv"), "text/csv");
    REQUIRE(raw);
    CHECK(raw->status == 201);

    auto task = cli.Post("/tasks", submission("dataset/wine").dump(), "application/json");
    REQUIRE(task);
    CHECK(task->status == 201);
    auto bad = cli.Post("/tasks", "{", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    s.stop();
    server.join();
  }
  CHECK(std::filesystem::exists(snapshot));
  std::filesystem::remove(snapshot);
}
