#include "kgintent/service.hpp"

#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <mutex>
#include <regex>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "kgintent/ntriples.hpp"
#include "kgintent/pattern.hpp"
#include "kgintent/profiler.hpp"
#include "kgintent/synth.hpp"
#include "kgintent/vocab.hpp"

namespace kgintent {

namespace v = vocab;
using nlohmann::json;

ServiceConfig ServiceConfig::from_json(const std::string& text) {
  ServiceConfig c;
  json j = json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("service config must be a JSON object");
  auto path = [&](const char* key, std::optional<std::filesystem::path>& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<std::string>();
  };
  path("store", c.store);
  path("checkpoint", c.checkpoint);
  path("snapshot", c.snapshot);
  path("templates", c.templates);
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  c.seed = j.value("seed", c.seed);
  c.feedback_queue = j.value("feedback_queue", c.feedback_queue);
  c.tune.epochs = j.value("fine_tune_epochs", c.tune.epochs);
  return c;
}

Graph load_store(const ServiceConfig& cfg) {
  if (cfg.store) return load_ntriples(*cfg.store);
  SynthConfig synth;
  synth.seed = cfg.seed;
  return synthesize_full(Schema::data_analytics(), synth);
}

namespace {

class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

HttpResponse reply(int status, const json& body) { return {status, body.dump()}; }

json profile_json(const DatasetProfile& p) {
  json j = {{"name", p.name},
            {"n_instances", p.n_instances},
            {"n_features", p.n_features},
            {"n_numeric", p.n_numeric},
            {"n_categorical", p.n_categorical},
            {"pct_missing", p.pct_missing},
            {"target_type", std::string(target_type_name(p.target_type))}};
  if (p.n_classes) j["n_classes"] = *p.n_classes;
  if (p.imbalance) j["imbalance"] = *p.imbalance;
  if (p.std_target) j["std_target"] = *p.std_target;
  return j;
}

json parse_body(const std::string& body) {
  try {
    json j = json::parse(body.empty() ? "{}" : body);
    if (!j.is_object()) throw HttpError(400, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw HttpError(400, std::string("malformed JSON: ") + e.what());
  }
}

json history_json(const TrainHistory& h) {
  json valid = json::array();
  for (const auto& [epoch, value] : h.valid_hits3) valid.push_back({epoch, value});
  return {{"epoch_loss", h.epoch_loss},
          {"valid_hits3", valid},
          {"best_epoch", h.best_epoch},
          {"epochs_run", h.epochs_run},
          {"early_stopped", h.early_stopped}};
}

struct Job {
  int id = 0;
  std::string state = "queued";  // queued, running, done, diverged, failed
  ModelConfig config;
  TrainHistory history;
  std::string error;
  std::optional<json> report;
};

}  // namespace

struct Service::Impl {
  ServiceConfig cfg;
  const Schema& schema = Schema::data_analytics();
  TemplateSet templates = TemplateSet::defaults();

  mutable std::shared_mutex graph_mu;
  Graph g;
  std::size_t next_task = 1;
  std::size_t next_upload = 1;

  mutable std::mutex model_mu;
  std::shared_ptr<const LpModel> model;

  std::mutex jobs_mu;
  std::map<int, Job> jobs;
  int next_job = 1;
  bool training = false;
  std::optional<int> last_report_job;

  std::mutex work_mu;
  std::condition_variable work_cv;
  std::deque<std::function<void()>> work;
  std::size_t pending_tunes = 0;
  bool busy = false;
  bool stopping = false;
  std::thread worker;

  httplib::Server server;
  bool bound = false;

  std::shared_ptr<const LpModel> current_model() const {
    std::lock_guard lock(model_mu);
    return model;
  }
  void set_model(std::shared_ptr<const LpModel> m) {
    std::lock_guard lock(model_mu);
    model = std::move(m);
  }

  void enqueue(std::function<void()> fn) {
    {
      std::lock_guard lock(work_mu);
      work.push_back(std::move(fn));
    }
    work_cv.notify_all();
  }

  void worker_loop() {
    for (;;) {
      std::function<void()> fn;
      {
        std::unique_lock lock(work_mu);
        work_cv.wait(lock, [&] { return stopping || !work.empty(); });
        if (stopping && work.empty()) return;
        fn = std::move(work.front());
        work.pop_front();
        busy = true;
      }
      fn();
      {
        std::lock_guard lock(work_mu);
        busy = false;
      }
      work_cv.notify_all();
    }
  }

  // --- handlers ---------------------------------------------------------

  HttpResponse get_datasets() {
    std::shared_lock lock(graph_mu);
    json out = json::array();
    for (const auto& d : instances_of(g, iri_term(v::kDataset))) {
      json item = {{"dataset", d.value()}};
      if (auto p = read_profile(g, d)) item["profile"] = profile_json(*p);
      out.push_back(item);
    }
    return reply(200, out);
  }

  HttpResponse post_dataset(const HttpRequest& req) {
    std::string csv = req.body;
    if (auto it = req.files.find("file"); it != req.files.end()) csv = it->second;
    auto param = [&](const char* key) -> std::optional<std::string> {
      auto it = req.params.find(key);
      return it == req.params.end() ? std::nullopt : std::optional<std::string>(it->second);
    };
    auto target = param("target");
    if (!target || target->empty()) throw HttpError(400, "the target column name is required (target=...)");
    if (csv.empty()) throw HttpError(400, "no CSV content");
    std::string name;
    if (auto n = param("name")) {
      name = *n;
    } else {
      std::lock_guard lock(jobs_mu);
      name = "upload_" + std::to_string(next_upload++);
    }
    if (!valid_iri(dataset_iri(name))) throw HttpError(400, "dataset name is not usable in an IRI: " + name);
    ProfileOptions opts;
    if (auto d = param("delimiter"); d && d->size() == 1) opts.delimiter = (*d)[0];
    DatasetProfile p;
    try {
      std::istringstream in(csv);
      p = profile(read_table(in, opts.delimiter), *target, name, opts);
    } catch (const ProfileError& e) {
      throw HttpError(400, e.what());
    }
    std::unique_lock lock(graph_mu);
    Term d = annotate(g, p, schema);
    return reply(201, {{"dataset", d.value()}, {"profile", profile_json(p)}});
  }

  HttpResponse post_recommend(const HttpRequest& req) {
    json j = parse_body(req.body);
    TaskContext ctx;
    try {
      json c = j.value("context", json::object());
      c["user"] = j.at("user");
      ctx = context_from_json(c.dump());
    } catch (const json::exception& e) {
      throw HttpError(400, std::string("bad request: ") + e.what());
    }
    auto target = parse_target(j.value("target", std::string("intent")));
    if (!target) throw HttpError(400, "target must be intent, metric or constraint");
    auto method = parse_method(j.value("method", std::string("auto")));
    if (!method) throw HttpError(400, "method must be lp, query or auto");
    AnticipateOptions opts;
    opts.k = j.value("k", std::size_t{3});
    if (opts.k == 0) throw HttpError(400, "k must be >= 1");
    opts.filter = j.value("filter", true);
    opts.fine_tune = j.value("fine_tune", true);
    opts.tune = cfg.tune;
    auto model = current_model();
    std::shared_lock lock(graph_mu);
    if (ctx.dataset && !g.contains({Term::iri(*ctx.dataset), iri_term(v::kType), iri_term(v::kDataset)})) {
      throw HttpError(404, "unknown dataset " + *ctx.dataset);
    }
    try {
      return reply(200, json::parse(recommend(g, schema, model.get(), ctx, *target, *method, opts, templates).to_json()));
    } catch (const NoRecommendation& e) {
      throw HttpError(404, e.what());
    }
  }

  HttpResponse post_task(const HttpRequest& req) {
    Submission sub;
    try {
      sub = Submission::from_json(req.body);
    } catch (const InvalidInteraction& e) {
      throw HttpError(400, e.what());
    }
    {
      std::shared_lock lock(graph_mu);
      if (!g.contains({Term::iri(sub.dataset), iri_term(v::kType), iri_term(v::kDataset)})) {
        throw HttpError(404, "unknown dataset " + sub.dataset);
      }
      check_submission(schema, g, sub);
    }
    ExecutionResult exec = stub_execute(schema, sub, cfg.seed);
    std::unique_lock lock(graph_mu);
    std::string id;
    do {
      char buf[32];
      std::snprintf(buf, sizeof buf, "req-%05zu", next_task++);
      id = buf;
    } while (g.contains({Term::iri("task/" + id), iri_term(v::kType), iri_term(v::kTask)}));
    InteractionRecord rec{id, sub, exec.workflow, exec.evaluation, std::nullopt};
    annotate_interaction(g, schema, rec);
    return reply(201, {{"task_id", id},
                       {"task", "task/" + id},
                       {"workflow", exec.workflow},
                       {"evaluation", {{"metric", exec.evaluation.metric}, {"value", exec.evaluation.value}}}});
  }

  HttpResponse post_feedback(const HttpRequest& req) {
    json j = parse_body(req.body);
    std::string id;
    Feedback fb;
    try {
      id = j.at("task_id").get<std::string>();
      fb.score = j.at("score").get<int>();
      fb.tags = j.value("tags", std::vector<std::string>{});
    } catch (const json::exception& e) {
      throw HttpError(400, std::string("bad feedback: ") + e.what());
    }
    if (id.rfind("task/", 0) == 0) id = id.substr(5);
    std::size_t added = 0;
    {
      std::unique_lock lock(graph_mu);
      if (!g.contains({Term::iri("workflow/" + id), iri_term(v::kType), iri_term(v::kWorkflow)})) {
        throw HttpError(404, "unknown task " + id);
      }
      added = annotate_feedback(g, schema, id, fb).size();
    }
    std::string tune = "no_model";
    if (current_model()) {
      std::lock_guard lock(work_mu);
      if (pending_tunes >= cfg.feedback_queue) {
        tune = "skipped";
      } else {
        ++pending_tunes;
        work.push_back([this, id] { fine_tune_interaction(id); });
        tune = "queued";
      }
    }
    work_cv.notify_all();
    return reply(200, {{"task_id", id}, {"triples_added", added}, {"fine_tune", tune}});
  }

  // Folds one annotated interaction into the current embeddings.
  void fine_tune_interaction(const std::string& id) {
    auto base = current_model();
    if (base) {
      Graph part;
      {
        std::shared_lock lock(graph_mu);
        std::vector<Term> subjects = {Term::iri("task/" + id), Term::iri("workflow/" + id),
                                      Term::iri("evaluation/" + id), Term::iri("feedback/" + id)};
        for (const auto& t : g.find(Term::iri("task/" + id), std::nullopt, std::nullopt)) {
          if (t.object.is_iri()) subjects.push_back(t.object);
        }
        for (const auto& t : g.find(Term::iri("workflow/" + id), iri_term(v::kHasStep), std::nullopt)) {
          subjects.push_back(t.object);
        }
        for (const auto& s : subjects) {
          for (const auto& t : g.find(s, std::nullopt, std::nullopt)) part.add(t);
        }
      }
      std::vector<NamedFact> fresh;
      for (const auto& nf : view_facts(part, base->encoder)) {
        if (!base->state.resolve(nf.head, nf.rel, nf.tail)) fresh.push_back(nf);
      }
      if (!fresh.empty()) {
        auto next = std::make_shared<LpModel>(*base);
        auto added = fine_tune(next->state, next->train, fresh, cfg.tune);
        next->train.insert(next->train.end(), added.begin(), added.end());
        set_model(std::move(next));
      }
    }
    std::lock_guard lock(work_mu);
    --pending_tunes;
  }

  HttpResponse post_train(const HttpRequest& req) {
    ModelConfig mc;
    try {
      mc = ModelConfig::from_json(req.body.empty() ? "{}" : req.body);
    } catch (const std::exception& e) {
      throw HttpError(400, std::string("bad model config: ") + e.what());
    }
    int id = 0;
    {
      std::lock_guard lock(jobs_mu);
      if (training) throw HttpError(503, "a training job is already queued or running");
      training = true;
      id = next_job++;
      jobs[id].id = id;
      jobs[id].config = mc;
    }
    enqueue([this, id, mc] { run_training(id, mc); });
    return reply(202, {{"job_id", id}, {"state", "queued"}});
  }

  void run_training(int id, const ModelConfig& mc) {
    {
      std::lock_guard lock(jobs_mu);
      jobs[id].state = "running";
    }
    Graph snapshot;
    {
      std::shared_lock lock(graph_mu);
      snapshot = g;
    }
    std::string state = "done", error;
    TrainHistory hist;
    std::optional<json> report;
    try {
      auto data = prepare_lp_data(snapshot, schema, cfg.split);
      TrainOptions to;
      to.stop = cfg.stop;
      to.on_epoch = [this, id](std::size_t epoch, double loss) {
        std::lock_guard lock(jobs_mu);
        jobs[id].history.epoch_loss.push_back(loss);
        jobs[id].history.epochs_run = epoch;
      };
      auto [trained, h] = train(data.view.entities, data.view.relations, data.split.train, data.split.valid, mc, to);
      hist = h;
      const auto test = data.view.named(data.split.test);
      EvalOptions raw, filtered;
      filtered.mode = RankMode::kRangeFiltered;
      filtered.candidates = &data.candidates;
      report = json{{"job_id", id},
                    {"config", json::parse(mc.to_json())},
                    {"test_triples", test.size()},
                    {"raw", json::parse(evaluate(trained, test, raw).to_json())},
                    {"filtered", json::parse(evaluate(trained, test, filtered).to_json())}};
      set_model(std::make_shared<LpModel>(LpModel::from_graph(std::move(trained), data.view.encoder, snapshot)));
    } catch (const DivergenceError& e) {
      state = "diverged";
      error = e.what();
    } catch (const std::exception& e) {
      state = "failed";
      error = e.what();
    }
    std::lock_guard lock(jobs_mu);
    Job& job = jobs[id];
    job.state = state;
    job.error = error;
    if (state == "done") {
      job.history = hist;
      job.report = report;
      last_report_job = id;
    }
    training = false;
  }

  HttpResponse get_train(int id) {
    std::lock_guard lock(jobs_mu);
    auto it = jobs.find(id);
    if (it == jobs.end()) throw HttpError(404, "unknown training job " + std::to_string(id));
    const Job& job = it->second;
    json out = {{"job_id", id},
                {"state", job.state},
                {"config", json::parse(job.config.to_json())},
                {"history", history_json(job.history)}};
    if (!job.error.empty()) out["error"] = job.error;
    return reply(200, out);
  }

  HttpResponse get_report() {
    std::lock_guard lock(jobs_mu);
    if (!last_report_job) throw HttpError(404, "no completed training job");
    return reply(200, *jobs[*last_report_job].report);
  }

  HttpResponse get_stats() {
    std::shared_lock lock(graph_mu);
    std::set<Term> entities, relations;
    std::map<std::string, std::size_t> classes;
    const Term type = iri_term(v::kType);
    for (const auto& t : g.triples()) {
      entities.insert(t.subject);
      if (t.object.is_iri()) entities.insert(t.object);
      relations.insert(t.relation);
      if (t.relation == type) ++classes[t.object.value()];
    }
    return reply(200, {{"triples", g.size()},
                       {"entities", entities.size()},
                       {"relations", relations.size()},
                       {"classes", classes},
                       {"model_loaded", current_model() != nullptr}});
  }

  HttpResponse route(const HttpRequest& req) {
    static const std::regex kTrainJob(R"(^/train/(\d+)$)");
    std::string path = req.path;
    if (auto q = path.find('?'); q != std::string::npos) path.resize(q);
    if (path.size() > 1 && path.back() == '/') path.pop_back();
    const std::string& m = req.method;
    std::smatch match;
    if (path == "/datasets") {
      if (m == "GET") return get_datasets();
      if (m == "POST") return post_dataset(req);
    } else if (path == "/recommend") {
      if (m == "POST") return post_recommend(req);
    } else if (path == "/tasks") {
      if (m == "POST") return post_task(req);
    } else if (path == "/feedback") {
      if (m == "POST") return post_feedback(req);
    } else if (path == "/train") {
      if (m == "POST") return post_train(req);
    } else if (std::regex_match(path, match, kTrainJob)) {
      if (m == "GET") return get_train(std::stoi(match[1]));
    } else if (path == "/eval/report") {
      if (m == "GET") return get_report();
    } else if (path == "/kg/stats") {
      if (m == "GET") return get_stats();
    } else {
      throw HttpError(404, "no route for " + m + " " + path);
    }
    throw HttpError(405, "method " + m + " not allowed on " + path);
  }
};

Service::Service(Graph g, std::optional<LpModel> model, ServiceConfig cfg) : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  impl_->g = std::move(g);
  if (model) impl_->model = std::make_shared<LpModel>(std::move(*model));
  if (impl_->cfg.templates) {
    std::ifstream in(*impl_->cfg.templates);
    if (!in) throw std::runtime_error("cannot read templates " + impl_->cfg.templates->string());
    std::stringstream buf;
    buf << in.rdbuf();
    impl_->templates = TemplateSet::from_json(buf.str());
  }
  impl_->worker = std::thread([this] { impl_->worker_loop(); });
}

Service::~Service() {
  stop();
  {
    std::lock_guard lock(impl_->work_mu);
    impl_->stopping = true;
  }
  impl_->work_cv.notify_all();
  impl_->worker.join();
  if (impl_->cfg.snapshot) {
    try {
      save_ntriples(graph(), *impl_->cfg.snapshot);
    } catch (const std::exception&) {
    }
  }
}

HttpResponse Service::handle(const HttpRequest& req) {
  try {
    return impl_->route(req);
  } catch (const HttpError& e) {
    return reply(e.status(), {{"error", e.what()}});
  } catch (const ContradictoryConstraints& e) {
    return reply(409, {{"error", e.what()}});
  } catch (const std::invalid_argument& e) {
    return reply(400, {{"error", e.what()}});
  } catch (const std::exception& e) {
    return reply(500, {{"error", e.what()}});
  }
}

int Service::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  auto bridge = [this](const httplib::Request& r, httplib::Response& res) {
    HttpRequest req;
    req.method = r.method;
    req.path = r.path;
    req.body = r.body;
    for (const auto& [k, val] : r.params) req.params[k] = val;
    for (const auto& [k, f] : r.files) {
      if (f.filename.empty()) req.params[k] = f.content;
      else req.files[k] = f.content;
    }
    if (r.is_multipart_form_data()) req.body.clear();
    HttpResponse out = handle(req);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  s.Get(".*", bridge);
  s.Post(".*", bridge);
  int bound_port = port;
  if (port == 0) {
    bound_port = s.bind_to_any_port(host);
  } else if (!s.bind_to_port(host, port)) {
    bound_port = -1;
  }
  if (bound_port < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound_port;
}

void Service::run() {
  if (!impl_->bound) throw std::logic_error("bind() before run()");
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_->bound) impl_->server.stop();
}

bool Service::wait_idle(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->work_mu);
  return impl_->work_cv.wait_for(lock, timeout, [&] { return impl_->work.empty() && !impl_->busy; });
}

Graph Service::graph() const {
  std::shared_lock lock(impl_->graph_mu);
  return impl_->g;
}

bool Service::has_model() const { return impl_->current_model() != nullptr; }

}  // namespace kgintent
