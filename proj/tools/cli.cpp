#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgintent/anticipator.hpp"
#include "kgintent/lp_eval.hpp"
#include "kgintent/ntriples.hpp"
#include "kgintent/profiler.hpp"
#include "kgintent/service.hpp"
#include "kgintent/synth.hpp"

namespace kgintent::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Bad flags or flag combinations, detected before anything is written.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string store;
  std::uint64_t seed = 42;
  std::string out;

  // synth
  std::size_t users = 40, datasets_cat = 68, datasets_num = 28, tasks = 5;

  // profile / load
  std::string csv, target, name, delimiter = ",", in, save;

  // split
  double train_frac = 0.8, valid_frac = 0.1, test_frac = 0.1;
  std::uint64_t split_seed = 42;

  // model
  std::string model = "transh";
  std::size_t dim = 42;
  double lr = 0.0012;
  std::size_t npp = 50;
  double margin = 1.0;
  int norm = 2;
  std::size_t batch = 128;
  std::size_t epochs = 300;
  std::size_t frequency = 15, patience = 2;
  bool no_early_stop = false;

  // eval / grid / tpe
  std::string checkpoint;
  std::string mode = "raw";
  std::vector<std::string> models;
  std::vector<std::size_t> dims;
  std::vector<double> lrs;
  std::vector<std::size_t> npps;
  std::string cache;
  std::size_t trials = 100, startup = 10;
  bool random = false;
  std::vector<double> dim_range{2, 256}, lr_range{1e-4, 0.1}, npp_range{1, 100};

  // recommend
  std::string user, dataset, intent, metric, templates;
  std::vector<std::string> constraints;
  std::string rec_target = "intent", method = "auto";
  std::size_t k = 3;
  bool no_filter = false, no_fine_tune = false;

  // serve
  std::string host;
  int port = 0;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

// Values from --config fill every option the command line left unset. Keys
// are long flag names without dashes; a nested object under the verb name
// takes precedence over top-level keys.
void apply_config(CLI::App& sub, const json& cfg) {
  json merged = json::object();
  for (const auto& [k, v] : cfg.items()) {
    if (!v.is_object()) merged[k] = v;
  }
  if (cfg.contains(sub.get_name()) && cfg[sub.get_name()].is_object()) {
    for (const auto& [k, v] : cfg[sub.get_name()].items()) merged[k] = v;
  }
  auto as_text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (CLI::Option* opt : sub.get_options()) {
    if (opt->count() > 0 || opt->get_lnames().empty()) continue;
    const std::string key = opt->get_lnames().front();
    if (!merged.contains(key)) continue;
    const json& v = merged[key];
    if (v.is_array()) {
      for (const auto& x : v) opt->add_result(as_text(x));
    } else {
      opt->add_result(as_text(v));
    }
    opt->run_callback();
  }
}

ModelConfig model_config(const Options& o) {
  auto kind = parse_model(o.model);
  if (!kind) throw UsageError("unknown model '" + o.model + "'");
  ModelConfig c;
  c.model = *kind;
  c.dim = o.dim;
  c.lr = o.lr;
  c.npp = o.npp;
  c.margin = o.margin;
  c.norm = o.norm;
  c.batch_size = o.batch;
  c.max_epochs = o.epochs;
  c.seed = o.seed;
  try {
    c.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

EarlyStopConfig stop_config(const Options& o) {
  if (o.frequency == 0) throw UsageError("--frequency must be >= 1");
  return {!o.no_early_stop, o.frequency, o.patience};
}

SplitSpec split_spec(const Options& o) {
  SplitSpec s{o.train_frac, o.valid_frac, o.test_frac, o.split_seed};
  try {
    s.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return s;
}

RankMode rank_mode(const Options& o) {
  auto m = parse_mode(o.mode);
  if (!m) throw UsageError("--mode must be raw, filtered or known");
  return *m;
}

Graph load_graph(const Options& o, std::ostream& out) {
  if (!o.store.empty()) return load_ntriples(o.store);
  SynthConfig cfg;
  cfg.seed = o.seed;
  out << "no --store given; using the synthetic corpus (seed " << o.seed << ")\n";
  return synthesize_full(Schema::data_analytics(), cfg);
}

EvalOptions eval_options(RankMode mode, const LpData& data, std::vector<NamedFact>& known) {
  EvalOptions e;
  e.mode = mode;
  e.candidates = &data.candidates;
  if (mode == RankMode::kExcludeKnown) {
    known = data.view.named(data.view.facts);
    e.known = &known;
  }
  return e;
}

void print_report(std::ostream& out, const EvalReport& r) {
  out << std::fixed << std::setprecision(4);
  out << "mode " << mode_name(r.mode) << "\n";
  for (const auto& [side, m] : {std::pair{"tail", r.tail}, std::pair{"head", r.head}}) {
    out << "  " << side << ": Hits@1 " << m.hits1 << "  Hits@3 " << m.hits3 << "  Hits@10 " << m.hits10 << "  MR "
        << m.mean_rank << "  MRR " << m.mrr << "  (n=" << m.n << ")\n";
  }
  out.unsetf(std::ios::floatfield);
}

std::string named_tsv(const std::vector<NamedFact>& facts) {
  std::string s;
  for (const auto& f : facts) s += f.head + "\t" + f.rel + "\t" + f.tail + "\n";
  return s;
}

// --- verbs ---------------------------------------------------------------

int cmd_schema(const Options& o, std::ostream& out) {
  const Schema& schema = Schema::data_analytics();
  Graph g = schema.to_graph();
  auto bad = validate_all(schema, g);
  if (!o.out.empty()) save_ntriples(g, o.out);
  out << "schema: " << schema.classes().size() << " classes, " << schema.properties().size() << " properties, "
      << schema.intent_nodes().size() << " intent nodes, " << schema.metrics().size() << " metrics, " << g.size()
      << " triples, " << bad.size() << " violations\n";
  return bad.empty() ? kOk : kDataError;
}

int cmd_synth(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out is required");
  SynthConfig cfg;
  cfg.seed = o.seed;
  cfg.n_users = o.users;
  cfg.n_datasets_cat = o.datasets_cat;
  cfg.n_datasets_num = o.datasets_num;
  cfg.tasks_per_dataset = o.tasks;
  try {
    cfg.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Schema& schema = Schema::data_analytics();
  Graph g = synthesize_full(schema, cfg);
  save_ntriples(g, o.out);
  auto counts = count_corpus(g, schema.to_graph());
  out << "wrote " << g.size() << " triples to " << o.out << " (experiment " << counts.experiment
      << ", characteristic " << counts.characteristic << ", schema " << counts.schema << ")\n";
  return kOk;
}

int cmd_profile(const Options& o, std::ostream& out) {
  if (o.csv.empty() || o.target.empty()) throw UsageError("--csv and --target are required");
  if (o.delimiter.size() != 1) throw UsageError("--delimiter must be one character");
  if (!o.save.empty() && o.store.empty()) throw UsageError("--save needs --store");
  ProfileOptions popts;
  popts.delimiter = o.delimiter[0];
  const std::string name = o.name.empty() ? fs::path(o.csv).stem().string() : o.name;
  std::ifstream in(o.csv);
  if (!in) throw std::runtime_error("cannot read " + o.csv);
  DatasetProfile p = profile(read_table(in, popts.delimiter), o.target, name, popts);
  json j = {{"name", p.name},
            {"iri", dataset_iri(p.name)},
            {"n_instances", p.n_instances},
            {"n_features", p.n_features},
            {"n_numeric", p.n_numeric},
            {"n_categorical", p.n_categorical},
            {"pct_missing", p.pct_missing},
            {"target_type", std::string(target_type_name(p.target_type))}};
  if (p.n_classes) j["n_classes"] = *p.n_classes;
  if (p.imbalance) j["imbalance"] = *p.imbalance;
  if (p.std_target) j["std_target"] = *p.std_target;
  if (!o.out.empty()) write_file(o.out, j.dump(2) + "\n");
  out << j.dump(2) << "\n";
  if (!o.save.empty()) {
    Graph g = load_ntriples(o.store);
    annotate(g, p);
    save_ntriples(g, o.save);
    out << "annotated " << dataset_iri(p.name) << " into " << o.save << "\n";
  }
  return kOk;
}

int cmd_load(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.in.empty()) throw UsageError("--in is required");
  Graph g = load_ntriples(o.in);
  auto bad = validate_all(Schema::data_analytics(), g);
  for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 20); ++i) {
    err << to_string(bad[i].first) << ": " << bad[i].second.message << "\n";
  }
  if (!o.out.empty()) save_ntriples(g, o.out);
  out << "loaded " << g.size() << " triples from " << o.in << "; " << bad.size() << " schema violations\n";
  return bad.empty() ? kOk : kDataError;
}

int cmd_stats(const Options& o, std::ostream& out) {
  Graph g = load_graph(o, out);
  std::set<Term> entities, relations;
  std::map<std::string, std::size_t> classes;
  for (const auto& t : g.triples()) {
    entities.insert(t.subject);
    if (t.object.is_iri()) entities.insert(t.object);
    relations.insert(t.relation);
    if (t.relation.value() == "rdf:type") ++classes[t.object.value()];
  }
  const LpView view = build_view(g);
  json j = {{"triples", g.size()},
            {"entities", entities.size()},
            {"relations", relations.size()},
            {"classes", classes},
            {"lp_view", {{"facts", view.facts.size()}, {"entities", view.entities.size()}, {"relations", view.relations.size()}}}};
  if (!o.out.empty()) write_file(o.out, j.dump(2) + "\n");
  out << g.size() << " triples, " << entities.size() << " entities, " << relations.size() << " relations; view "
      << view.facts.size() << " facts over " << view.entities.size() << " entities and " << view.relations.size()
      << " relations\n";
  return kOk;
}

int cmd_split(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out (a directory) is required");
  const SplitSpec spec = split_spec(o);
  Graph g = load_graph(o, out);
  auto data = prepare_lp_data(g, Schema::data_analytics(), spec);
  const fs::path dir = o.out;
  write_file(dir / "train.tsv", named_tsv(data.view.named(data.split.train)));
  write_file(dir / "valid.tsv", named_tsv(data.view.named(data.split.valid)));
  write_file(dir / "test.tsv", named_tsv(data.view.named(data.split.test)));
  write_file(dir / "candidates.json", data.candidates.to_json());
  out << "train " << data.split.train.size() << ", valid " << data.split.valid.size() << ", test "
      << data.split.test.size() << " (realized test fraction " << data.split.realized_test() << ", "
      << data.split.moved_to_train << " moved to train for coverage)\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out (checkpoint path) is required");
  const ModelConfig cfg = model_config(o);
  const EarlyStopConfig stop = stop_config(o);
  const SplitSpec spec = split_spec(o);
  Graph g = load_graph(o, out);
  auto data = prepare_lp_data(g, Schema::data_analytics(), spec);
  TrainOptions to;
  to.stop = stop;
  out << "training " << model_name(cfg.model) << " dim " << cfg.dim << " lr " << cfg.lr << " npp " << cfg.npp
      << " on " << data.split.train.size() << " triples\n";
  auto [state, hist] = train(data.view.entities, data.view.relations, data.split.train, data.split.valid, cfg, to);
  const fs::path ckpt = o.out;
  const auto test = data.view.named(data.split.test);
  std::vector<NamedFact> known;
  json report = {{"config", json::parse(cfg.to_json())}, {"best_epoch", hist.best_epoch}, {"epochs_run", hist.epochs_run}};
  for (RankMode m : {RankMode::kRaw, RankMode::kRangeFiltered}) {
    auto r = evaluate(state, test, eval_options(m, data, known));
    report[std::string(mode_name(m))] = json::parse(r.to_json());
    print_report(out, r);
  }
  LpModel model = LpModel::from_graph(std::move(state), data.view.encoder, g);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  model.save(ckpt);
  write_file(ckpt.string() + ".history.csv", hist.to_csv());
  write_file(ckpt.string() + ".report.json", report.dump(2) + "\n");
  out << "epochs " << hist.epochs_run << " (best " << hist.best_epoch << (hist.early_stopped ? ", early stop" : "")
      << "); checkpoint " << ckpt.string() << "\n";
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
  const RankMode mode = rank_mode(o);
  const SplitSpec spec = split_spec(o);
  Graph g = load_graph(o, out);
  auto data = prepare_lp_data(g, Schema::data_analytics(), spec);
  LpModel model = LpModel::load(o.checkpoint, g);
  std::vector<NamedFact> known;
  auto r = evaluate(model.state, data.view.named(data.split.test), eval_options(mode, data, known));
  if (!o.out.empty()) write_file(o.out, r.to_json() + "\n");
  print_report(out, r);
  if (r.skipped) out << r.skipped << " test triples skipped (terms unknown to the checkpoint)\n";
  return kOk;
}

int cmd_grid(const Options& o, std::ostream& out) {
  const ModelConfig base = model_config(o);
  const RankMode mode = rank_mode(o);
  const EarlyStopConfig stop = stop_config(o);
  const SplitSpec spec = split_spec(o);
  SearchSpace space;
  for (const auto& m : o.models.empty() ? std::vector<std::string>{o.model} : o.models) {
    auto kind = parse_model(m);
    if (!kind) throw UsageError("unknown model '" + m + "'");
    space.models.push_back(*kind);
  }
  space.dims = o.dims.empty() ? std::vector<std::size_t>{o.dim} : o.dims;
  space.lrs = o.lrs.empty() ? std::vector<double>{o.lr} : o.lrs;
  space.npps = o.npps.empty() ? std::vector<std::size_t>{o.npp} : o.npps;
  try {
    space.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Graph g = load_graph(o, out);
  auto data = prepare_lp_data(g, Schema::data_analytics(), spec);
  GridOptions go;
  go.base = base;
  go.stop = stop;
  go.mode = mode;
  if (!o.cache.empty()) go.cache_dir = o.cache;
  go.on_row = [&](const GridRow& r) {
    out << model_name(r.config.model) << " dim " << r.config.dim << " lr " << r.config.lr << " npp " << r.config.npp
        << ": valid Hits@3 " << r.valid_hits3 << ", test tail Hits@3 " << r.report.tail.hits3
        << (r.diverged ? " (diverged)" : "") << (r.cached ? " (cached)" : "") << "\n";
  };
  auto rows = grid_search(data, space, go);
  if (!o.out.empty()) write_file(o.out, grid_csv(rows));
  return kOk;
}

int cmd_tpe(const Options& o, std::ostream& out) {
  ModelConfig base = model_config(o);
  const EarlyStopConfig stop = stop_config(o);
  const SplitSpec spec = split_spec(o);
  if (o.trials == 0) throw UsageError("--trials must be >= 1");
  auto range = [](const std::vector<double>& v, const char* flag) {
    if (v.size() != 2 || !(v[0] > 0) || !(v[0] <= v[1])) throw UsageError(std::string(flag) + " takes LO HI with 0 < LO <= HI");
    return Range{v[0], v[1]};
  };
  TpeSpace space;
  space.model = base.model;
  space.dim = range(o.dim_range, "--dim-range");
  space.lr = range(o.lr_range, "--lr-range");
  space.npp = range(o.npp_range, "--npp-range");
  Graph g = load_graph(o, out);
  auto data = prepare_lp_data(g, Schema::data_analytics(), spec);
  Objective f = [&](const ModelConfig& c) { return validation_objective(data, c, stop); };
  std::size_t n = 0;
  auto log = [&](const Trial& t) {
    out << "trial " << ++n << ": dim " << t.config.dim << " lr " << t.config.lr << " npp " << t.config.npp
        << " -> " << t.objective << (t.diverged ? " (diverged)" : "") << "\n";
  };
  SearchTrace trace;
  if (o.random) {
    trace = random_search(f, space, base, o.trials, o.seed);
    for (const auto& t : trace.trials) log(t);
  } else {
    TpeOptions to;
    to.n_iter = o.trials;
    to.n_startup = std::min(o.startup, o.trials);
    to.seed = o.seed;
    to.on_trial = log;
    trace = tpe_search(f, space, base, to);
  }
  if (!o.out.empty()) write_file(o.out, trace.to_jsonl());
  const Trial& best = trace.trials[trace.best];
  out << "best: dim " << best.config.dim << " lr " << best.config.lr << " npp " << best.config.npp
      << " valid Hits@3 " << best.objective << "\n";
  return kOk;
}

int cmd_recommend(const Options& o, std::ostream& out) {
  if (o.user.empty()) throw UsageError("--user is required");
  auto target = parse_target(o.rec_target);
  if (!target) throw UsageError("--target must be intent, metric or constraint");
  auto method = parse_method(o.method);
  if (!method) throw UsageError("--method must be lp, query or auto");
  if (o.k == 0) throw UsageError("--k must be >= 1");
  if (*method == RecMethod::kLp && o.checkpoint.empty()) throw UsageError("--method lp needs --checkpoint");
  TaskContext ctx;
  ctx.user = o.user;
  if (!o.dataset.empty()) ctx.dataset = o.dataset;
  if (!o.intent.empty()) ctx.intent = o.intent;
  if (!o.metric.empty()) ctx.metric = o.metric;
  ctx.constraints = o.constraints;
  TemplateSet templates = o.templates.empty() ? TemplateSet::defaults() : TemplateSet::from_json(slurp(o.templates));
  Graph g = load_graph(o, out);
  std::optional<LpModel> model;
  if (!o.checkpoint.empty()) model = LpModel::load(o.checkpoint, g);
  AnticipateOptions opts;
  opts.k = o.k;
  opts.filter = !o.no_filter;
  opts.fine_tune = !o.no_fine_tune;
  Recommendation r = recommend(g, Schema::data_analytics(), model ? &*model : nullptr, ctx, *target, *method, opts,
                               templates);
  if (!o.out.empty()) write_file(o.out, r.to_json() + "\n");
  out << r.target_relation << " via " << method_name(r.method);
  if (r.method == RecMethod::kQuery) out << " (level " << r.level_used << ", " << r.template_id << ")";
  out << "\n";
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    out << "  " << i + 1 << ". " << r.items[i].first << "  " << r.items[i].second << "\n";
  }
  return kOk;
}

int cmd_serve(const Options& o, const json& file_cfg, std::ostream& out) {
  ServiceConfig cfg = file_cfg.is_object() ? ServiceConfig::from_json(file_cfg.dump()) : ServiceConfig{};
  if (!o.store.empty()) cfg.store = o.store;
  if (!o.checkpoint.empty()) cfg.checkpoint = o.checkpoint;
  if (!o.host.empty()) cfg.host = o.host;
  if (const char* env = std::getenv("KGINTENT_PORT")) {
    try {
      cfg.port = std::stoi(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("KGINTENT_PORT is not a port number: ") + env);
    }
  }
  if (o.port) cfg.port = o.port;
  if (cfg.port < 0 || cfg.port > 65535) throw UsageError("port out of range");
  Graph g = load_store(cfg);
  std::optional<LpModel> model;
  if (cfg.checkpoint) model = LpModel::load(*cfg.checkpoint, g);
  Service service(std::move(g), std::move(model), cfg);
  const int port = service.bind(cfg.host, cfg.port);
  out << "serving on http://" << cfg.host << ":" << port << std::endl;
  service.run();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Intent anticipation over a data-analytics knowledge graph", "kgintent"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "JSON file with option values (flags override)");

  auto store = [&](CLI::App* s) { s->add_option("--store", o.store, "N-Triples store (default: synthetic corpus)"); };
  auto seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "random seed"); };
  auto out_opt = [&](CLI::App* s, const char* what) { s->add_option("--out", o.out, what); };
  auto split_opts = [&](CLI::App* s) {
    s->add_option("--train-frac", o.train_frac);
    s->add_option("--valid-frac", o.valid_frac);
    s->add_option("--test-frac", o.test_frac);
    s->add_option("--split-seed", o.split_seed);
  };
  auto model_opts = [&](CLI::App* s) {
    s->add_option("--model", o.model, "transe, transh, transr, rotate, distmult or complex");
    s->add_option("--dim", o.dim);
    s->add_option("--lr", o.lr);
    s->add_option("--npp", o.npp, "negatives per positive");
    s->add_option("--margin", o.margin);
    s->add_option("--norm", o.norm, "TransE distance norm (1 or 2)");
    s->add_option("--batch", o.batch);
    s->add_option("--epochs", o.epochs, "maximum epochs");
    s->add_option("--frequency", o.frequency, "epochs between validation runs");
    s->add_option("--patience", o.patience);
    s->add_flag("--no-early-stop", o.no_early_stop);
  };

  auto* schema = app.add_subcommand("schema", "write and check the bootstrapped schema");
  out_opt(schema, "N-Triples output");

  auto* synth = app.add_subcommand("synth", "generate the synthetic interaction corpus");
  seed(synth);
  out_opt(synth, "N-Triples output");
  synth->add_option("--users", o.users);
  synth->add_option("--datasets-cat", o.datasets_cat);
  synth->add_option("--datasets-num", o.datasets_num);
  synth->add_option("--tasks", o.tasks, "tasks per dataset");

  auto* prof = app.add_subcommand("profile", "profile a CSV dataset");
  prof->add_option("--csv", o.csv);
  prof->add_option("--target", o.target, "target column");
  prof->add_option("--name", o.name);
  prof->add_option("--delimiter", o.delimiter);
  out_opt(prof, "profile JSON");
  store(prof);
  prof->add_option("--save", o.save, "write the store with the profile annotated");

  auto* load = app.add_subcommand("load", "parse and validate an N-Triples store");
  load->add_option("--in", o.in);
  out_opt(load, "normalized N-Triples copy");

  auto* stats = app.add_subcommand("stats", "store statistics");
  store(stats);
  seed(stats);
  out_opt(stats, "statistics JSON");

  auto* split = app.add_subcommand("split", "train/valid/test split of the link-prediction view");
  store(split);
  seed(split);
  split_opts(split);
  out_opt(split, "output directory");

  auto* train_cmd = app.add_subcommand("train", "train an embedding model");
  store(train_cmd);
  seed(train_cmd);
  split_opts(train_cmd);
  model_opts(train_cmd);
  out_opt(train_cmd, "checkpoint path");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  store(eval);
  seed(eval);
  split_opts(eval);
  eval->add_option("--checkpoint", o.checkpoint);
  eval->add_option("--mode", o.mode, "raw, filtered or known");
  out_opt(eval, "report JSON");

  auto* grid = app.add_subcommand("grid", "grid search with cached runs");
  store(grid);
  seed(grid);
  split_opts(grid);
  model_opts(grid);
  grid->add_option("--models", o.models);
  grid->add_option("--dims", o.dims);
  grid->add_option("--lrs", o.lrs);
  grid->add_option("--npps", o.npps);
  grid->add_option("--mode", o.mode, "raw, filtered or known");
  grid->add_option("--cache", o.cache, "cache directory");
  out_opt(grid, "CSV output");

  auto* tpe = app.add_subcommand("tpe", "TPE (or random) search over dim, lr and npp");
  store(tpe);
  seed(tpe);
  split_opts(tpe);
  model_opts(tpe);
  tpe->add_option("--trials", o.trials);
  tpe->add_option("--startup", o.startup, "random trials before the estimator takes over");
  tpe->add_flag("--random", o.random, "plain random search");
  tpe->add_option("--dim-range", o.dim_range)->expected(2);
  tpe->add_option("--lr-range", o.lr_range)->expected(2);
  tpe->add_option("--npp-range", o.npp_range)->expected(2);
  out_opt(tpe, "JSON-lines trace");

  auto* rec = app.add_subcommand("recommend", "recommend intents, metrics or constraints");
  store(rec);
  seed(rec);
  rec->add_option("--checkpoint", o.checkpoint);
  rec->add_option("--user", o.user);
  rec->add_option("--dataset", o.dataset);
  rec->add_option("--intent", o.intent);
  rec->add_option("--metric", o.metric);
  rec->add_option("--constraint", o.constraints);
  rec->add_option("--target", o.rec_target, "intent, metric or constraint");
  rec->add_option("--method", o.method, "lp, query or auto");
  rec->add_option("--k", o.k);
  rec->add_flag("--no-filter", o.no_filter);
  rec->add_flag("--no-fine-tune", o.no_fine_tune);
  rec->add_option("--templates", o.templates, "query ladder JSON");
  out_opt(rec, "recommendation JSON");

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  store(serve);
  serve->add_option("--checkpoint", o.checkpoint);
  serve->add_option("--host", o.host);
  serve->add_option("--port", o.port, "overrides KGINTENT_PORT and the config file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code == 0 ? kOk : kUsage;
  }

  json file_cfg;
  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!o.config.empty()) {
      try {
        file_cfg = json::parse(slurp(o.config));
      } catch (const json::exception& e) {
        throw UsageError("bad --config: " + std::string(e.what()));
      } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
      }
      if (!file_cfg.is_object()) throw UsageError("--config must hold a JSON object");
      try {
        apply_config(*sub, file_cfg);
      } catch (const CLI::Error& e) {
        throw UsageError("bad value in --config: " + std::string(e.what()));
      }
    }
    const std::string verb = sub->get_name();
    if (verb == "schema") return cmd_schema(o, out);
    if (verb == "synth") return cmd_synth(o, out);
    if (verb == "profile") return cmd_profile(o, out);
    if (verb == "load") return cmd_load(o, out, err);
    if (verb == "stats") return cmd_stats(o, out);
    if (verb == "split") return cmd_split(o, out);
    if (verb == "train") return cmd_train(o, out);
    if (verb == "eval") return cmd_eval(o, out);
    if (verb == "grid") return cmd_grid(o, out);
    if (verb == "tpe") return cmd_tpe(o, out);
    if (verb == "recommend") return cmd_recommend(o, out);
    if (verb == "serve") return cmd_serve(o, file_cfg, out);
    throw UsageError("unknown verb " + verb);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace kgintent::cli
