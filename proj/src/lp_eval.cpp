#include "kgintent/lp_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace kgintent {

using nlohmann::json;

void SplitSpec::check() const {
  if (!(train > 0 && valid > 0 && test > 0)) throw std::invalid_argument("split ratios must be > 0");
  if (std::abs(train + valid + test - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
}

namespace {

double fraction(std::size_t part, const SplitResult& s) {
  const std::size_t total = s.train.size() + s.valid.size() + s.test.size();
  return total ? static_cast<double>(part) / static_cast<double>(total) : 0.0;
}

}  // namespace

double SplitResult::realized_train() const { return fraction(train.size(), *this); }
double SplitResult::realized_valid() const { return fraction(valid.size(), *this); }
double SplitResult::realized_test() const { return fraction(test.size(), *this); }

SplitResult split(const std::vector<Fact>& facts, const SplitSpec& spec) {
  spec.check();
  std::map<std::uint32_t, std::vector<std::size_t>> by_rel;
  std::uint32_t max_ent = 0, max_rel = 0;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    by_rel[facts[i].rel].push_back(i);
    max_ent = std::max({max_ent, facts[i].head + 1, facts[i].tail + 1});
    max_rel = std::max(max_rel, facts[i].rel + 1);
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<int> bucket(facts.size(), 0);  // 0 train, 1 valid, 2 test
  for (auto& [rel, idx] : by_rel) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    const double n = static_cast<double>(idx.size());
    const auto n_test = static_cast<std::size_t>(std::lround(n * spec.test));
    const auto n_valid = static_cast<std::size_t>(std::lround(n * spec.valid));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      bucket[idx[k]] = k < n_test ? 2 : (k < n_test + n_valid ? 1 : 0);
    }
  }
  SplitResult out;
  std::vector<char> ent(max_ent, 0), rel(max_rel, 0);
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (bucket[i] != 0) continue;
    ent[facts[i].head] = ent[facts[i].tail] = 1;
    rel[facts[i].rel] = 1;
  }
  for (int b : {1, 2}) {
    for (std::size_t i = 0; i < facts.size(); ++i) {
      if (bucket[i] != b) continue;
      const Fact& f = facts[i];
      if (!ent[f.head] || !ent[f.tail] || !rel[f.rel]) {
        bucket[i] = 0;
        ent[f.head] = ent[f.tail] = 1;
        rel[f.rel] = 1;
        ++out.moved_to_train;
      }
    }
  }
  for (std::size_t i = 0; i < facts.size(); ++i) {
    (bucket[i] == 0 ? out.train : bucket[i] == 1 ? out.valid : out.test).push_back(facts[i]);
  }
  out.degenerate = out.valid.empty() || out.test.empty();
  return out;
}

std::string_view mode_name(RankMode m) {
  switch (m) {
    case RankMode::kRaw: return "raw";
    case RankMode::kRangeFiltered: return "filtered";
    case RankMode::kExcludeKnown: return "known";
  }
  return "?";
}

std::optional<RankMode> parse_mode(std::string_view s) {
  if (s == "raw") return RankMode::kRaw;
  if (s == "filtered" || s == "range_filtered") return RankMode::kRangeFiltered;
  if (s == "known" || s == "exclude_known") return RankMode::kExcludeKnown;
  return std::nullopt;
}

namespace {

json side_json(const SideMetrics& m) {
  return {{"hits1", m.hits1}, {"hits3", m.hits3}, {"hits10", m.hits10},
          {"mean_rank", m.mean_rank}, {"mrr", m.mrr}, {"n", m.n}};
}

SideMetrics side_from_json(const json& j) {
  SideMetrics m;
  m.hits1 = j.at("hits1");
  m.hits3 = j.at("hits3");
  m.hits10 = j.at("hits10");
  m.mean_rank = j.at("mean_rank");
  m.mrr = j.at("mrr");
  m.n = j.at("n");
  return m;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.mode = parse_mode(j.at("mode").get<std::string>()).value_or(RankMode::kRaw);
  r.head = side_from_json(j.at("head"));
  r.tail = side_from_json(j.at("tail"));
  r.skipped = j.at("skipped");
  return r;
}

struct Accumulator {
  double h1 = 0, h3 = 0, h10 = 0, rank = 0, rr = 0;
  std::size_t n = 0;
  void add(double r) {
    h1 += r <= 1.0;
    h3 += r <= 3.0;
    h10 += r <= 10.0;
    rank += r;
    rr += 1.0 / r;
    ++n;
  }
  SideMetrics finish() const {
    SideMetrics m;
    m.n = n;
    if (!n) return m;
    const double d = static_cast<double>(n);
    m.hits1 = h1 / d;
    m.hits3 = h3 / d;
    m.hits10 = h10 / d;
    m.mean_rank = rank / d;
    m.mrr = rr / d;
    return m;
  }
};

std::uint64_t fact_key(std::uint32_t h, std::uint32_t r, std::uint32_t t) {
  return (static_cast<std::uint64_t>(h) << 40) | (static_cast<std::uint64_t>(r) << 24) | t;
}

}  // namespace

std::string EvalReport::to_json() const {
  return json{{"mode", std::string(mode_name(mode))},
              {"head", side_json(head)},
              {"tail", side_json(tail)},
              {"skipped", skipped}}
      .dump();
}

EvalReport evaluate(const EmbeddingState& s, const std::vector<NamedFact>& test, const EvalOptions& opts) {
  if (opts.mode == RankMode::kRangeFiltered && !opts.candidates) {
    throw std::invalid_argument("range-filtered evaluation needs a candidate index");
  }
  if (opts.mode == RankMode::kExcludeKnown && !opts.known) {
    throw std::invalid_argument("exclude-known evaluation needs the known triples");
  }
  EvalReport report;
  report.mode = opts.mode;
  std::vector<Fact> queries;
  for (const auto& nf : test) {
    if (auto f = s.resolve(nf.head, nf.rel, nf.tail)) {
      queries.push_back(*f);
    } else {
      ++report.skipped;
    }
  }
  std::stable_sort(queries.begin(), queries.end(), [](const Fact& a, const Fact& b) { return a.rel < b.rel; });

  std::unordered_set<std::uint64_t> known;
  if (opts.mode == RankMode::kExcludeKnown) {
    for (const auto& nf : *opts.known) {
      if (auto f = s.resolve(nf.head, nf.rel, nf.tail)) known.insert(fact_key(f->head, f->rel, f->tail));
    }
  }
  std::map<std::pair<std::uint32_t, int>, std::vector<std::uint32_t>> pools;
  auto pool = [&](std::uint32_t rel, Side side) -> const std::vector<std::uint32_t>& {
    auto key = std::make_pair(rel, static_cast<int>(side));
    auto it = pools.find(key);
    if (it != pools.end()) return it->second;
    std::vector<std::uint32_t> ids;
    const std::string& name = s.relations.name(rel);
    const auto* names = side == Side::kTail ? opts.candidates->tails(name) : opts.candidates->heads(name);
    if (names) {
      for (const auto& n : *names) {
        if (auto id = s.entities.find(n)) ids.push_back(*id);
      }
    }
    std::sort(ids.begin(), ids.end());
    return pools.emplace(key, std::move(ids)).first->second;
  };

  CandidateScorer scorer(s);
  Accumulator head_acc, tail_acc;
  std::vector<double> scores;
  std::vector<std::uint32_t> cands;
  for (const auto& f : queries) {
    for (Side side : {Side::kHead, Side::kTail}) {
      if (opts.sides == Sides::kHead && side == Side::kTail) continue;
      if (opts.sides == Sides::kTail && side == Side::kHead) continue;
      const std::uint32_t target = side == Side::kTail ? f.tail : f.head;
      const std::uint32_t fixed = side == Side::kTail ? f.head : f.tail;
      std::size_t target_index = target;
      const std::vector<std::uint32_t>* list = nullptr;
      if (opts.mode == RankMode::kRangeFiltered) {
        cands = pool(f.rel, side);
        auto pos = std::lower_bound(cands.begin(), cands.end(), target);
        if (pos == cands.end() || *pos != target) pos = cands.insert(pos, target);
        target_index = static_cast<std::size_t>(pos - cands.begin());
        list = &cands;
      } else if (opts.mode == RankMode::kExcludeKnown) {
        cands.clear();
        for (std::uint32_t e = 0; e < s.entities.size(); ++e) {
          if (e == target) target_index = cands.size();
          const std::uint64_t k = side == Side::kTail ? fact_key(f.head, f.rel, e) : fact_key(e, f.rel, f.tail);
          if (e != target && known.count(k)) continue;
          cands.push_back(e);
        }
        list = &cands;
      }
      scorer.score(side, fixed, f.rel, list, scores);
      (side == Side::kTail ? tail_acc : head_acc).add(realistic_rank(scores, target_index));
    }
  }
  report.head = head_acc.finish();
  report.tail = tail_acc.finish();
  return report;
}

LpData prepare_lp_data(const Graph& g, const Schema& schema, const SplitSpec& spec) {
  LpData d;
  d.view = build_view(g);
  d.split = split(d.view.facts, spec);
  d.candidates = CandidateIndex::build(schema, g, d.view);
  return d;
}

void SearchSpace::check() const {
  if (models.empty() || dims.empty() || lrs.empty() || npps.empty()) {
    throw std::invalid_argument("every search grid must be nonempty");
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex(std::uint64_t x) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << x;
  return out.str();
}

std::string data_fingerprint(const LpData& d) {
  std::string buf;
  for (const auto* part : {&d.split.train, &d.split.valid, &d.split.test}) {
    buf += std::to_string(part->size()) + ";";
    for (const auto& f : *part) {
      buf += std::to_string(f.head) + "," + std::to_string(f.rel) + "," + std::to_string(f.tail) + ";";
    }
  }
  return hex(fnv1a(buf));
}

json row_json(const GridRow& r) {
  return {{"config", json::parse(r.config.to_json())},
          {"valid_hits3", r.valid_hits3},
          {"epochs", r.epochs},
          {"diverged", r.diverged},
          {"error", r.error},
          {"report", json::parse(r.report.to_json())}};
}

GridRow row_from_json(const json& j) {
  GridRow r;
  r.config = ModelConfig::from_json(j.at("config").dump());
  r.valid_hits3 = j.at("valid_hits3");
  r.epochs = j.at("epochs");
  r.diverged = j.at("diverged");
  r.error = j.at("error");
  r.report = report_from_json(j.at("report"));
  return r;
}

}  // namespace

std::vector<GridRow> grid_search(const LpData& data, const SearchSpace& space, const GridOptions& opts) {
  space.check();
  const std::string fingerprint = data_fingerprint(data);
  const auto test = data.view.named(data.split.test);
  std::vector<NamedFact> known;
  if (opts.mode == RankMode::kExcludeKnown) known = data.view.named(data.view.facts);
  std::vector<GridRow> rows;
  for (ModelKind m : space.models) {
    for (std::size_t dim : space.dims) {
      for (double lr : space.lrs) {
        for (std::size_t npp : space.npps) {
          GridRow row;
          row.config = opts.base;
          row.config.model = m;
          row.config.dim = dim;
          row.config.lr = lr;
          row.config.npp = npp;
          const std::string key = row.config.to_json() + "|" + fingerprint + "|" +
                                  std::string(mode_name(opts.mode)) + "|" +
                                  std::to_string(opts.stop.enabled) + std::to_string(opts.stop.frequency) +
                                  std::to_string(opts.stop.patience);
          std::optional<std::filesystem::path> cache_file;
          if (opts.cache_dir) {
            std::filesystem::create_directories(*opts.cache_dir);
            cache_file = *opts.cache_dir / (hex(fnv1a(key)) + ".json");
            if (std::filesystem::exists(*cache_file)) {
              std::ifstream in(*cache_file);
              row = row_from_json(json::parse(in));
              row.cached = true;
              if (opts.on_row) opts.on_row(row);
              rows.push_back(row);
              continue;
            }
          }
          try {
            TrainOptions to;
            to.stop = opts.stop;
            auto [state, hist] = train(data.view.entities, data.view.relations, data.split.train,
                                       data.split.valid, row.config, to);
            row.epochs = hist.epochs_run;
            for (const auto& [epoch, v] : hist.valid_hits3) row.valid_hits3 = std::max(row.valid_hits3, v);
            EvalOptions eo;
            eo.mode = opts.mode;
            eo.candidates = &data.candidates;
            eo.known = &known;
            row.report = evaluate(state, test, eo);
          } catch (const DivergenceError& e) {
            row.diverged = true;
            row.error = e.what();
            row.report.mode = opts.mode;
          }
          if (cache_file) std::ofstream(*cache_file) << row_json(row).dump() << '\n';
          if (opts.on_row) opts.on_row(row);
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

std::string grid_csv(const std::vector<GridRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "model,dim,lr,npp,valid_hits3,epochs,diverged,mode,"
         "tail_hits1,tail_hits3,tail_hits10,tail_mean_rank,tail_mrr,"
         "head_hits1,head_hits3,head_hits10,head_mean_rank,head_mrr,skipped\n";
  for (const auto& r : rows) {
    const auto& t = r.report.tail;
    const auto& h = r.report.head;
    out << model_name(r.config.model) << ',' << r.config.dim << ',' << r.config.lr << ',' << r.config.npp
        << ',' << r.valid_hits3 << ',' << r.epochs << ',' << (r.diverged ? 1 : 0) << ','
        << mode_name(r.report.mode) << ',' << t.hits1 << ',' << t.hits3 << ',' << t.hits10 << ','
        << t.mean_rank << ',' << t.mrr << ',' << h.hits1 << ',' << h.hits3 << ',' << h.hits10 << ','
        << h.mean_rank << ',' << h.mrr << ',' << r.report.skipped << '\n';
  }
  return out.str();
}

double validation_objective(const LpData& data, const ModelConfig& cfg, const EarlyStopConfig& stop) {
  try {
    TrainOptions to;
    to.stop = stop;
    auto [state, hist] = train(data.view.entities, data.view.relations, data.split.train, data.split.valid,
                               cfg, to);
    if (hist.valid_hits3.empty()) return tail_hits3(state, data.split.valid);
    double best = 0;
    for (const auto& [epoch, v] : hist.valid_hits3) best = std::max(best, v);
    return best;
  } catch (const DivergenceError&) {
    return 0.0;
  }
}

std::string SearchTrace::to_jsonl() const {
  std::string out;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& t = trials[i];
    json j = {{"trial", i},
              {"config", json::parse(t.config.to_json())},
              {"objective", t.objective},
              {"wall_seconds", t.wall_seconds},
              {"diverged", t.diverged}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<double> SearchTrace::running_best() const {
  std::vector<double> out;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& t : trials) {
    best = std::max(best, t.objective);
    out.push_back(best);
  }
  return out;
}

namespace {

constexpr std::size_t kDims = 3;
using Point = std::array<double, kDims>;

class SearchRng {
 public:
  explicit SearchRng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

 private:
  std::mt19937_64 eng_;
};

double to_unit(double value, const Range& r) {
  if (r.hi <= r.lo) return 0.0;
  return (std::log(value) - std::log(r.lo)) / (std::log(r.hi) - std::log(r.lo));
}

double from_unit(double x, const Range& r) {
  return std::exp(std::log(r.lo) + std::clamp(x, 0.0, 1.0) * (std::log(r.hi) - std::log(r.lo)));
}

ModelConfig config_at(const Point& x, const TpeSpace& space, const ModelConfig& base) {
  ModelConfig c = base;
  c.model = space.model;
  c.dim = static_cast<std::size_t>(std::max(2.0, std::round(from_unit(x[0], space.dim))));
  c.lr = from_unit(x[1], space.lr);
  c.npp = static_cast<std::size_t>(std::max(1.0, std::round(from_unit(x[2], space.npp))));
  return c;
}

Point point_of(const ModelConfig& c, const TpeSpace& space) {
  return {to_unit(static_cast<double>(c.dim), space.dim), to_unit(c.lr, space.lr),
          to_unit(static_cast<double>(c.npp), space.npp)};
}

struct Kde {
  std::vector<double> centers;
  double bandwidth = 0.1;

  static Kde fit(std::vector<double> xs) {
    Kde k;
    const double n = static_cast<double>(xs.size());
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    // Silverman's rule of thumb, floored so single points keep some spread.
    k.bandwidth = std::clamp(1.06 * sd * std::pow(n, -0.2), 0.05, 1.0);
    k.centers = std::move(xs);
    return k;
  }
  double log_density(double x) const {
    double acc = 0;
    for (double c : centers) {
      const double z = (x - c) / bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    acc /= static_cast<double>(centers.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi);
    return std::log(std::max(acc, 1e-300));
  }
};

Trial run_trial(const Objective& f, const ModelConfig& cfg) {
  Trial t;
  t.config = cfg;
  const auto start = std::chrono::steady_clock::now();
  try {
    t.objective = f(cfg);
  } catch (const DivergenceError&) {
    t.objective = 0.0;
    t.diverged = true;
  }
  t.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return t;
}

void record(SearchTrace& trace, Trial t, const std::function<void(const Trial&)>& cb) {
  if (cb) cb(t);
  trace.trials.push_back(std::move(t));
  if (trace.trials.back().objective > trace.trials[trace.best].objective) trace.best = trace.trials.size() - 1;
}

Point random_point(SearchRng& rng) {
  Point p;
  for (double& x : p) x = rng.uniform();
  return p;
}

}  // namespace

SearchTrace tpe_search(const Objective& f, const TpeSpace& space, const ModelConfig& base,
                       const TpeOptions& opts) {
  if (opts.n_iter < opts.n_startup || opts.n_startup < 2) {
    throw std::invalid_argument("tpe needs n_iter >= n_startup >= 2");
  }
  SearchRng rng(opts.seed);
  SearchTrace trace;
  std::vector<Point> points;
  for (std::size_t it = 0; it < opts.n_iter; ++it) {
    ModelConfig cfg;
    if (it < opts.n_startup) {
      cfg = config_at(random_point(rng), space, base);
    } else {
      std::vector<std::size_t> order(trace.trials.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return trace.trials[a].objective > trace.trials[b].objective;
      });
      const auto n_good = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(opts.gamma * static_cast<double>(order.size()))));
      std::array<Kde, kDims> good, bad;
      for (std::size_t d = 0; d < kDims; ++d) {
        std::vector<double> g, b;
        for (std::size_t k = 0; k < order.size(); ++k) (k < n_good ? g : b).push_back(points[order[k]][d]);
        good[d] = Kde::fit(g);
        bad[d] = Kde::fit(b);
      }
      Point best_x{};
      double best_ratio = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < opts.n_candidates; ++c) {
        Point x;
        const std::size_t centre = rng.index(n_good);
        double ratio = 0;
        for (std::size_t d = 0; d < kDims; ++d) {
          x[d] = std::clamp(good[d].centers[centre] + good[d].bandwidth * rng.normal(), 0.0, 1.0);
          ratio += good[d].log_density(x[d]) - bad[d].log_density(x[d]);
        }
        if (ratio > best_ratio) {
          best_ratio = ratio;
          best_x = x;
        }
      }
      cfg = config_at(best_x, space, base);
    }
    points.push_back(point_of(cfg, space));
    record(trace, run_trial(f, cfg), opts.on_trial);
  }
  return trace;
}

SearchTrace random_search(const Objective& f, const TpeSpace& space, const ModelConfig& base,
                          std::size_t n_iter, std::uint64_t seed) {
  SearchRng rng(seed);
  SearchTrace trace;
  for (std::size_t it = 0; it < n_iter; ++it) {
    record(trace, run_trial(f, config_at(random_point(rng), space, base)), nullptr);
  }
  return trace;
}

}  // namespace kgintent
