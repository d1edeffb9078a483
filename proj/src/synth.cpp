#include "kgintent/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "kgintent/vocab.hpp"

namespace kgintent {

namespace v = vocab;
using nlohmann::json;

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }
  bool chance(double p) { return uniform() < p; }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  std::size_t weighted(const std::vector<double>& w) {
    double total = 0;
    for (double x : w) total += x;
    double u = uniform() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (u < w[i]) return i;
      u -= w[i];
    }
    return w.size() - 1;
  }
  template <class T>
  const T& pick(const std::vector<T>& xs) {
    return xs[index(xs.size())];
  }

 private:
  std::mt19937_64 eng_;
};

std::string padded(std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, n);
  return buf;
}

struct UserModel {
  std::string iri;
  std::string expertise;
  double activity = 1.0;
  std::map<std::string, std::string> metric;     // intent -> preferred metric
  std::map<std::string, double> metric_strength;
  std::map<std::string, std::string> predictor;  // intent -> favourite predictor
  std::string preprocessor;
};

class Builder {
 public:
  explicit Builder(Graph& g) : g_(g) {}
  void add(const std::string& s, std::string_view r, Term o) {
    g_.add(Triple{Term::iri(s), iri_term(r), std::move(o)});
  }
  void link(const std::string& s, std::string_view r, const std::string& o) {
    add(s, r, Term::iri(o));
  }

 private:
  Graph& g_;
};

std::vector<std::string> as_vector(const std::set<std::string>& s) { return {s.begin(), s.end()}; }

}  // namespace

void SynthConfig::check() const {
  auto rate = [](double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
  };
  rate(constraint_rate, "constraint_rate");
  rate(preference_rate, "preference_rate");
  rate(intent_noise, "intent_noise");
  if (n_users == 0 || tasks_per_dataset == 0 || max_steps == 0 ||
      n_datasets_cat + n_datasets_num == 0) {
    throw std::invalid_argument("synth counts must be >= 1");
  }
}

SynthConfig synth_config_from_json(const std::string& json_text) {
  SynthConfig c;
  json j = json::parse(json_text);
  c.seed = j.value("seed", c.seed);
  c.n_users = j.value("n_users", c.n_users);
  c.n_datasets_cat = j.value("n_datasets_cat", c.n_datasets_cat);
  c.n_datasets_num = j.value("n_datasets_num", c.n_datasets_num);
  c.tasks_per_dataset = j.value("tasks_per_dataset", c.tasks_per_dataset);
  c.constraint_rate = j.value("constraint_rate", c.constraint_rate);
  c.preference_rate = j.value("preference_rate", c.preference_rate);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.intent_noise = j.value("intent_noise", c.intent_noise);
  c.check();
  return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
  json j = {{"seed", c.seed},
            {"n_users", c.n_users},
            {"n_datasets_cat", c.n_datasets_cat},
            {"n_datasets_num", c.n_datasets_num},
            {"tasks_per_dataset", c.tasks_per_dataset},
            {"constraint_rate", c.constraint_rate},
            {"preference_rate", c.preference_rate},
            {"max_steps", c.max_steps},
            {"intent_noise", c.intent_noise}};
  return j.dump();
}

std::vector<DatasetProfile> synth_dataset_profiles(const SynthConfig& cfg) {
  cfg.check();
  Rng rng(cfg.seed ^ 0x5eedda7a5e7ULL);
  std::vector<DatasetProfile> out;
  auto make = [&](TargetType type, std::size_t i) {
    DatasetProfile p;
    p.name = std::string(type == TargetType::kCategorical ? "synth_cat_" : "synth_num_") +
             padded(i + 1, 3);
    p.n_instances = static_cast<std::size_t>(std::lround(rng.log_uniform(50, 100000)));
    p.n_features = static_cast<std::size_t>(std::lround(rng.log_uniform(2, 500)));
    double cat_share = rng.chance(0.5) ? 0.0 : rng.uniform();
    p.n_categorical = static_cast<std::size_t>(std::floor(cat_share * static_cast<double>(p.n_features)));
    p.n_numeric = p.n_features - p.n_categorical;
    p.pct_missing = rng.chance(0.7) ? 0.0 : std::round(rng.uniform(0.0, 0.3) * 1e4) / 1e4;
    p.target_type = type;
    if (type == TargetType::kCategorical) {
      p.n_classes = 2 + static_cast<std::size_t>(std::floor(rng.log_uniform(1, 9))) - 1;
      p.imbalance = std::round(rng.log_uniform(1, 20) * 100) / 100;
    } else {
      p.std_target = std::round(rng.log_uniform(0.1, 1000) * 1000) / 1000;
    }
    p.check();
    out.push_back(std::move(p));
  };
  for (std::size_t i = 0; i < cfg.n_datasets_cat; ++i) make(TargetType::kCategorical, i);
  for (std::size_t i = 0; i < cfg.n_datasets_num; ++i) make(TargetType::kNumerical, i);
  return out;
}

Graph synthesize(const Schema& schema, const SynthConfig& cfg) {
  cfg.check();
  Graph g;
  Builder b(g);
  Rng rng(cfg.seed);

  const std::vector<std::string> intents = {std::string(v::kClassification), std::string(v::kRegression)};
  std::map<std::string, std::vector<std::string>> predictors, preprocessors, metrics;
  for (const auto& intent : intents) {
    for (const auto& a : schema.algorithms_for(intent)) {
      (schema.is_preprocessor(a) ? preprocessors : predictors)[intent].push_back(a);
    }
    metrics[intent] = as_vector(schema.metrics_for(intent));
  }

  static const std::vector<std::string> kExpertise = {"novice", "intermediate", "expert"};
  std::vector<UserModel> users;
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    UserModel u;
    u.iri = "user/u" + padded(i + 1, 2);
    u.expertise = rng.pick(kExpertise);
    u.activity = 1.0 / std::pow(static_cast<double>(i + 1), 0.8);
    for (const auto& intent : intents) {
      u.metric[intent] = rng.pick(metrics[intent]);
      u.metric_strength[intent] = rng.uniform(0.5, 0.9);
      u.predictor[intent] = rng.pick(predictors[intent]);
    }
    u.preprocessor = rng.pick(preprocessors[intents[0]]);
    b.link(u.iri, v::kType, std::string(v::kUser));
    b.add(u.iri, v::kHasExpertise, Term::string(u.expertise));
    users.push_back(std::move(u));
  }
  std::vector<double> activity;
  for (const auto& u : users) activity.push_back(u.activity);

  const auto profiles = synth_dataset_profiles(cfg);
  for (const auto& p : profiles) {
    for (const auto& t : profile_triples(p)) g.add(t);
  }

  std::size_t task_no = 0;
  for (const auto& p : profiles) {
    const std::string dataset = dataset_iri(p.name);
    const bool categorical = p.target_type == TargetType::kCategorical;
    for (std::size_t k = 0; k < cfg.tasks_per_dataset; ++k) {
      const std::string id = padded(++task_no, 5);
      const std::string task = "task/" + id;
      const UserModel& user = users[rng.weighted(activity)];
      bool flip = rng.chance(cfg.intent_noise);
      const std::string& intent = intents[(categorical != flip) ? 0 : 1];

      b.link(task, v::kType, std::string(v::kTask));
      b.link(task, v::kRequestedBy, user.iri);
      b.link(task, v::kUsesDataset, dataset);
      b.link(task, v::kHasIntent, intent);

      const std::string metric = rng.chance(user.metric_strength.at(intent))
                                     ? user.metric.at(intent)
                                     : rng.pick(metrics[intent]);
      b.link(task, v::kHasRequirement, metric);

      // Algorithm constraints: each of two slots fires independently.
      std::vector<std::string> pool = predictors[intent];
      pool.insert(pool.end(), preprocessors[intent].begin(), preprocessors[intent].end());
      std::vector<double> weight;
      for (const auto& a : pool) {
        if (a == "NoPreprocessing") weight.push_back(6.0);
        else if (a == user.predictor.at(intent) || a == user.preprocessor) weight.push_back(4.0);
        else weight.push_back(1.0);
      }
      std::set<std::string> used, excluded;
      std::size_t n_constraints = 0;
      for (int slot = 0; slot < 2; ++slot) {
        if (!rng.chance(cfg.constraint_rate)) continue;
        std::string alg = pool[rng.weighted(weight)];
        if (used.count(alg) || excluded.count(alg)) continue;
        const bool exclude = rng.chance(0.15);
        const bool hard = !rng.chance(cfg.preference_rate);
        const std::string c = "constraint/" + id + "-" + std::to_string(++n_constraints);
        b.link(c, v::kType, std::string(v::kAlgorithmConstraint));
        b.add(c, v::kIsHard, Term::boolean(hard));
        b.link(c, v::kOnAlgorithm, alg);
        b.add(c, v::kConstraintAction, Term::string(exclude ? "exclude" : "use"));
        b.link(task, v::kHasConstraint, c);
        (exclude ? excluded : used).insert(alg);
      }

      // Workflow: preprocessors then one predictor, honouring the constraints.
      auto allowed = [&](const std::vector<std::string>& xs) {
        std::vector<std::string> out;
        for (const auto& a : xs) {
          if (!excluded.count(a)) out.push_back(a);
        }
        return out;
      };
      std::string predictor;
      for (const auto& a : predictors[intent]) {
        if (used.count(a)) predictor = a;
      }
      if (predictor.empty()) {
        auto ok = allowed(predictors[intent]);
        const auto& fav = user.predictor.at(intent);
        predictor = (!excluded.count(fav) && rng.chance(0.6)) ? fav : rng.pick(ok);
      }
      std::vector<std::string> pre;
      for (const auto& a : preprocessors[intent]) {
        if (used.count(a)) pre.push_back(a);
      }
      const std::size_t n_steps = 1 + rng.index(cfg.max_steps);
      auto pre_pool = allowed(preprocessors[intent]);
      while (pre.size() + 1 < n_steps && pre.size() < pre_pool.size()) {
        std::string a = (rng.chance(0.5) && !excluded.count(user.preprocessor)) ? user.preprocessor
                                                                               : rng.pick(pre_pool);
        if (std::find(pre.begin(), pre.end(), a) == pre.end()) pre.push_back(a);
      }
      std::vector<std::string> steps = pre;
      steps.push_back(predictor);

      const std::string wf = "workflow/" + id;
      b.link(wf, v::kType, std::string(v::kWorkflow));
      b.link(task, v::kAchievedBy, wf);
      std::string prev;
      for (std::size_t s = 0; s < steps.size(); ++s) {
        const std::string step = "step/" + id + "-" + std::to_string(s + 1);
        b.link(step, v::kType, std::string(v::kStep));
        b.link(step, v::kUsesAlgorithm, steps[s]);
        b.link(wf, v::kHasStep, step);
        if (!prev.empty()) b.link(prev, v::kFollowedBy, step);
        prev = step;
      }

      const Metric* m = schema.find_metric(metric);
      const bool fav_pred = predictor == user.predictor.at(intent);
      const bool fav_pre = std::find(pre.begin(), pre.end(), user.preprocessor) != pre.end();
      double quality = std::clamp(rng.uniform(0.3, 0.9) + (fav_pred ? 0.1 : 0.0), 0.0, 1.0);
      double score = m->higher_is_better ? m->lo + quality * (m->hi - m->lo)
                                         : m->hi - quality * (m->hi - m->lo);
      score = std::round(score * 1e4) / 1e4;
      const std::string ev = "evaluation/" + id;
      b.link(ev, v::kType, std::string(v::kModelEvaluation));
      b.link(ev, v::kEvaluatesMetric, metric);
      b.add(ev, v::kScoreValue, Term::real(score));
      b.link(wf, v::kHasEvaluation, ev);

      double affinity = 2.0 + (fav_pred ? 1.5 : 0.0) + (fav_pre ? 0.5 : 0.0) +
                        (metric == user.metric.at(intent) ? 0.5 : 0.0) + rng.uniform(-1.0, 1.0);
      auto fscore = static_cast<std::int64_t>(std::clamp(std::lround(affinity), 1L, 5L));
      const std::string fb = "feedback/" + id;
      b.link(fb, v::kType, std::string(v::kFeedback));
      b.add(fb, v::kFeedbackScore, Term::integer(fscore));
      static const std::vector<std::string> kTags = {"fast", "accurate", "interpretable", "slow"};
      if (rng.chance(0.4)) b.add(fb, v::kFeedbackTag, Term::string(rng.pick(kTags)));
      b.link(wf, v::kHasFeedback, fb);
    }
  }
  return g;
}

Graph synthesize_full(const Schema& schema, const SynthConfig& cfg) {
  Graph g = schema.to_graph();
  for (const auto& t : synthesize(schema, cfg).triples()) g.add(t);
  return g;
}

CorpusCounts count_corpus(const Graph& full, const Graph& schema_graph) {
  CorpusCounts c;
  const Term type = iri_term(v::kType);
  const Term dataset = iri_term(v::kDataset);
  for (const auto& t : full.triples()) {
    if (schema_graph.contains(t)) {
      ++c.schema;
    } else if (full.contains(Triple{t.subject, type, dataset})) {
      ++c.characteristic;
    } else {
      ++c.experiment;
    }
  }
  return c;
}

}  // namespace kgintent
