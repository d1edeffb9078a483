#include "kgintent/kge.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace kgintent {

using nlohmann::json;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

std::uint32_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::uint32_t>(rng() % n);
}

bool bounded_entities(ModelKind m) { return m != ModelKind::kRotatE; }

struct Widths {
  std::size_t entity, relation, extra;
};

Widths widths(const ModelConfig& c) {
  const std::size_t d = c.dim;
  switch (c.model) {
    case ModelKind::kTransE: return {d, d, 0};
    case ModelKind::kTransH: return {d, d, d};
    case ModelKind::kTransR: return {d, d, d * d};
    case ModelKind::kRotatE: return {2 * d, d, 0};
    case ModelKind::kDistMult: return {d, d, 0};
    case ModelKind::kComplEx: return {2 * d, 2 * d, 0};
  }
  return {d, d, 0};
}

void init_entity_row(const ModelConfig& c, double* row, std::size_t width, std::mt19937_64& rng) {
  const double b = 6.0 / std::sqrt(static_cast<double>(c.dim));
  for (std::size_t i = 0; i < width; ++i) row[i] = uniform(rng, -b, b);
}

void normalize(double* x, std::size_t n) {
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) ss += x[i] * x[i];
  if (ss == 0) {
    x[0] = 1.0;
    return;
  }
  const double inv = 1.0 / std::sqrt(ss);
  for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
}

void clip_norm(double* x, std::size_t n) {
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) ss += x[i] * x[i];
  if (ss > 1.0) {
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
  }
}

void init_relation_rows(EmbeddingState& s, std::uint32_t r, std::mt19937_64& rng) {
  const ModelConfig& c = s.config;
  const std::size_t d = c.dim;
  double* row = s.relation.row(r);
  if (c.model == ModelKind::kRotatE) {
    for (std::size_t i = 0; i < d; ++i) row[i] = uniform(rng, -std::numbers::pi, std::numbers::pi);
  } else {
    init_entity_row(c, row, s.relation.cols, rng);
  }
  if (c.model == ModelKind::kTransH) {
    double* w = s.extra.row(r);
    init_entity_row(c, w, d, rng);
    normalize(w, d);
  } else if (c.model == ModelKind::kTransR) {
    double* m = s.extra.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) m[i * d + j] = i == j ? 1.0 : 0.0;
    }
  }
}

thread_local std::vector<double> scratch_a, scratch_b, scratch_c;

void matvec(const double* m, const double* x, double* out, std::size_t d) {
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0;
    const double* mi = m + i * d;
    for (std::size_t j = 0; j < d; ++j) acc += mi[j] * x[j];
    out[i] = acc;
  }
}

// Score from raw parameter rows. x is the extra row (may be null).
double score_rows(const ModelConfig& c, const double* h, const double* r, const double* x,
                  const double* t) {
  const std::size_t d = c.dim;
  switch (c.model) {
    case ModelKind::kTransE: {
      double acc = 0;
      if (c.norm == 1) {
        for (std::size_t i = 0; i < d; ++i) acc += std::abs(h[i] + r[i] - t[i]);
        return -acc;
      }
      for (std::size_t i = 0; i < d; ++i) {
        double e = h[i] + r[i] - t[i];
        acc += e * e;
      }
      return -std::sqrt(acc);
    }
    case ModelKind::kTransH: {
      double wh = 0, wt = 0;
      for (std::size_t i = 0; i < d; ++i) {
        wh += x[i] * h[i];
        wt += x[i] * t[i];
      }
      double acc = 0;
      for (std::size_t i = 0; i < d; ++i) {
        double e = (h[i] - wh * x[i]) + r[i] - (t[i] - wt * x[i]);
        acc += e * e;
      }
      return -acc;
    }
    case ModelKind::kTransR: {
      scratch_a.resize(d);
      scratch_b.resize(d);
      matvec(x, h, scratch_a.data(), d);
      matvec(x, t, scratch_b.data(), d);
      double acc = 0;
      for (std::size_t i = 0; i < d; ++i) {
        double e = scratch_a[i] + r[i] - scratch_b[i];
        acc += e * e;
      }
      return -acc;
    }
    case ModelKind::kRotatE: {
      double acc = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const double cs = std::cos(r[i]), sn = std::sin(r[i]);
        const double zr = h[i] * cs - h[d + i] * sn - t[i];
        const double zi = h[i] * sn + h[d + i] * cs - t[d + i];
        acc += std::sqrt(zr * zr + zi * zi);
      }
      return -acc;
    }
    case ModelKind::kDistMult: {
      double acc = 0;
      for (std::size_t i = 0; i < d; ++i) acc += h[i] * r[i] * t[i];
      return acc;
    }
    case ModelKind::kComplEx: {
      double acc = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const double hr = h[i], hi = h[d + i], rr = r[i], ri = r[d + i], tr = t[i], ti = t[d + i];
        acc += hr * rr * tr + hi * rr * ti + hr * ri * ti - hi * ri * tr;
      }
      return acc;
    }
  }
  return 0;
}

// Adds coef * d score / d (h, r, x, t). gh and gt may alias when h == t.
void grad_rows(const ModelConfig& c, const double* h, const double* r, const double* x,
               const double* t, double coef, double* gh, double* gr, double* gx, double* gt) {
  const std::size_t d = c.dim;
  switch (c.model) {
    case ModelKind::kTransE: {
      if (c.norm == 1) {
        for (std::size_t i = 0; i < d; ++i) {
          const double e = h[i] + r[i] - t[i];
          const double g = e > 0 ? -coef : (e < 0 ? coef : 0.0);
          gh[i] += g;
          gr[i] += g;
          gt[i] -= g;
        }
        return;
      }
      double ss = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const double e = h[i] + r[i] - t[i];
        ss += e * e;
      }
      const double n = std::sqrt(ss);
      if (n == 0) return;
      for (std::size_t i = 0; i < d; ++i) {
        const double g = -coef * (h[i] + r[i] - t[i]) / n;
        gh[i] += g;
        gr[i] += g;
        gt[i] -= g;
      }
      return;
    }
    case ModelKind::kTransH: {
      auto& u = scratch_a;
      auto& g = scratch_b;
      u.resize(d);
      g.resize(d);
      double a = 0;
      for (std::size_t i = 0; i < d; ++i) {
        u[i] = h[i] - t[i];
        a += x[i] * u[i];
      }
      double gw = 0;
      for (std::size_t i = 0; i < d; ++i) {
        g[i] = -2.0 * (u[i] - a * x[i] + r[i]);
        gw += g[i] * x[i];
      }
      for (std::size_t i = 0; i < d; ++i) {
        const double dh = g[i] - gw * x[i];
        gh[i] += coef * dh;
        gt[i] -= coef * dh;
        gr[i] += coef * g[i];
        gx[i] += coef * (-u[i] * gw - a * g[i]);
      }
      return;
    }
    case ModelKind::kTransR: {
      auto& u = scratch_a;
      auto& g = scratch_b;
      auto& mh = scratch_c;
      u.resize(d);
      g.resize(d);
      mh.resize(d);
      for (std::size_t j = 0; j < d; ++j) u[j] = h[j] - t[j];
      matvec(x, u.data(), mh.data(), d);
      for (std::size_t i = 0; i < d; ++i) g[i] = -2.0 * (mh[i] + r[i]);
      for (std::size_t i = 0; i < d; ++i) {
        gr[i] += coef * g[i];
        const double* mi = x + i * d;
        double* gxi = gx + i * d;
        const double gi = coef * g[i];
        for (std::size_t j = 0; j < d; ++j) {
          gxi[j] += gi * u[j];
          gh[j] += gi * mi[j];
          gt[j] -= gi * mi[j];
        }
      }
      return;
    }
    case ModelKind::kRotatE: {
      for (std::size_t i = 0; i < d; ++i) {
        const double cs = std::cos(r[i]), sn = std::sin(r[i]);
        const double hr = h[i], hi = h[d + i];
        const double zr = hr * cs - hi * sn - t[i];
        const double zi = hr * sn + hi * cs - t[d + i];
        const double m = std::sqrt(zr * zr + zi * zi);
        if (m == 0) continue;
        const double g_re = -zr / m * coef, g_im = -zi / m * coef;
        gh[i] += g_re * cs + g_im * sn;
        gh[d + i] += -g_re * sn + g_im * cs;
        gt[i] -= g_re;
        gt[d + i] -= g_im;
        gr[i] += g_re * (-hr * sn - hi * cs) + g_im * (hr * cs - hi * sn);
      }
      return;
    }
    case ModelKind::kDistMult: {
      for (std::size_t i = 0; i < d; ++i) {
        const double hv = h[i], rv = r[i], tv = t[i];
        gh[i] += coef * rv * tv;
        gr[i] += coef * hv * tv;
        gt[i] += coef * hv * rv;
      }
      return;
    }
    case ModelKind::kComplEx: {
      for (std::size_t i = 0; i < d; ++i) {
        const double hr = h[i], hi = h[d + i], rr = r[i], ri = r[d + i], tr = t[i], ti = t[d + i];
        gh[i] += coef * (rr * tr + ri * ti);
        gh[d + i] += coef * (rr * ti - ri * tr);
        gr[i] += coef * (hr * tr + hi * ti);
        gr[d + i] += coef * (hr * ti - hi * tr);
        gt[i] += coef * (hr * rr - hi * ri);
        gt[d + i] += coef * (hi * rr + hr * ri);
      }
      return;
    }
  }
}

const double* extra_row(const EmbeddingState& s, std::uint32_t r) {
  return s.extra.cols ? s.extra.row(r) : nullptr;
}

}  // namespace

std::string_view model_name(ModelKind m) {
  switch (m) {
    case ModelKind::kTransE: return "transe";
    case ModelKind::kTransH: return "transh";
    case ModelKind::kTransR: return "transr";
    case ModelKind::kRotatE: return "rotate";
    case ModelKind::kDistMult: return "distmult";
    case ModelKind::kComplEx: return "complex";
  }
  return "?";
}

std::optional<ModelKind> parse_model(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (ModelKind m : all_models()) {
    if (model_name(m) == lower) return m;
  }
  return std::nullopt;
}

const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> models = {ModelKind::kTransE,   ModelKind::kTransH,
                                                ModelKind::kTransR,   ModelKind::kRotatE,
                                                ModelKind::kDistMult, ModelKind::kComplEx};
  return models;
}

void ModelConfig::check() const {
  if (dim < 2) throw std::invalid_argument("dim must be >= 2");
  if (npp < 1) throw std::invalid_argument("npp must be >= 1");
  if (!(lr > 0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be a positive number");
  if (!(margin > 0) || !std::isfinite(margin)) throw std::invalid_argument("margin must be positive");
  if (norm != 1 && norm != 2) throw std::invalid_argument("norm must be 1 or 2");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

std::string ModelConfig::to_json() const {
  json j = {{"model", std::string(model_name(model))},
            {"dim", dim},
            {"lr", lr},
            {"npp", npp},
            {"margin", margin},
            {"norm", norm},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"seed", seed}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ModelConfig c;
  if (j.contains("model")) {
    auto m = parse_model(j.at("model").get<std::string>());
    if (!m) throw std::invalid_argument("unknown model '" + j.at("model").get<std::string>() + "'");
    c.model = *m;
  }
  c.dim = j.value("dim", c.dim);
  c.lr = j.value("lr", c.lr);
  c.npp = j.value("npp", c.npp);
  c.margin = j.value("margin", c.margin);
  c.norm = j.value("norm", c.norm);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  c.check();
  return c;
}

std::uint32_t Vocab::add(const std::string& name) {
  auto [it, inserted] = index_.emplace(name, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(name);
  return it->second;
}

std::optional<std::uint32_t> Vocab::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

DivergenceError::DivergenceError(std::size_t epoch, double lr)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << " with lr=" << lr;
        return msg.str();
      }()),
      epoch_(epoch),
      lr_(lr) {}

std::optional<Fact> EmbeddingState::resolve(const std::string& h, const std::string& r,
                                            const std::string& t) const {
  auto hi = entities.find(h);
  auto ri = relations.find(r);
  auto ti = entities.find(t);
  if (!hi || !ri || !ti) return std::nullopt;
  return Fact{*hi, *ri, *ti};
}

EmbeddingState init_state(const ModelConfig& cfg, const Vocab& entities, const Vocab& relations) {
  cfg.check();
  EmbeddingState s;
  s.config = cfg;
  s.entities = entities;
  s.relations = relations;
  const Widths w = widths(cfg);
  s.entity.cols = w.entity;
  s.relation.cols = w.relation;
  s.extra.cols = w.extra;
  s.entity.resize_rows(entities.size());
  s.relation.resize_rows(relations.size());
  s.extra.resize_rows(relations.size());
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t e = 0; e < entities.size(); ++e) init_entity_row(cfg, s.entity.row(e), w.entity, rng);
  for (std::size_t r = 0; r < relations.size(); ++r) init_relation_rows(s, static_cast<std::uint32_t>(r), rng);
  project_constraints(s);
  return s;
}

std::uint32_t add_entity(EmbeddingState& s, const std::string& name, std::mt19937_64& rng) {
  if (auto id = s.entities.find(name)) return *id;
  const std::uint32_t id = s.entities.add(name);
  s.entity.resize_rows(s.entities.size());
  init_entity_row(s.config, s.entity.row(id), s.entity.cols, rng);
  if (bounded_entities(s.config.model)) clip_norm(s.entity.row(id), s.entity.cols);
  return id;
}

std::uint32_t add_relation(EmbeddingState& s, const std::string& name, std::mt19937_64& rng) {
  if (auto id = s.relations.find(name)) return *id;
  const std::uint32_t id = s.relations.add(name);
  s.relation.resize_rows(s.relations.size());
  s.extra.resize_rows(s.relations.size());
  init_relation_rows(s, id, rng);
  return id;
}

double score(const EmbeddingState& s, const Fact& f) {
  return score_rows(s.config, s.entity.row(f.head), s.relation.row(f.rel), extra_row(s, f.rel),
                    s.entity.row(f.tail));
}

double score(const EmbeddingState& s, const std::string& h, const std::string& r, const std::string& t) {
  auto f = s.resolve(h, r, t);
  if (!f) {
    std::string missing = !s.entities.find(h) ? h : !s.relations.find(r) ? r : t;
    throw UnembeddedError("unembedded term: " + missing);
  }
  return score(s, *f);
}

Gradient::Gradient(const EmbeddingState& s) { grow(s); }

void Gradient::grow(const EmbeddingState& s) {
  for (Block b : {Block::kEntity, Block::kRelation, Block::kExtra}) {
    const int i = static_cast<int>(b);
    blocks_[i].cols = s.block(b).cols;
    blocks_[i].resize_rows(s.block(b).rows);
    marked_[i].resize(s.block(b).rows, 0);
  }
}

double* Gradient::row(Block b, std::uint32_t i) {
  const int k = static_cast<int>(b);
  if (!marked_[k][i]) {
    marked_[k][i] = 1;
    touched_[k].push_back(i);
  }
  return blocks_[k].row(i);
}

void Gradient::clear() {
  for (int k = 0; k < 3; ++k) {
    for (std::uint32_t i : touched_[k]) {
      std::fill_n(blocks_[k].row(i), blocks_[k].cols, 0.0);
      marked_[k][i] = 0;
    }
    touched_[k].clear();
  }
}

void accumulate_score_gradient(const EmbeddingState& s, const Fact& f, double coef, Gradient& g) {
  double* gh = g.row(Block::kEntity, f.head);
  double* gt = g.row(Block::kEntity, f.tail);
  double* gr = g.row(Block::kRelation, f.rel);
  double* gx = s.extra.cols ? g.row(Block::kExtra, f.rel) : nullptr;
  grad_rows(s.config, s.entity.row(f.head), s.relation.row(f.rel), extra_row(s, f.rel),
            s.entity.row(f.tail), coef, gh, gr, gx, gt);
}

double mrl_loss(double pos_score, const std::vector<double>& neg_scores, double margin) {
  double total = 0;
  for (double n : neg_scores) total += std::max(0.0, margin - pos_score + n);
  return total;
}

double mrl_loss(const EmbeddingState& s, const Fact& pos, const std::vector<Fact>& negs) {
  std::vector<double> ns;
  ns.reserve(negs.size());
  for (const auto& n : negs) ns.push_back(score(s, n));
  return mrl_loss(score(s, pos), ns, s.config.margin);
}

double mrl_loss_and_gradient(const EmbeddingState& s, const Fact& pos, const std::vector<Fact>& negs,
                             Gradient& g) {
  const double sp = score(s, pos);
  double total = 0;
  std::size_t active = 0;
  for (const auto& n : negs) {
    const double l = s.config.margin - sp + score(s, n);
    if (std::isnan(l)) {
      total += l;
    } else if (l > 0) {
      total += l;
      ++active;
      accumulate_score_gradient(s, n, 1.0, g);
    }
  }
  if (active) accumulate_score_gradient(s, pos, -static_cast<double>(active), g);
  return total;
}

void project_rows(EmbeddingState& s, const std::vector<std::uint32_t>& entity_rows,
                  const std::vector<std::uint32_t>& extra_rows) {
  if (bounded_entities(s.config.model)) {
    for (std::uint32_t e : entity_rows) clip_norm(s.entity.row(e), s.entity.cols);
  }
  if (s.config.model == ModelKind::kTransH) {
    for (std::uint32_t r : extra_rows) normalize(s.extra.row(r), s.extra.cols);
  }
}

void project_constraints(EmbeddingState& s) {
  std::vector<std::uint32_t> ents(s.entity.rows), rels(s.extra.rows);
  for (std::uint32_t i = 0; i < ents.size(); ++i) ents[i] = i;
  for (std::uint32_t i = 0; i < rels.size(); ++i) rels[i] = i;
  project_rows(s, ents, rels);
}

bool constraints_hold(const EmbeddingState& s, double tol) {
  auto norm = [](const double* x, std::size_t n) {
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) ss += x[i] * x[i];
    return std::sqrt(ss);
  };
  for (std::size_t i = 0; i < s.entity.data.size(); ++i) {
    if (!std::isfinite(s.entity.data[i])) return false;
  }
  if (bounded_entities(s.config.model)) {
    for (std::size_t e = 0; e < s.entity.rows; ++e) {
      if (norm(s.entity.row(e), s.entity.cols) > 1.0 + tol) return false;
    }
  }
  if (s.config.model == ModelKind::kTransH) {
    for (std::size_t r = 0; r < s.extra.rows; ++r) {
      if (std::abs(norm(s.extra.row(r), s.extra.cols) - 1.0) > tol) return false;
    }
  }
  return true;
}

BernoulliSampler::BernoulliSampler(const std::vector<Fact>& train, std::size_t n_entities,
                                   std::size_t max_retries)
    : n_entities_(n_entities), max_retries_(max_retries) {
  if (n_entities >= (1u << 24)) throw std::invalid_argument("too many entities for the sampler");
  std::uint32_t n_rel = 0;
  for (const auto& f : train) {
    if (f.rel >= (1u << 16)) throw std::invalid_argument("too many relations for the sampler");
    n_rel = std::max(n_rel, f.rel + 1);
    known_.insert(key(f));
  }
  // Per relation: distinct heads, distinct tails and distinct pairs.
  std::vector<std::unordered_set<std::uint32_t>> heads(n_rel), tails(n_rel);
  std::vector<std::size_t> pairs(n_rel, 0);
  std::unordered_set<std::uint64_t> seen;
  for (const auto& f : train) {
    if (!seen.insert(key(f)).second) continue;
    heads[f.rel].insert(f.head);
    tails[f.rel].insert(f.tail);
    ++pairs[f.rel];
  }
  head_prob_.assign(n_rel, 0.5);
  for (std::uint32_t r = 0; r < n_rel; ++r) {
    if (!pairs[r]) continue;
    const double tph = static_cast<double>(pairs[r]) / static_cast<double>(heads[r].size());
    const double hpt = static_cast<double>(pairs[r]) / static_cast<double>(tails[r].size());
    head_prob_[r] = tph / (tph + hpt);
  }
}

double BernoulliSampler::head_probability(std::uint32_t rel) const {
  return rel < head_prob_.size() ? head_prob_[rel] : 0.5;
}

std::vector<NegativeSample> BernoulliSampler::sample(const Fact& t, std::size_t npp,
                                                     std::mt19937_64& rng) const {
  std::vector<NegativeSample> out;
  out.reserve(npp);
  const double p = head_probability(t.rel);
  for (std::size_t i = 0; i < npp; ++i) {
    const Side side = uniform(rng, 0.0, 1.0) < p ? Side::kHead : Side::kTail;
    Fact c = t;
    for (std::size_t attempt = 0; attempt <= max_retries_; ++attempt) {
      c = t;
      (side == Side::kHead ? c.head : c.tail) = uniform_index(rng, n_entities_);
      if (!known(c)) break;
    }
    out.push_back({t, c, side});
  }
  return out;
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "epoch,loss,valid_hits3\n";
  out.precision(10);
  std::size_t v = 0;
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    out << (e + 1) << ',' << epoch_loss[e] << ',';
    if (v < valid_hits3.size() && valid_hits3[v].first == e + 1) out << valid_hits3[v++].second;
    out << '\n';
  }
  return out.str();
}

const double* CandidateScorer::projected(std::uint32_t rel, std::uint32_t e) {
  const std::size_t d = s_.config.dim;
  if (rel != cached_rel_) {
    proj_.assign(s_.entity.rows * d, 0.0);
    const double* m = s_.extra.row(rel);
    for (std::size_t i = 0; i < s_.entity.rows; ++i) matvec(m, s_.entity.row(i), proj_.data() + i * d, d);
    cached_rel_ = rel;
  }
  return proj_.data() + static_cast<std::size_t>(e) * d;
}

void CandidateScorer::score(Side open, std::uint32_t known, std::uint32_t rel,
                            const std::vector<std::uint32_t>* cands, std::vector<double>& out) {
  const std::size_t n = cands ? cands->size() : s_.entity.rows;
  out.resize(n);
  const ModelConfig& c = s_.config;
  auto cand = [&](std::size_t i) { return cands ? (*cands)[i] : static_cast<std::uint32_t>(i); };
  if (c.model == ModelKind::kTransR) {
    const std::size_t d = c.dim;
    const double* r = s_.relation.row(rel);
    std::vector<double> fixed(projected(rel, known), projected(rel, known) + d);
    for (std::size_t i = 0; i < n; ++i) {
      const double* other = projected(rel, cand(i));
      const double* ph = open == Side::kTail ? fixed.data() : other;
      const double* pt = open == Side::kTail ? other : fixed.data();
      double acc = 0;
      for (std::size_t k = 0; k < d; ++k) {
        double e = ph[k] + r[k] - pt[k];
        acc += e * e;
      }
      out[i] = -acc;
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t e = cand(i);
    out[i] = open == Side::kTail ? ::kgintent::score(s_, Fact{known, rel, e})
                                 : ::kgintent::score(s_, Fact{e, rel, known});
  }
}

double realistic_rank(const std::vector<double>& scores, std::size_t target) {
  const double ts = scores.at(target);
  std::size_t better = 0, ties = 0;
  for (double x : scores) {
    if (x > ts) ++better;
    else if (x == ts) ++ties;
  }
  return static_cast<double>(better) + static_cast<double>(ties + 1) / 2.0;
}

double tail_hits3(const EmbeddingState& s, const std::vector<Fact>& valid) {
  if (valid.empty()) return 0.0;
  std::vector<Fact> sorted = valid;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Fact& a, const Fact& b) { return a.rel < b.rel; });
  CandidateScorer scorer(s);
  std::vector<double> scores;
  std::size_t hits = 0;
  for (const auto& f : sorted) {
    scorer.score(Side::kTail, f.head, f.rel, nullptr, scores);
    if (realistic_rank(scores, f.tail) <= 3.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sorted.size());
}

std::vector<double> run_epochs(EmbeddingState& s, const std::vector<Fact>& facts,
                               const BernoulliSampler& sampler, std::size_t epochs,
                               std::mt19937_64& rng, std::size_t first_epoch,
                               bool project_all_after_epoch) {
  std::vector<double> losses;
  Gradient g(s);
  std::vector<std::size_t> order(facts.size());
  std::vector<Fact> negs;
  const ModelConfig& c = s.config;
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double loss = 0;
    for (std::size_t start = 0; start < order.size(); start += c.batch_size) {
      const std::size_t end = std::min(order.size(), start + c.batch_size);
      g.clear();
      for (std::size_t k = start; k < end; ++k) {
        const Fact& pos = facts[order[k]];
        negs.clear();
        for (const auto& n : sampler.sample(pos, c.npp, rng)) negs.push_back(n.corrupted);
        loss += mrl_loss_and_gradient(s, pos, negs, g);
      }
      for (Block b : {Block::kEntity, Block::kRelation, Block::kExtra}) {
        Matrix& m = s.block(b);
        const Matrix& gm = g.block(b);
        for (std::uint32_t row : g.touched(b)) {
          double* p = m.row(row);
          const double* gr = gm.row(row);
          for (std::size_t j = 0; j < m.cols; ++j) p[j] -= c.lr * gr[j];
        }
      }
      project_rows(s, g.touched(Block::kEntity), g.touched(Block::kExtra));
    }
    if (!std::isfinite(loss)) throw DivergenceError(first_epoch + e, c.lr);
    if (project_all_after_epoch) project_constraints(s);
    losses.push_back(loss);
  }
  return losses;
}

std::pair<EmbeddingState, TrainHistory> train(const Vocab& entities, const Vocab& relations,
                                              const std::vector<Fact>& train_facts,
                                              const std::vector<Fact>& valid_facts,
                                              const ModelConfig& cfg, const TrainOptions& opts) {
  EmbeddingState state = init_state(cfg, entities, relations);
  BernoulliSampler sampler(train_facts, entities.size());
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  TrainHistory hist;
  std::optional<EmbeddingState> best;
  double best_val = -1.0;
  std::size_t bad = 0;
  const bool validate = (opts.validator || !valid_facts.empty()) && opts.stop.frequency > 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss = run_epochs(state, train_facts, sampler, 1, rng, epoch).front();
    hist.epoch_loss.push_back(loss);
    hist.epochs_run = epoch;
    if (opts.on_epoch) opts.on_epoch(epoch, loss);
    if (!validate || epoch % opts.stop.frequency != 0) continue;
    const double v = opts.validator ? opts.validator(state) : tail_hits3(state, valid_facts);
    hist.valid_hits3.emplace_back(epoch, v);
    if (v > best_val) {
      best_val = v;
      hist.best_epoch = epoch;
      bad = 0;
      if (opts.stop.enabled) best = state;
    } else if (opts.stop.enabled && ++bad >= opts.stop.patience) {
      hist.early_stopped = true;
      break;
    }
  }
  if (best) return {std::move(*best), std::move(hist)};
  if (!opts.stop.enabled || !validate) hist.best_epoch = hist.epochs_run;
  return {std::move(state), std::move(hist)};
}

std::vector<Fact> fine_tune(EmbeddingState& s, const std::vector<Fact>& old_facts,
                            const std::vector<NamedFact>& new_facts, const FineTuneOptions& opts) {
  if (new_facts.empty()) return {};
  std::mt19937_64 rng(opts.seed);
  const std::size_t known_entities = s.entities.size();
  std::vector<Fact> added;
  for (const auto& nf : new_facts) {
    const std::uint32_t h = add_entity(s, nf.head, rng);
    const std::uint32_t r = add_relation(s, nf.rel, rng);
    const std::uint32_t t = add_entity(s, nf.tail, rng);
    added.push_back({h, r, t});
  }
  // Unseen entities start from given vectors, else from the mean of known
  // entities sharing a (relation, neighbour) link with them.
  for (std::uint32_t e = static_cast<std::uint32_t>(known_entities); e < s.entities.size(); ++e) {
    double* row = s.entity.row(e);
    if (auto it = opts.init.find(s.entities.name(e)); it != opts.init.end()) {
      if (it->second.size() != s.entity.cols) throw std::invalid_argument("init vector has wrong width");
      std::copy(it->second.begin(), it->second.end(), row);
      continue;
    }
    std::vector<double> mean(s.entity.cols, 0.0);
    std::size_t n = 0;
    for (const auto& f : added) {
      const bool as_head = f.head == e && f.tail < known_entities;
      const bool as_tail = f.tail == e && f.head < known_entities;
      if (!as_head && !as_tail) continue;
      for (const auto& o : old_facts) {
        if (o.rel != f.rel) continue;
        std::uint32_t peer = UINT32_MAX;
        if (as_head && o.tail == f.tail) peer = o.head;
        if (as_tail && o.head == f.head) peer = o.tail;
        if (peer == UINT32_MAX || peer >= known_entities) continue;
        const double* p = s.entity.row(peer);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += p[j];
        ++n;
      }
    }
    if (n) {
      for (std::size_t j = 0; j < mean.size(); ++j) row[j] = mean[j] / static_cast<double>(n);
    }
  }
  std::vector<Fact> all = old_facts;
  all.insert(all.end(), added.begin(), added.end());
  BernoulliSampler sampler(all, s.entities.size());
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::vector<Fact> batch = added;
    if (!old_facts.empty()) {
      for (std::size_t i = 0; i < added.size() * opts.rehearsal_ratio; ++i) {
        batch.push_back(old_facts[rng() % old_facts.size()]);
      }
    }
    run_epochs(s, batch, sampler, 1, rng, epoch, false);
  }
  return added;
}

namespace {

constexpr std::string_view kMagic = "kgintent-checkpoint 1";

void write_block(std::ostream& out, const Matrix& m) {
  for (double x : m.data) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
  }
}

void read_block(std::istream& in, Matrix& m) {
  for (double& x : m.data) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("checkpoint truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    x = std::bit_cast<double>(bits);
  }
}

std::string expect_line(std::istream& in, std::string_view key) {
  std::string line;
  if (!std::getline(in, line) || line.compare(0, key.size(), key) != 0) {
    throw std::runtime_error("checkpoint: expected '" + std::string(key) + "'");
  }
  return line.size() > key.size() ? line.substr(key.size() + 1) : "";
}

}  // namespace

void save_checkpoint(const EmbeddingState& s, const std::filesystem::path& path,
                     const std::string& metadata_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kMagic << '\n';
  out << "config " << s.config.to_json() << '\n';
  out << "meta " << json::parse(metadata_json).dump() << '\n';
  out << "entities " << s.entities.size() << '\n';
  for (const auto& n : s.entities.names()) out << json(n).dump() << '\n';
  out << "relations " << s.relations.size() << '\n';
  for (const auto& n : s.relations.names()) out << json(n).dump() << '\n';
  out << "blocks " << s.entity.rows << ' ' << s.entity.cols << ' ' << s.relation.rows << ' '
      << s.relation.cols << ' ' << s.extra.rows << ' ' << s.extra.cols << '\n';
  out << "data\n";
  write_block(out, s.entity);
  write_block(out, s.relation);
  write_block(out, s.extra);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

EmbeddingState load_checkpoint(const std::filesystem::path& path, std::string* metadata_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw std::runtime_error("not a checkpoint: " + path.string());
  EmbeddingState s;
  s.config = ModelConfig::from_json(expect_line(in, "config"));
  std::string meta = expect_line(in, "meta");
  if (metadata_json) *metadata_json = meta;
  auto names = [&](std::string_view key, Vocab& v) {
    const std::size_t n = std::stoul(expect_line(in, key));
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(in, line)) throw std::runtime_error("checkpoint truncated");
      v.add(json::parse(line).get<std::string>());
    }
  };
  names("entities", s.entities);
  names("relations", s.relations);
  std::istringstream shape(expect_line(in, "blocks"));
  for (Matrix* m : {&s.entity, &s.relation, &s.extra}) {
    std::size_t rows = 0, cols = 0;
    shape >> rows >> cols;
    m->cols = cols;
    m->resize_rows(rows);
  }
  const Widths w = widths(s.config);
  if (s.entity.rows != s.entities.size() || s.relation.rows != s.relations.size() ||
      s.entity.cols != w.entity || s.relation.cols != w.relation || s.extra.cols != w.extra) {
    throw std::runtime_error("checkpoint block shapes do not match its header");
  }
  expect_line(in, "data");
  read_block(in, s.entity);
  read_block(in, s.relation);
  read_block(in, s.extra);
  return s;
}

}  // namespace kgintent
