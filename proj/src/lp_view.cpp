#include "kgintent/lp_view.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <json.hpp>

#include "kgintent/pattern.hpp"
#include "kgintent/vocab.hpp"

namespace kgintent {

namespace v = vocab;
using nlohmann::json;

LiteralEncoder LiteralEncoder::fit(const Graph& g, std::size_t max_discrete) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& t : g.triples()) {
    if (t.object.kind() != TermKind::kLiteral) continue;
    if (auto x = t.object.numeric()) values[t.relation.value()].push_back(*x);
  }
  LiteralEncoder enc;
  for (auto& [rel, all] : values) {
    std::sort(all.begin(), all.end());
    if (std::set<double>(all.begin(), all.end()).size() <= max_discrete) continue;
    std::vector<double> cuts;
    for (int q = 1; q <= 4; ++q) {
      const std::size_t rank = (static_cast<std::size_t>(q) * all.size() + 4) / 5;
      cuts.push_back(all[std::max<std::size_t>(rank, 1) - 1]);
    }
    enc.cuts_[rel] = std::move(cuts);
  }
  return enc;
}

std::string LiteralEncoder::encode(const Term& relation, const Term& literal) const {
  auto it = cuts_.find(relation.value());
  if (it != cuts_.end()) {
    if (auto x = literal.numeric()) {
      int k = 0;
      for (double c : it->second) k += *x > c ? 1 : 0;
      return "bucket:" + relation.value() + ":q" + std::to_string(k);
    }
  }
  return "literal:" + literal.value();
}

std::string LiteralEncoder::entity_name(const Term& relation, const Term& object) const {
  return object.kind() == TermKind::kIri ? object.value() : encode(relation, object);
}

std::string LiteralEncoder::to_json() const { return json(cuts_).dump(); }

LiteralEncoder LiteralEncoder::from_json(const std::string& text) {
  LiteralEncoder enc;
  enc.cuts_ = json::parse(text).get<std::map<std::string, std::vector<double>>>();
  return enc;
}

std::vector<NamedFact> view_facts(const Graph& g, const LiteralEncoder& enc) {
  static const std::set<std::string> kConstraintClasses = {
      std::string(v::kConstraint), std::string(v::kAlgorithmConstraint),
      std::string(v::kHyperparameterConstraint), std::string(v::kWorkflowConstraint)};
  const Term type = iri_term(v::kType);
  std::set<Term> constraints;
  for (const auto& t : g.find(std::nullopt, type, std::nullopt)) {
    if (kConstraintClasses.count(t.object.value())) constraints.insert(t.subject);
  }
  const Term has_constraint = iri_term(v::kHasConstraint);
  const Term on_algorithm = iri_term(v::kOnAlgorithm);
  std::vector<NamedFact> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  auto emit = [&](std::string h, std::string r, std::string t) {
    if (seen.emplace(h, r, t).second) out.push_back({std::move(h), std::move(r), std::move(t)});
  };
  for (const auto& t : g.triples()) {
    if (constraints.count(t.subject)) continue;
    if (t.relation == has_constraint && constraints.count(t.object)) {
      if (auto alg = g.object(t.object, on_algorithm)) {
        emit(t.subject.value(), t.relation.value(), alg->value());
      }
      continue;
    }
    emit(t.subject.value(), t.relation.value(), enc.entity_name(t.relation, t.object));
  }
  return out;
}

std::vector<NamedFact> LpView::named(const std::vector<Fact>& fs) const {
  std::vector<NamedFact> out;
  out.reserve(fs.size());
  for (const auto& f : fs) {
    out.push_back({entities.name(f.head), relations.name(f.rel), entities.name(f.tail)});
  }
  return out;
}

LpView build_view(const Graph& g) { return build_view(g, LiteralEncoder::fit(g)); }

LpView build_view(const Graph& g, const LiteralEncoder& enc) {
  LpView view;
  view.encoder = enc;
  for (const auto& nf : view_facts(g, enc)) {
    const auto h = view.entities.add(nf.head);
    const auto r = view.relations.add(nf.rel);
    const auto t = view.entities.add(nf.tail);
    view.facts.push_back({h, r, t});
  }
  return view;
}

CandidateIndex CandidateIndex::build(const Schema& schema, const Graph& g, const LpView& view) {
  std::map<std::uint32_t, std::set<std::string>> seen_heads, seen_tails;
  for (const auto& f : view.facts) {
    seen_heads[f.rel].insert(view.entities.name(f.head));
    seen_tails[f.rel].insert(view.entities.name(f.tail));
  }
  auto members = [&](std::string_view cls) {
    std::set<std::string> out;
    for (const auto& t : instances_of(g, iri_term(cls))) {
      if (view.entities.find(t.value())) out.insert(t.value());
    }
    return out;
  };
  CandidateIndex idx;
  for (std::uint32_t r = 0; r < view.relations.size(); ++r) {
    const std::string& rel = view.relations.name(r);
    const PropertyDef* p = schema.find_property(rel);
    std::set<std::string> tails = seen_tails[r], heads = seen_heads[r];
    if (rel == v::kHasConstraint) {
      tails = members(v::kAlgorithm);
    } else if (p && std::holds_alternative<std::string>(p->range)) {
      tails = members(std::get<std::string>(p->range));
    }
    if (p) heads = members(p->domain);
    if (tails.empty()) tails = seen_tails[r];
    if (heads.empty()) heads = seen_heads[r];
    idx.tails_[rel] = {tails.begin(), tails.end()};
    idx.heads_[rel] = {heads.begin(), heads.end()};
  }
  return idx;
}

const std::vector<std::string>* CandidateIndex::tails(const std::string& rel) const {
  auto it = tails_.find(rel);
  return it == tails_.end() ? nullptr : &it->second;
}

const std::vector<std::string>* CandidateIndex::heads(const std::string& rel) const {
  auto it = heads_.find(rel);
  return it == heads_.end() ? nullptr : &it->second;
}

std::string CandidateIndex::to_json() const { return json{{"tails", tails_}, {"heads", heads_}}.dump(); }

CandidateIndex CandidateIndex::from_json(const std::string& text) {
  json j = json::parse(text);
  CandidateIndex idx;
  idx.tails_ = j.at("tails").get<std::map<std::string, std::vector<std::string>>>();
  idx.heads_ = j.at("heads").get<std::map<std::string, std::vector<std::string>>>();
  return idx;
}

}  // namespace kgintent
