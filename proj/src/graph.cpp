#include "kgintent/graph.hpp"

#include <algorithm>
#include <limits>

namespace kgintent {

namespace {

constexpr TermId kMaxId = std::numeric_limits<TermId>::max();

template <typename Visit>
void range_scan(const std::set<Graph::IdTriple>& index, std::optional<TermId> a,
                std::optional<TermId> b, std::optional<TermId> c, Visit&& visit) {
  if (!a) {
    for (const auto& t : index) {
      if (b && t[1] != *b) continue;
      if (c && t[2] != *c) continue;
      visit(t);
    }
    return;
  }
  Graph::IdTriple lo{*a, b.value_or(0), (b && c) ? *c : 0};
  Graph::IdTriple hi{*a, b.value_or(kMaxId), (b && c) ? *c : kMaxId};
  for (auto it = index.lower_bound(lo); it != index.end() && !(hi < *it); ++it) {
    if (c && (*it)[2] != *c) continue;
    visit(*it);
  }
}

}  // namespace

std::string_view field_name(TripleField f) {
  switch (f) {
    case TripleField::kSubject: return "subject";
    case TripleField::kRelation: return "relation";
    case TripleField::kObject: return "object";
  }
  return "subject";
}

void check_well_formed(const Triple& t) {
  if (!t.subject.is_iri()) {
    throw MalformedTripleError(TripleField::kSubject, "subject must be an IRI");
  }
  if (!valid_iri(t.subject.value())) {
    throw MalformedTripleError(TripleField::kSubject, "empty or invalid IRI");
  }
  if (!t.relation.is_iri()) {
    throw MalformedTripleError(TripleField::kRelation, "relation must be an IRI");
  }
  if (!valid_iri(t.relation.value())) {
    throw MalformedTripleError(TripleField::kRelation, "empty or invalid IRI");
  }
  if (t.object.is_iri() && !valid_iri(t.object.value())) {
    throw MalformedTripleError(TripleField::kObject, "empty or invalid IRI");
  }
}

TermId Graph::intern(const Term& t) {
  auto it = ids_.find(t);
  if (it != ids_.end()) return it->second;
  auto id = static_cast<TermId>(terms_.size());
  terms_.push_back(t);
  ids_.emplace(t, id);
  return id;
}

std::optional<TermId> Graph::lookup(const Term& t) const {
  auto it = ids_.find(t);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool Graph::add(const Triple& t) {
  check_well_formed(t);
  IdTriple k{intern(t.subject), intern(t.relation), intern(t.object)};
  if (!spo_.insert(k).second) return false;
  pos_.insert({k[1], k[2], k[0]});
  osp_.insert({k[2], k[0], k[1]});
  return true;
}

bool Graph::remove(const Triple& t) {
  auto s = lookup(t.subject), r = lookup(t.relation), o = lookup(t.object);
  if (!s || !r || !o) return false;
  if (spo_.erase({*s, *r, *o}) == 0) return false;
  pos_.erase({*r, *o, *s});
  osp_.erase({*o, *s, *r});
  return true;
}

bool Graph::contains(const Triple& t) const {
  auto s = lookup(t.subject), r = lookup(t.relation), o = lookup(t.object);
  return s && r && o && spo_.count({*s, *r, *o}) > 0;
}

void Graph::scan(std::optional<TermId> s, std::optional<TermId> r, std::optional<TermId> o,
                 const std::function<void(const IdTriple&)>& visit,
                 std::optional<IndexOrder> order) const {
  IndexOrder chosen;
  if (order) {
    chosen = *order;
  } else if (s) {
    chosen = IndexOrder::kSpo;
  } else if (o) {
    chosen = r ? IndexOrder::kPos : IndexOrder::kOsp;
  } else {
    chosen = r ? IndexOrder::kPos : IndexOrder::kSpo;
  }
  switch (chosen) {
    case IndexOrder::kSpo:
      range_scan(spo_, s, r, o, [&](const IdTriple& t) { visit(t); });
      break;
    case IndexOrder::kPos:
      range_scan(pos_, r, o, s, [&](const IdTriple& t) { visit({t[2], t[0], t[1]}); });
      break;
    case IndexOrder::kOsp:
      range_scan(osp_, o, s, r, [&](const IdTriple& t) { visit({t[1], t[2], t[0]}); });
      break;
  }
}

std::vector<Triple> Graph::find(const std::optional<Term>& s, const std::optional<Term>& r,
                                const std::optional<Term>& o,
                                std::optional<IndexOrder> order) const {
  std::vector<Triple> out;
  std::optional<TermId> si, ri, oi;
  if (s && !(si = lookup(*s))) return out;
  if (r && !(ri = lookup(*r))) return out;
  if (o && !(oi = lookup(*o))) return out;
  scan(si, ri, oi, [&](const IdTriple& t) { out.push_back(materialize(t)); }, order);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Term> Graph::objects(const Term& s, const Term& r) const {
  std::vector<Term> out;
  for (auto& t : find(s, r, std::nullopt)) out.push_back(t.object);
  return out;
}

std::vector<Term> Graph::subjects(const Term& r, const Term& o) const {
  std::vector<Term> out;
  for (auto& t : find(std::nullopt, r, o)) out.push_back(t.subject);
  return out;
}

std::optional<Term> Graph::object(const Term& s, const Term& r) const {
  auto objs = objects(s, r);
  if (objs.empty()) return std::nullopt;
  return objs.front();
}

std::vector<Triple> Graph::triples() const {
  std::vector<Triple> out;
  out.reserve(spo_.size());
  for (const auto& t : spo_) out.push_back(materialize(t));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace kgintent
