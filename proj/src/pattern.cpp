#include "kgintent/pattern.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

#include "kgintent/vocab.hpp"

namespace kgintent {

namespace {

struct CompiledSlot {
  bool is_var = false;
  std::size_t var = 0;
  TermId id = 0;
};

struct CompiledAtom {
  std::array<CompiledSlot, 3> slots;
};

class Matcher {
 public:
  Matcher(const Graph& g, const Pattern& p) : g_(g) {
    auto names = p.variables();
    var_names_.assign(names.begin(), names.end());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < var_names_.size(); ++i) index[var_names_[i]] = i;

    for (const auto& atom : p.atoms) {
      CompiledAtom ca;
      const Slot* slots[3] = {&atom.subject, &atom.relation, &atom.object};
      for (int k = 0; k < 3; ++k) {
        if (const auto* v = std::get_if<Variable>(slots[k])) {
          ca.slots[k] = {true, index.at(v->name), 0};
        } else {
          auto id = g.lookup(std::get<Term>(*slots[k]));
          if (!id) {
            unsatisfiable_ = true;
            continue;
          }
          ca.slots[k] = {false, 0, *id};
        }
      }
      atoms_.push_back(ca);
    }
    filters_by_var_.resize(var_names_.size());
    for (const auto& f : p.filters) filters_by_var_[index.at(f.variable)].push_back(&f);
  }

  std::vector<Binding> run() {
    std::vector<Binding> out;
    if (unsatisfiable_) return out;
    std::vector<std::optional<TermId>> binding(var_names_.size());
    std::vector<bool> used(atoms_.size(), false);
    solve(binding, used, atoms_.size(), out);
    return out;
  }

 private:
  std::optional<TermId> resolve(const CompiledSlot& s,
                                const std::vector<std::optional<TermId>>& b) const {
    if (!s.is_var) return s.id;
    return b[s.var];
  }

  bool passes_filters(std::size_t var, TermId id) const {
    for (const Filter* f : filters_by_var_[var]) {
      if (!compare_terms(g_.term(id), f->op, f->value)) return false;
    }
    return true;
  }

  void solve(std::vector<std::optional<TermId>>& b, std::vector<bool>& used,
             std::size_t remaining, std::vector<Binding>& out) const {
    if (remaining == 0) {
      Binding result;
      for (std::size_t i = 0; i < var_names_.size(); ++i) {
        if (b[i]) result.emplace(var_names_[i], g_.term(*b[i]));
      }
      out.push_back(std::move(result));
      return;
    }
    // Most-bound atom first keeps intermediate results small.
    std::size_t best = atoms_.size();
    int best_bound = -1;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (used[i]) continue;
      int bound = 0;
      for (const auto& s : atoms_[i].slots) bound += resolve(s, b).has_value() ? 1 : 0;
      if (bound > best_bound) {
        best_bound = bound;
        best = i;
      }
    }
    const auto& atom = atoms_[best];
    used[best] = true;
    auto s = resolve(atom.slots[0], b);
    auto r = resolve(atom.slots[1], b);
    auto o = resolve(atom.slots[2], b);
    std::vector<Graph::IdTriple> hits;
    g_.scan(s, r, o, [&](const Graph::IdTriple& t) { hits.push_back(t); });
    for (const auto& t : hits) {
      std::vector<std::size_t> newly;
      bool ok = true;
      for (int k = 0; k < 3 && ok; ++k) {
        const auto& slot = atom.slots[k];
        if (!slot.is_var) continue;
        if (b[slot.var]) {
          ok = *b[slot.var] == t[k];
        } else if (passes_filters(slot.var, t[k])) {
          b[slot.var] = t[k];
          newly.push_back(slot.var);
        } else {
          ok = false;
        }
      }
      if (ok) solve(b, used, remaining - 1, out);
      for (auto v : newly) b[v].reset();
    }
    used[best] = false;
  }

  const Graph& g_;
  std::vector<std::string> var_names_;
  std::vector<CompiledAtom> atoms_;
  std::vector<std::vector<const Filter*>> filters_by_var_;
  bool unsatisfiable_ = false;
};

}  // namespace

std::optional<Comparator> parse_comparator(std::string_view op) {
  if (op == "=" || op == "==") return Comparator::kEq;
  if (op == "!=") return Comparator::kNe;
  if (op == "<") return Comparator::kLt;
  if (op == "<=") return Comparator::kLe;
  if (op == ">") return Comparator::kGt;
  if (op == ">=") return Comparator::kGe;
  return std::nullopt;
}

std::set<std::string> Pattern::variables() const {
  std::set<std::string> out;
  for (const auto& a : atoms) {
    for (const Slot* s : {&a.subject, &a.relation, &a.object}) {
      if (const auto* v = std::get_if<Variable>(s)) out.insert(v->name);
    }
  }
  return out;
}

void check_pattern(const Pattern& p) {
  auto vars = p.variables();
  for (const auto& f : p.filters) {
    if (!vars.count(f.variable)) {
      throw PatternError("filter variable ?" + f.variable + " is not bound by any atom");
    }
  }
  if (p.group_var && !vars.count(*p.group_var)) {
    throw PatternError("group variable ?" + *p.group_var + " is not bound by any atom");
  }
  if (p.limit && *p.limit == 0) throw PatternError("limit must be positive");
}

bool compare_terms(const Term& lhs, Comparator op, const Term& rhs) {
  int c;
  auto ln = lhs.numeric(), rn = rhs.numeric();
  if (ln && rn) {
    c = (*ln < *rn) ? -1 : (*ln > *rn ? 1 : 0);
  } else {
    auto ord = lhs <=> rhs;
    c = ord < 0 ? -1 : (ord > 0 ? 1 : 0);
  }
  switch (op) {
    case Comparator::kEq: return c == 0;
    case Comparator::kNe: return c != 0;
    case Comparator::kLt: return c < 0;
    case Comparator::kLe: return c <= 0;
    case Comparator::kGt: return c > 0;
    case Comparator::kGe: return c >= 0;
  }
  return false;
}

std::vector<Binding> match(const Graph& g, const Pattern& p) {
  check_pattern(p);
  auto out = Matcher(g, p).run();
  std::sort(out.begin(), out.end());
  if (p.limit && out.size() > *p.limit) out.resize(*p.limit);
  return out;
}

std::vector<std::pair<Term, std::size_t>> rank_by_frequency(const Graph& g, const Pattern& p,
                                                            const std::string& var,
                                                            std::size_t k) {
  Pattern unlimited = p;
  unlimited.limit.reset();
  unlimited.group_var = var;
  check_pattern(unlimited);
  std::map<Term, std::size_t> counts;
  for (const auto& b : match(g, unlimited)) ++counts[b.at(var)];
  std::vector<std::pair<Term, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

std::set<Term> subclass_closure(const Graph& g, const Term& cls) {
  std::set<Term> seen{cls};
  std::deque<Term> frontier{cls};
  const Term sub = Term::iri(std::string(vocab::kSubClassOf));
  while (!frontier.empty()) {
    Term c = frontier.front();
    frontier.pop_front();
    for (const auto& child : g.subjects(sub, c)) {
      if (seen.insert(child).second) frontier.push_back(child);
    }
  }
  return seen;
}

std::set<Term> instances_of(const Graph& g, const Term& cls) {
  std::set<Term> out;
  if (!cls.is_iri()) return out;
  const Term type = Term::iri(std::string(vocab::kType));
  for (const auto& c : subclass_closure(g, cls)) {
    for (const auto& e : g.subjects(type, c)) out.insert(e);
  }
  return out;
}

}  // namespace kgintent
