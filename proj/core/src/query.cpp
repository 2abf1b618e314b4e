#include "hqivm/query.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "hqivm/variable_order.hpp"

namespace hqivm {

SyntaxError::SyntaxError(std::size_t position, std::string expected)
    : QueryError("syntax error at position " + std::to_string(position) + ": expected " +
                 expected),
      position_(position),
      expected_(std::move(expected)) {}

NotHierarchical::NotHierarchical(std::string x, std::string y)
    : QueryError("query is not hierarchical: atoms(" + x + ") and atoms(" + y +
                 ") overlap without nesting"),
      pair_(std::move(x), std::move(y)) {}

std::string Atom::label() const {
  return occurrence == 0 ? symbol : symbol + "#" + std::to_string(occurrence);
}

ConjunctiveQuery::ConjunctiveQuery(std::string head_name, std::vector<std::string> head,
                                   std::vector<Atom> atoms)
    : head_name_(std::move(head_name)), head_(std::move(head)), atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw QueryError("query needs at least one atom");
  if (static_cast<int>(atoms_.size()) > kMaxAtoms) throw QueryError("too many atoms");

  std::set<std::string> names;
  std::set<std::pair<std::string, int>> occ;
  for (const Atom& a : atoms_) {
    if (a.schema.empty()) throw EmptyAtomSchema("atom " + a.label() + " has an empty schema");
    if (!occ.insert({a.symbol, a.occurrence}).second)
      throw QueryError("duplicate atom occurrence " + a.label());
    std::set<std::string> seen;
    for (const auto& v : a.schema) {
      if (!seen.insert(v).second)
        throw DuplicateVariableInAtom("variable " + v + " repeated in atom " + a.label());
      names.insert(v);
    }
  }
  if (static_cast<int>(names.size()) > kMaxVars) throw QueryError("too many variables");
  var_names_.assign(names.begin(), names.end());

  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    std::vector<VarId> ids;
    VarSet m = 0;
    for (const auto& v : atoms_[a].schema) {
      VarId id = var_id(v);
      ids.push_back(id);
      m |= bit(id);
    }
    atom_schema_.push_back(std::move(ids));
    atom_vars_.push_back(m);
    all_vars_ |= m;
  }
  atoms_of_.assign(var_names_.size(), 0);
  for (std::size_t a = 0; a < atoms_.size(); ++a)
    for (VarId v : members(atom_vars_[a])) atoms_of_[v] |= bit(static_cast<int>(a));

  std::set<std::string> head_seen;
  for (const auto& v : head_) {
    VarId id = var_id(v);
    if (id < 0) throw HeadVarNotInBody("head variable " + v + " does not occur in the body");
    if (!head_seen.insert(v).second) throw QueryError("head variable " + v + " repeated");
    head_ids_.push_back(id);
    free_ |= bit(id);
  }
}

VarId ConjunctiveQuery::var_id(const std::string& name) const {
  auto it = std::lower_bound(var_names_.begin(), var_names_.end(), name);
  if (it == var_names_.end() || *it != name) return -1;
  return static_cast<VarId>(it - var_names_.begin());
}

std::vector<int> ConjunctiveQuery::occurrences(const std::string& symbol) const {
  std::vector<int> out;
  for (int a = 0; a < num_atoms(); ++a)
    if (atoms_[a].symbol == symbol) out.push_back(a);
  return out;
}

std::string ConjunctiveQuery::names(VarSet s) const {
  std::string out;
  for (VarId v : members(s)) {
    if (!out.empty()) out += ",";
    out += var_names_[v];
  }
  return out;
}

std::string ConjunctiveQuery::to_string() const {
  std::ostringstream os;
  auto list = [&](const std::vector<std::string>& vs) {
    for (std::size_t i = 0; i < vs.size(); ++i) os << (i ? "," : "") << vs[i];
  };
  os << head_name_ << "(";
  list(head_);
  os << ") = ";
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    os << (i ? ", " : "") << atoms_[i].symbol << "(";
    list(atoms_[i].schema);
    os << ")";
  }
  os << ".";
  return os.str();
}

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  ConjunctiveQuery parse() {
    std::string head_name = ident("head name");
    std::vector<std::string> head = var_list();
    expect('=');
    std::vector<Atom> atoms;
    std::map<std::string, int> occ;
    do {
      Atom a;
      a.symbol = ident("relation symbol");
      a.schema = var_list();
      a.occurrence = occ[a.symbol]++;
      atoms.push_back(std::move(a));
    } while (accept(','));
    expect('.');
    skip();
    if (i_ != s_.size()) throw SyntaxError(i_, "end of input");
    return ConjunctiveQuery(std::move(head_name), std::move(head), std::move(atoms));
  }

 private:
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool accept(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) throw SyntaxError(i_, std::string("'") + c + "'");
  }
  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }
  std::string ident(const char* what) {
    skip();
    if (i_ >= s_.size() || !ident_start(s_[i_])) throw SyntaxError(i_, what);
    std::size_t b = i_;
    while (i_ < s_.size() && ident_char(s_[i_])) ++i_;
    return s_.substr(b, i_ - b);
  }
  std::vector<std::string> var_list() {
    expect('(');
    std::vector<std::string> vs;
    if (accept(')')) return vs;
    do {
      vs.push_back(ident("variable"));
    } while (accept(','));
    expect(')');
    return vs;
  }

  const std::string& s_;
  std::size_t i_ = 0;
};

}  // namespace

ConjunctiveQuery parse_query(const std::string& text) { return Parser(text).parse(); }

std::optional<std::pair<VarId, VarId>> hierarchy_violation(const ConjunctiveQuery& q) {
  for (VarId x = 0; x < q.num_vars(); ++x)
    for (VarId y = x + 1; y < q.num_vars(); ++y) {
      AtomSet ax = q.atoms_of(x), ay = q.atoms_of(y);
      if ((ax & ay) == 0 || subset(ax, ay) || subset(ay, ax)) continue;
      return std::make_pair(x, y);
    }
  return std::nullopt;
}

bool is_hierarchical(const ConjunctiveQuery& q) { return !hierarchy_violation(q).has_value(); }

void require_hierarchical(const ConjunctiveQuery& q) {
  if (auto p = hierarchy_violation(q))
    throw NotHierarchical(q.var_name(p->first), q.var_name(p->second));
}

bool is_q_hierarchical(const ConjunctiveQuery& q) {
  if (!is_hierarchical(q)) return false;
  for (VarId a : members(q.free_vars()))
    for (VarId b = 0; b < q.num_vars(); ++b) {
      AtomSet sa = q.atoms_of(a), sb = q.atoms_of(b);
      if (sa != sb && subset(sa, sb) && !q.is_free(b)) return false;
    }
  return true;
}

bool is_free_connex(const ConjunctiveQuery& q) {
  require_hierarchical(q);
  VariableOrder vo = canonical_vo(q);
  for (VarId x : members(q.bound_vars())) {
    int node = vo.node_of_var(x);
    if ((vo.subtree_vars(node) & q.free_vars()) == 0) continue;
    VarSet need = 0;
    for (int a : members(q.atoms_of(x))) need |= q.atom_vars(a);
    need &= q.free_vars();
    bool covered = false;
    for (int a : members(q.atoms_of(x)))
      if (subset(need, q.atom_vars(a))) covered = true;
    if (!covered) return false;
  }
  return true;
}

int delta_index(const ConjunctiveQuery& q) {
  require_hierarchical(q);
  AtomSet all_atoms = q.num_atoms() == 64 ? ~AtomSet{0} : (AtomSet{1} << q.num_atoms()) - 1;
  int best = 0;
  for (VarId x : members(q.bound_vars())) {
    VarSet fr = 0;
    for (int a : members(q.atoms_of(x))) fr |= q.atom_vars(a);
    fr &= q.free_vars();
    for (int a : members(q.atoms_of(x)))
      best = std::max(best, cover_number(q, all_atoms, fr & ~q.atom_vars(a)));
  }
  return best;
}

std::vector<std::vector<int>> component_atoms(const ConjunctiveQuery& q) {
  int n = q.num_atoms();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (VarId v = 0; v < q.num_vars(); ++v) {
    auto as = members(q.atoms_of(v));
    for (std::size_t i = 1; i < as.size(); ++i) parent[find(as[i])] = find(as[0]);
  }
  std::map<int, std::vector<int>> groups;
  for (int a = 0; a < n; ++a) groups[find(a)].push_back(a);
  std::vector<std::vector<int>> out;
  for (auto& [r, g] : groups) out.push_back(g);
  std::sort(out.begin(), out.end());
  return out;
}

ConjunctiveQuery subquery(const ConjunctiveQuery& q, AtomSet atoms, VarSet free,
                          const std::string& head_name) {
  std::vector<Atom> as;
  VarSet vars = 0;
  for (int a : members(atoms)) {
    as.push_back(q.atoms()[a]);
    vars |= q.atom_vars(a);
  }
  std::vector<std::string> head;
  for (VarId v : q.head_ids())
    if (has(free & vars, v)) head.push_back(q.var_name(v));
  for (VarId v : members(free & vars & ~q.free_vars())) head.push_back(q.var_name(v));
  return ConjunctiveQuery(head_name, std::move(head), std::move(as));
}

std::vector<ConjunctiveQuery> connected_components(const ConjunctiveQuery& q) {
  std::vector<ConjunctiveQuery> out;
  for (const auto& g : component_atoms(q))
    out.push_back(subquery(q, mask_of(g), q.free_vars(), q.head_name()));
  return out;
}

}  // namespace hqivm
