#include "hqivm/variable_order.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>
#include <sstream>

namespace hqivm {

VariableOrder::VariableOrder(const ConjunctiveQuery& q, const std::vector<VarId>& var_parent)
    : q_(q), var_parent_(var_parent) {
  const int nv = q.num_vars(), na = q.num_atoms();
  if (static_cast<int>(var_parent.size()) != nv)
    throw InvalidVariableOrder("parent array has wrong size");
  nodes_.resize(nv + na);
  var_node_.resize(nv);
  atom_node_.resize(na);
  for (VarId v = 0; v < nv; ++v) {
    nodes_[v].var = v;
    var_node_[v] = v;
  }
  for (VarId v = 0; v < nv; ++v) {
    int p = var_parent[v];
    if (p == v || p >= nv) throw InvalidVariableOrder("bad parent");
    nodes_[v].parent = p;
    if (p < 0) roots_.push_back(v);
    else nodes_[p].children.push_back(v);
  }
  // Ancestor sets; detects cycles.
  anc_.assign(nv + na, 0);
  std::vector<int> depth(nv, -1);
  std::function<int(VarId, int)> compute = [&](VarId v, int guard) -> int {
    if (depth[v] >= 0) return depth[v];
    if (guard > nv) throw InvalidVariableOrder("cycle in variable order");
    int p = var_parent[v];
    if (p < 0) {
      anc_[v] = 0;
      depth[v] = 0;
    } else {
      compute(p, guard + 1);
      anc_[v] = anc_[p] | bit(p);
      depth[v] = depth[p] + 1;
    }
    return depth[v];
  };
  for (VarId v = 0; v < nv; ++v) compute(v, 0);

  for (int a = 0; a < na; ++a) {
    VarSet vs = q.atom_vars(a);
    VarId low = -1;
    for (VarId v : members(vs))
      if (low < 0 || depth[v] > depth[low]) low = v;
    if (!subset(vs, anc_[low] | bit(low)))
      throw InvalidVariableOrder("variables of atom " + q.atoms()[a].label() +
                                 " are not on one root-to-leaf path");
    int n = nv + a;
    nodes_[n].atom = a;
    nodes_[n].parent = low;
    nodes_[low].children.push_back(n);
    atom_node_[a] = n;
    anc_[n] = anc_[low] | bit(low);
  }

  sub_vars_.assign(nv + na, 0);
  sub_atoms_.assign(nv + na, 0);
  std::function<void(int)> fill = [&](int n) {
    const VONode& nd = nodes_[n];
    if (nd.is_atom()) {
      sub_atoms_[n] = bit(nd.atom);
      return;
    }
    sub_vars_[n] = bit(nd.var);
    for (int c : nd.children) {
      fill(c);
      sub_vars_[n] |= sub_vars_[c];
      sub_atoms_[n] |= sub_atoms_[c];
    }
  };
  for (int r : roots_) fill(r);
}

VarSet VariableOrder::anc(int node) const { return anc_[node]; }

VarSet VariableOrder::dep(VarId v) const {
  VarSet vs = 0;
  for (int a : members(sub_atoms_[var_node_[v]])) vs |= q_.atom_vars(a);
  return anc_[var_node_[v]] & vs;
}

VarSet VariableOrder::subtree_vars(int node) const { return sub_vars_[node]; }
AtomSet VariableOrder::subtree_atoms(int node) const { return sub_atoms_[node]; }

bool VariableOrder::has_sibling(int node) const {
  int p = nodes_[node].parent;
  if (p < 0) return roots_.size() > 1;
  return nodes_[p].children.size() > 1;
}

int VariableOrder::root_of(int node) const {
  while (nodes_[node].parent >= 0) node = nodes_[node].parent;
  return node;
}

bool VariableOrder::is_canonical() const {
  for (int a = 0; a < q_.num_atoms(); ++a) {
    int n = atom_node_[a];
    if (anc_[n] != q_.atom_vars(a)) return false;
  }
  return true;
}

bool VariableOrder::is_free_top(VarSet free) const {
  for (VarId v : members(free))
    if ((anc_[var_node_[v]] & ~free) != 0) return false;
  return true;
}

std::string VariableOrder::to_string() const {
  std::function<std::string(int)> rec = [&](int n) -> std::string {
    const VONode& nd = nodes_[n];
    if (nd.is_atom()) return q_.atoms()[nd.atom].label();
    std::string s = q_.var_name(nd.var);
    if (nd.children.empty()) return s;
    if (nd.children.size() == 1) return s + "-" + rec(nd.children[0]);
    s += "-{";
    for (std::size_t i = 0; i < nd.children.size(); ++i) s += (i ? "; " : "") + rec(nd.children[i]);
    return s + "}";
  };
  std::string out;
  for (std::size_t i = 0; i < roots_.size(); ++i) out += (i ? " | " : "") + rec(roots_[i]);
  return out;
}

std::string VariableOrder::to_dot(const std::string& name) const {
  std::ostringstream os;
  os << "digraph \"" << name << "\" {\n";
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    const VONode& nd = nodes_[n];
    if (nd.is_atom()) {
      const Atom& a = q_.atoms()[nd.atom];
      os << "  n" << n << " [shape=box,label=\"" << a.label() << "(";
      for (std::size_t i = 0; i < a.schema.size(); ++i) os << (i ? "," : "") << a.schema[i];
      os << ")\"];\n";
    } else {
      os << "  n" << n << " [label=\"" << q_.var_name(nd.var) << "\""
         << (q_.is_free(nd.var) ? "" : ",style=dashed") << "];\n";
    }
  }
  for (std::size_t n = 0; n < nodes_.size(); ++n)
    for (int c : nodes_[n].children) os << "  n" << n << " -> n" << c << ";\n";
  os << "}\n";
  return os.str();
}

VariableOrder canonical_vo(const ConjunctiveQuery& q) {
  require_hierarchical(q);
  const int nv = q.num_vars();
  // Order key: larger atom sets first, then name.
  auto before = [&](VarId x, VarId y) {
    int cx = popcount(q.atoms_of(x)), cy = popcount(q.atoms_of(y));
    if (cx != cy) return cx > cy;
    return x < y;
  };
  std::vector<VarId> parent(nv, -1);
  for (VarId y = 0; y < nv; ++y) {
    VarId best = -1;
    for (VarId x = 0; x < nv; ++x) {
      if (x == y || !subset(q.atoms_of(y), q.atoms_of(x)) || !before(x, y)) continue;
      if (best < 0 || before(best, x)) best = x;
    }
    parent[y] = best;
  }
  return VariableOrder(q, parent);
}

VariableOrder free_top(const VariableOrder& vo, VarSet free) {
  const ConjunctiveQuery& q = vo.query();
  if (!vo.is_canonical()) throw InvalidVariableOrder("free_top expects a canonical order");
  const int nv = q.num_vars();
  std::vector<VarId> parent(nv);
  for (VarId v = 0; v < nv; ++v) parent[v] = vo.parent_var(v);

  for (VarId x = 0; x < nv; ++x) {
    int xn = vo.node_of_var(x);
    if (has(free, x)) continue;
    if ((vo.anc(xn) & ~free) != 0) continue;  // not a highest bound variable
    VarSet sub = vo.subtree_vars(xn);
    VarSet fr = sub & free;
    if (fr == 0) continue;
    VarSet bd = sub & ~free;

    // Free variables of the subtree as a path: topological order of the
    // ancestor relation, ties by name.
    std::vector<VarId> path;
    VarSet placed = 0;
    while (placed != fr) {
      VarId pick = -1;
      for (VarId v : members(fr & ~placed)) {
        VarSet need = vo.anc(vo.node_of_var(v)) & fr;
        if (subset(need, placed)) {
          pick = v;
          break;
        }
      }
      path.push_back(pick);
      placed |= bit(pick);
    }
    VarId prev = vo.parent_var(x);
    for (VarId v : path) {
      parent[v] = prev;
      prev = v;
    }
    // Bound variables keep their nearest bound ancestor inside the subtree.
    for (VarId b : members(bd)) {
      if (b == x) {
        parent[b] = prev;
        continue;
      }
      VarId p = vo.parent_var(b);
      while (has(free, p)) p = vo.parent_var(p);
      parent[b] = p;
    }
  }
  return VariableOrder(q, parent);
}

namespace {

std::vector<int> atoms_by_label(const ConjunctiveQuery& q, AtomSet atoms) {
  std::vector<int> as = members(atoms);
  std::sort(as.begin(), as.end(), [&](int a, int b) {
    const Atom& x = q.atoms()[a];
    const Atom& y = q.atoms()[b];
    return std::tie(x.symbol, x.occurrence) < std::tie(y.symbol, y.occurrence);
  });
  return as;
}

// Smallest lexicographic subset of `as` of minimum size covering target.
std::vector<int> min_cover(const ConjunctiveQuery& q, const std::vector<int>& as, VarSet target) {
  VarSet reach = 0;
  for (int a : as) reach |= q.atom_vars(a);
  if (!subset(target, reach))
    throw UncoverableVariable("variables " + q.names(target & ~reach) + " occur in no atom");
  const int n = static_cast<int>(as.size());
  for (int k = 0; k <= n; ++k) {
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      VarSet cov = 0;
      for (int i : idx) cov |= q.atom_vars(as[i]);
      if (subset(target, cov)) {
        std::vector<int> out;
        for (int i : idx) out.push_back(as[i]);
        return out;
      }
      int i = k - 1;
      while (i >= 0 && idx[i] == n - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return {};
}

}  // namespace

EdgeCover integral_edge_cover(const ConjunctiveQuery& q, VarSet target) {
  AtomSet all = q.num_atoms() == 64 ? ~AtomSet{0} : (AtomSet{1} << q.num_atoms()) - 1;
  std::vector<int> pick = min_cover(q, atoms_by_label(q, all), target);
  EdgeCover ec;
  ec.weights.assign(q.num_atoms(), 0);
  for (int a : pick) {
    ec.weights[a] = 1;
    ec.covered |= q.atom_vars(a);
  }
  ec.total = static_cast<int>(pick.size());
  return ec;
}

int cover_number(const ConjunctiveQuery& q, AtomSet atoms, VarSet target) {
  return static_cast<int>(min_cover(q, atoms_by_label(q, atoms), target).size());
}

namespace {
AtomSet all_atoms(const ConjunctiveQuery& q) {
  return q.num_atoms() == 64 ? ~AtomSet{0} : (AtomSet{1} << q.num_atoms()) - 1;
}
}  // namespace

int width_w(const VariableOrder& vo) {
  const ConjunctiveQuery& q = vo.query();
  int w = 0;
  for (VarId x = 0; x < q.num_vars(); ++x)
    w = std::max(w, cover_number(q, all_atoms(q), bit(x) | vo.dep(x)));
  return w;
}

int width_delta(const VariableOrder& vo) {
  const ConjunctiveQuery& q = vo.query();
  int d = 0;
  for (VarId x = 0; x < q.num_vars(); ++x) {
    VarSet s = bit(x) | vo.dep(x);
    for (int a : members(vo.subtree_atoms(vo.node_of_var(x))))
      d = std::max(d, cover_number(q, all_atoms(q), s & ~q.atom_vars(a)));
  }
  return d;
}

int static_width(const ConjunctiveQuery& q) {
  return width_w(free_top(canonical_vo(q), q.free_vars()));
}

int dynamic_width(const ConjunctiveQuery& q) {
  return width_delta(free_top(canonical_vo(q), q.free_vars()));
}

int xi_measure(const VariableOrder& vo, int node, VarSet free) {
  const ConjunctiveQuery& q = vo.query();
  AtomSet qx = vo.subtree_atoms(node);
  int best = 0;
  for (VarId y : members(vo.subtree_vars(node))) {
    int yn = vo.node_of_var(y);
    if (subset(vo.anc(yn) | bit(y), free)) continue;
    best = std::max(best, cover_number(q, qx, vo.subtree_vars(yn) & free));
  }
  return best;
}

int xi_root(const VariableOrder& vo, VarSet free) {
  int best = 0;
  for (int r : vo.roots()) best = std::max(best, xi_measure(vo, r, free));
  return best;
}

int kappa_measure(const VariableOrder& vo, VarSet free) {
  const ConjunctiveQuery& q = vo.query();
  int best = 0;
  for (VarId x = 0; x < q.num_vars(); ++x) {
    if (has(free, x)) continue;
    int xn = vo.node_of_var(x);
    AtomSet qx = vo.subtree_atoms(xn);
    VarSet fx = vo.subtree_vars(xn) & free;
    for (int a : members(qx)) best = std::max(best, cover_number(q, qx, fx & ~q.atom_vars(a)));
  }
  return best;
}

}  // namespace hqivm
