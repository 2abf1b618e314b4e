#include "hqivm/oracle.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <string>

namespace hqivm {

ResultMultiset brute_force_eval(const ConjunctiveQuery& q, const Database& db) {
  const auto& atoms = q.atoms();
  std::vector<const std::map<std::vector<Value>, Mult>*> rels;
  for (const Atom& a : atoms) {
    auto it = db.find(a.symbol);
    if (it == db.end()) throw MissingRelation("no relation bound to symbol " + a.symbol);
    rels.push_back(&it->second);
  }
  std::map<std::string, Value> binding;
  ResultMultiset out;

  std::function<void(std::size_t, Mult)> rec = [&](std::size_t i, Mult m) {
    if (i == atoms.size()) {
      std::vector<Value> t;
      for (const auto& h : q.head()) t.push_back(binding.at(h));
      out[t] += m;
      return;
    }
    const Atom& a = atoms[i];
    for (const auto& [tuple, mult] : *rels[i]) {
      if (mult == 0) continue;
      if (tuple.size() != a.schema.size()) throw MissingRelation("arity mismatch for symbol " + a.symbol);
      std::vector<std::string> fresh;
      bool ok = true;
      for (std::size_t c = 0; c < tuple.size() && ok; ++c) {
        auto it = binding.find(a.schema[c]);
        if (it == binding.end()) {
          binding[a.schema[c]] = tuple[c];
          fresh.push_back(a.schema[c]);
        } else if (it->second != tuple[c]) {
          ok = false;
        }
      }
      if (ok) rec(i + 1, m * mult);
      for (const auto& v : fresh) binding.erase(v);
    }
  };
  rec(0, 1);
  for (auto it = out.begin(); it != out.end();) {
    if (it->second == 0) it = out.erase(it);
    else ++it;
  }
  return out;
}

namespace {

// Smallest number of atoms whose variables cover `target`.
int min_cover(const std::vector<std::set<std::string>>& atoms, const std::set<std::string>& target) {
  if (target.empty()) return 0;
  const std::size_t n = atoms.size();
  int best = -1;
  for (std::uint32_t s = 1; s < (1U << n); ++s) {
    int k = std::popcount(s);
    if (best >= 0 && k >= best) continue;
    std::set<std::string> cov;
    for (std::size_t a = 0; a < n; ++a)
      if (s & (1U << a)) cov.insert(atoms[a].begin(), atoms[a].end());
    if (std::includes(cov.begin(), cov.end(), target.begin(), target.end())) best = k;
  }
  if (best < 0) throw TooLarge("target not coverable");
  return best;
}

}  // namespace

Widths brute_force_widths(const ConjunctiveQuery& q) {
  const int n = q.num_vars();
  if (n > 7) throw TooLarge("exhaustive width search supports at most 7 variables");
  if (q.num_atoms() > 16) throw TooLarge("exhaustive width search supports at most 16 atoms");
  std::vector<std::string> names;
  for (int v = 0; v < n; ++v) names.push_back(q.var_name(v));
  std::vector<std::set<std::string>> atom_vars;
  for (const Atom& a : q.atoms()) atom_vars.emplace_back(a.schema.begin(), a.schema.end());
  std::set<std::string> free(q.head().begin(), q.head().end());

  Widths best{1 << 20, 1 << 20};
  std::vector<int> parent(n, -1);
  // parent[v] in [-1, n); enumerate all assignments and keep the forests.
  std::vector<int> code(n, 0);
  while (true) {
    for (int v = 0; v < n; ++v) parent[v] = code[v] - 1;
    // Reject cycles and self loops.
    bool forest = true;
    std::vector<std::vector<int>> ancestors(n);
    for (int v = 0; v < n && forest; ++v) {
      int u = parent[v];
      int steps = 0;
      while (u >= 0 && forest) {
        if (u == v || ++steps > n) forest = false;
        else {
          ancestors[v].push_back(u);
          u = parent[u];
        }
      }
    }
    auto is_anc = [&](int a, int v) {
      return std::find(ancestors[v].begin(), ancestors[v].end(), a) != ancestors[v].end();
    };
    bool valid = forest;
    // Every atom's variables lie on one root-to-leaf path.
    for (std::size_t a = 0; a < atom_vars.size() && valid; ++a)
      for (const auto& x : atom_vars[a])
        for (const auto& y : atom_vars[a]) {
          int xi = q.var_id(x), yi = q.var_id(y);
          if (xi != yi && !is_anc(xi, yi) && !is_anc(yi, xi)) valid = false;
        }
    // Free-top: no bound variable above a free one.
    for (int v = 0; v < n && valid; ++v)
      if (free.contains(names[v]))
        for (int a : ancestors[v])
          if (!free.contains(names[a])) valid = false;
    if (valid) {
      int w = 0, d = 0;
      for (int x = 0; x < n; ++x) {
        // Atoms whose deepest variable lies in the subtree of x.
        std::set<std::string> subtree_vars;
        std::vector<std::size_t> sub_atoms;
        for (std::size_t a = 0; a < atom_vars.size(); ++a) {
          bool below = false;
          for (const auto& y : atom_vars[a]) {
            int yi = q.var_id(y);
            if (yi == x || is_anc(x, yi)) below = true;
          }
          if (below) {
            sub_atoms.push_back(a);
            subtree_vars.insert(atom_vars[a].begin(), atom_vars[a].end());
          }
        }
        std::set<std::string> s{names[x]};
        for (int a : ancestors[x])
          if (subtree_vars.contains(names[a])) s.insert(names[a]);
        w = std::max(w, min_cover(atom_vars, s));
        for (std::size_t a : sub_atoms) {
          std::set<std::string> rest;
          for (const auto& y : s)
            if (!atom_vars[a].contains(y)) rest.insert(y);
          d = std::max(d, min_cover(atom_vars, rest));
        }
      }
      best.w = std::min(best.w, w);
      best.delta = std::min(best.delta, d);
    }
    int i = 0;
    while (i < n && ++code[i] > n) code[i++] = 0;
    if (i == n) break;
  }
  return best;
}

}  // namespace hqivm
