#pragma once

#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "hqivm/engine.hpp"
#include "hqivm/oracle.hpp"
#include "hqivm/query.hpp"
#include "hqivm/storage.hpp"
#include "hqivm/viewtree.hpp"

namespace hqivm::testing {

inline const std::vector<std::string>& suite_queries() {
  static const std::vector<std::string> qs = {
      "Q(A,C) = R(A,B), S(B,C).",
      "Q(A) = R(A,B), S(B).",
      "Q(A,D,E) = R(A,B,C), S(A,B,D), T(A,E).",
      "Q(A,C,F) = R(A,B,C), S(A,B,D), T(A,E,F), U(A,E,G).",
      "Q(C,D,E,F) = R(A,B,D), S(A,B,E), T(A,C,F), U(A,C,G).",
      "Q(Y0,Y1,Y2) = R0(X,Y0), R1(X,Y1), R2(X,Y2).",
  };
  return qs;
}

inline const char* kIntro = "Q(A,C) = R(A,B), S(B,C).";
inline const char* kFourAtom = "Q(C,D,E,F) = R(A,B,D), S(A,B,E), T(A,C,F), U(A,C,G).";

// Builds relation contents from string rows, interning every value.
inline std::map<std::vector<Value>, Mult> rel(Interner& names,
                                              std::initializer_list<std::pair<std::vector<std::string>, Mult>> rows) {
  std::map<std::vector<Value>, Mult> out;
  for (const auto& [t, m] : rows) {
    std::vector<Value> v;
    for (const auto& s : t) v.push_back(names.intern(s));
    out[v] += m;
  }
  return out;
}

inline Database intro_db(Interner& names) {
  Database db;
  db["R"] = rel(names, {{{"a1", "b1"}, 1}, {{"a1", "b2"}, 1}, {{"a2", "b1"}, 1}});
  db["S"] = rel(names, {{{"b1", "c1"}, 1}, {{"b2", "c1"}, 1}, {{"b2", "c2"}, 1}});
  return db;
}

inline std::vector<Value> vals(Interner& names, std::initializer_list<std::string> xs) {
  std::vector<Value> v;
  for (const auto& s : xs) v.push_back(names.intern(s));
  return v;
}

inline Tuple tup(std::initializer_list<Value> xs) { return Tuple(xs.begin(), xs.end()); }

inline void collect_leaves(const Forest& f, int node, std::vector<int>& out) {
  const ViewNode& v = f.nodes[node];
  if (v.children.empty()) out.push_back(node);
  for (int c : v.children) collect_leaves(f, c, out);
}

// Join of the leaf contents below `node`, projected onto `head` (variable ids
// of q), evaluated by the brute-force oracle.
inline ResultMultiset leaf_join(const Forest& f, const ConjunctiveQuery& q, int node, VarSet head) {
  std::vector<int> leaves;
  collect_leaves(f, node, leaves);
  std::string text = "V(";
  bool first = true;
  for (int v : members(head)) {
    text += (first ? "" : ",") + q.var_name(v);
    first = false;
  }
  text += ") = ";
  Database db;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const ViewNode& l = f.nodes[leaves[i]];
    const std::string sym = "L" + std::to_string(i);
    text += (i ? ", " : "") + sym + "(";
    for (std::size_t k = 0; k < l.schema.size(); ++k) text += (k ? "," : "") + q.var_name(l.schema[k]);
    text += ")";
    db[sym] = l.content.to_map();
  }
  text += ".";
  return brute_force_eval(parse_query(text), db);
}

}  // namespace hqivm::testing
