#pragma once

#include <string>
#include <vector>

#include "hqivm/query.hpp"

namespace hqivm {

class InvalidVariableOrder : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UncoverableVariable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VONode {
  VarId var = -1;  // set for variable nodes
  int atom = -1;   // set for atom leaves
  int parent = -1;
  std::vector<int> children;
  bool is_atom() const { return atom >= 0; }
};

/// A forest over the query variables with every atom as a leaf below its
/// lowest variable.
class VariableOrder {
 public:
  // var_parent[v] is the parent variable of v or -1 for roots. Children are
  // ordered variables first (by name), then atoms (by index). Throws
  // InvalidVariableOrder if some atom's variables are not on one path.
  VariableOrder(const ConjunctiveQuery& q, const std::vector<VarId>& var_parent);

  const ConjunctiveQuery& query() const { return q_; }
  const std::vector<VONode>& nodes() const { return nodes_; }
  const VONode& node(int i) const { return nodes_[i]; }
  const std::vector<int>& roots() const { return roots_; }
  int node_of_var(VarId v) const { return var_node_[v]; }
  int node_of_atom(int a) const { return atom_node_[a]; }
  VarId parent_var(VarId v) const { return var_parent_[v]; }

  // Variables strictly above the node; for an atom leaf, its path variables.
  VarSet anc(int node) const;
  // anc(X) restricted to the variables of atoms in the subtree of X.
  VarSet dep(VarId v) const;
  VarSet subtree_vars(int node) const;
  AtomSet subtree_atoms(int node) const;
  bool has_sibling(int node) const;
  int root_of(int node) const;

  bool is_canonical() const;
  bool is_free_top(VarSet free) const;

  std::string to_string() const;
  std::string to_dot(const std::string& name) const;

 private:
  ConjunctiveQuery q_;
  std::vector<VarId> var_parent_;
  std::vector<VONode> nodes_;
  std::vector<int> roots_;
  std::vector<int> var_node_;
  std::vector<int> atom_node_;
  std::vector<VarSet> anc_;
  std::vector<VarSet> sub_vars_;
  std::vector<AtomSet> sub_atoms_;
};

VariableOrder canonical_vo(const ConjunctiveQuery& q);
VariableOrder free_top(const VariableOrder& vo, VarSet free);

struct EdgeCover {
  std::vector<int> weights;  // per atom of the query, 0 or 1
  VarSet covered = 0;
  int total = 0;
};

// Minimum set of atoms covering `target`; ties resolved by lexicographic
// atom label order.
EdgeCover integral_edge_cover(const ConjunctiveQuery& q, VarSet target);
// Edge cover number of `target` using only the atoms in `atoms`.
int cover_number(const ConjunctiveQuery& q, AtomSet atoms, VarSet target);

int width_w(const VariableOrder& vo);
int width_delta(const VariableOrder& vo);

int static_width(const ConjunctiveQuery& q);
int dynamic_width(const ConjunctiveQuery& q);

// Node may be a variable or atom node of `vo`.
int xi_measure(const VariableOrder& vo, int node, VarSet free);
int xi_root(const VariableOrder& vo, VarSet free);
int kappa_measure(const VariableOrder& vo, VarSet free);

}  // namespace hqivm
