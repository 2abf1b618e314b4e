#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hqivm/query.hpp"
#include "hqivm/storage.hpp"
#include "hqivm/variable_order.hpp"

namespace hqivm {

enum class Mode { Static, Dynamic };

enum class NodeKind {
  Atom,       // private copy of a base relation occurrence
  LightAtom,  // private copy of a light part R^keys
  ExistsH,    // private copy of a heavy indicator, set semantics
  Join,       // join of the children projected to the schema
  Aux,        // single-child view aggregating away one variable (dynamic only)
};

enum class TreeRole { Result, All, Light };

enum class EnumMode { Covering, Product, Bucket };

const char* to_string(NodeKind k);
const char* to_string(TreeRole r);

// ---------------------------------------------------------------------------
// Construction templates. These are immutable and may be shared between
// several trees; instantiation gives every tree its own nodes.

struct TNode;
using TPtr = std::shared_ptr<const TNode>;

struct TNode {
  std::string name;
  std::string prefix;
  NodeKind kind = NodeKind::Join;
  VarSet schema = 0;
  std::vector<TPtr> children;
  int atom = -1;
  VarSet light_keys = 0;  // LightAtom
  int triple = -1;        // ExistsH
  VarId var = -1;         // variable the view was created at
};

struct TripleTemplate {
  VarId var = -1;
  VarSet keys = 0;
  TPtr all;
  TPtr light;
};

/// The view-tree constructions over the canonical variable order of a query.
class Planner {
 public:
  Planner(const ConjunctiveQuery& q, Mode mode);

  const ConjunctiveQuery& query() const { return q_; }
  const VariableOrder& vo() const { return vo_; }
  Mode mode() const { return mode_; }

  // `light_keys` != 0 builds over the light parts R^light_keys.
  TPtr build_vt(const std::string& prefix, int vo_node, VarSet free, VarSet light_keys = 0);
  TPtr new_vt(const std::string& prefix, VarId var, VarSet schema, std::vector<TPtr> children);
  TPtr aux_view(int z_node, TPtr t);
  // Returns the index of the new triple in triples().
  int indicator_vts(int vo_node);
  std::vector<TPtr> tau(int vo_node, VarSet free);

  const std::vector<TripleTemplate>& triples() const { return triples_; }
  int triple_for_keys(VarSet keys) const;
  std::string path(int vo_node) const;
  // Atom leaf, or its light part when light_keys is non-empty.
  TPtr leaf(int atom, VarSet light_keys);

 private:
  ConjunctiveQuery q_;
  VariableOrder vo_;
  Mode mode_;
  std::vector<TripleTemplate> triples_;
};

// Compact rendering, e.g. "V@B(A,C)[R^B(A,B),S^B(B,C)]".
std::string render(const TPtr& t, const ConjunctiveQuery& q);

// ---------------------------------------------------------------------------
// Instantiated forest.

struct ChildJoin {
  enum Kind { Lookup, Sum, Scan };
  Kind kind = Lookup;
  int index = -1;                 // index on the join key inside the child
  std::vector<VarId> extra_vars;  // child variables carried into the parent
  std::vector<int> extra_pos;
};

struct ViewNode {
  std::string name;
  NodeKind kind = NodeKind::Join;
  std::vector<VarId> schema;  // ascending variable ids
  VarSet mask = 0;
  std::vector<int> children;
  int parent = -1;
  int tree = -1;
  int atom = -1;
  int light = -1;
  int triple = -1;
  VarId var = -1;
  bool partition_dependent = false;  // has a LightAtom or ExistsH leaf below
  VarSet leaf_vars = 0;

  Relation content;

  // Delta propagation from a child: siblings meet on join_mask.
  VarSet join_mask = 0;
  std::vector<VarId> join_vars;
  std::vector<ChildJoin> joins;

  // Enumeration metadata (result trees only).
  EnumMode emode = EnumMode::Covering;
  VarSet fixed = 0;
  VarSet out = 0;
  int h_child = -1;
  int range_index = -1;  // index for the fixed part of the schema
  bool range_point = false;
  int bucket_range_index = -1;
  bool bucket_range_point = false;
  int h_range_index = -1;  // index on the ExistsH child for fixed keys
  bool h_range_point = false;
};

struct ViewTree {
  int root = -1;
  TreeRole role = TreeRole::Result;
  int component = -1;
  int triple = -1;
};

struct LightPart {
  std::string name;
  int atom = -1;
  VarSet keys = 0;
  int triple = -1;
  std::vector<int> key_pos;  // key positions inside the atom's sorted schema
  Relation content;
  int content_key_index = -1;
  int base_key_index = -1;  // index on the occurrence base relation
};

struct IndicatorTriple {
  VarId var = -1;
  VarSet keys = 0;
  std::vector<VarId> key_vars;
  int all_tree = -1;
  int light_tree = -1;
  AtomSet atoms = 0;
  std::vector<int> light_parts;
  Relation heavy;  // support(All) minus support(L)
};

struct Forest {
  Mode mode = Mode::Dynamic;
  std::vector<ViewNode> nodes;
  std::vector<ViewTree> trees;
  std::vector<LightPart> light_parts;
  std::vector<IndicatorTriple> triples;
  // Result trees of each connected component, in union order.
  std::vector<std::vector<int>> component_trees;
  // Atom schemas as ascending variable ids.
  std::vector<std::vector<VarId>> atom_schema;
  // Leaf routing.
  std::vector<std::vector<int>> atom_leaves;
  std::vector<std::vector<int>> light_leaves;
  std::vector<std::vector<int>> h_leaves;
  std::vector<std::vector<int>> atom_light_parts;
  std::vector<std::vector<int>> atom_triples;

  void set_counters(Counters* c);
  std::size_t num_result_trees() const;
};

// Runs the skew-aware construction on every connected component.
Forest plan_forest(const ConjunctiveQuery& q, Mode mode);

// Calls emit(tuple over the node schema, multiplicity) for the join of child
// `slot` restricted to the single tuple d with the node's other children.
void join_delta(const Forest& f, int node, int slot, TupleView d, Mult m,
                const std::function<void(TupleView, Mult)>& emit);

// Recomputes the content of a non-leaf node from its children into `out`.
void recompute_into(const Forest& f, int node, Relation& out);
void recompute_node(Forest& f, int node);

std::string forest_to_dot(const Forest& f, const ConjunctiveQuery& q);
std::string forest_to_json(const Forest& f, const ConjunctiveQuery& q);

}  // namespace hqivm
