#include "hqivm/viewtree.hpp"

#include <array>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hqivm {

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Atom: return "atom";
    case NodeKind::LightAtom: return "light-atom";
    case NodeKind::ExistsH: return "exists-heavy";
    case NodeKind::Join: return "join";
    case NodeKind::Aux: return "aux";
  }
  return "?";
}

const char* to_string(TreeRole r) {
  switch (r) {
    case TreeRole::Result: return "result";
    case TreeRole::All: return "indicator-all";
    case TreeRole::Light: return "indicator-light";
  }
  return "?";
}

namespace {

[[noreturn]] void plan_error(const std::string& what) {
  throw std::logic_error("view tree plan invariant violated: " + what);
}

std::string join_names(const ConjunctiveQuery& q, VarSet s) { return q.names(s); }

}  // namespace

Planner::Planner(const ConjunctiveQuery& q, Mode mode)
    : q_(q), vo_(canonical_vo(q)), mode_(mode) {}

std::string Planner::path(int vo_node) const {
  std::vector<std::string> parts;
  int n = vo_node;
  if (vo_.node(n).is_atom()) return q_.atoms()[vo_.node(n).atom].label();
  while (n >= 0) {
    parts.push_back(q_.var_name(vo_.node(n).var));
    n = vo_.node(n).parent;
  }
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) out += (out.empty() ? "" : "/") + *it;
  return out;
}

TPtr Planner::leaf(int atom, VarSet light_keys) {
  auto t = std::make_shared<TNode>();
  t->kind = light_keys ? NodeKind::LightAtom : NodeKind::Atom;
  t->atom = atom;
  t->light_keys = light_keys;
  t->schema = q_.atom_vars(atom);
  t->name = q_.atoms()[atom].label();
  if (light_keys) t->name += "^" + join_names(q_, light_keys);
  return t;
}

TPtr Planner::new_vt(const std::string& prefix, VarId var, VarSet schema, std::vector<TPtr> children) {
  if (children.size() == 1 && children[0]->schema == schema) return children[0];
  auto t = std::make_shared<TNode>();
  t->kind = NodeKind::Join;
  t->prefix = prefix;
  t->var = var;
  t->schema = schema;
  t->name = prefix + "@" + path(vo_.node_of_var(var));
  t->children = std::move(children);
  return t;
}

TPtr Planner::aux_view(int z_node, TPtr t) {
  if (mode_ != Mode::Dynamic || !vo_.has_sibling(z_node)) return t;
  VarSet a = vo_.anc(z_node);
  if (!(subset(a, t->schema) && a != t->schema)) return t;
  auto w = std::make_shared<TNode>();
  w->kind = NodeKind::Aux;
  w->prefix = t->prefix;
  w->schema = a;
  const VONode& z = vo_.node(z_node);
  if (!z.is_atom()) w->var = z.var;
  if (t->kind == NodeKind::Atom || t->kind == NodeKind::LightAtom) w->name = t->name + "'";
  else w->name = t->prefix + "'@" + path(z_node);
  w->children.push_back(std::move(t));
  return w;
}

TPtr Planner::build_vt(const std::string& prefix, int vo_node, VarSet free, VarSet light_keys) {
  const VONode& nd = vo_.node(vo_node);
  if (nd.is_atom()) return leaf(nd.atom, light_keys);
  std::vector<TPtr> ch;
  for (int c : nd.children) ch.push_back(build_vt(prefix, c, free, light_keys));
  VarSet ak = vo_.anc(vo_node) | bit(nd.var);
  if (subset(ak, free)) {
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] = aux_view(nd.children[i], ch[i]);
    return new_vt(prefix, nd.var, ak, std::move(ch));
  }
  VarSet fx = vo_.anc(vo_node) | (free & vo_.subtree_vars(vo_node));
  return new_vt(prefix, nd.var, fx, std::move(ch));
}

int Planner::indicator_vts(int vo_node) {
  const VONode& nd = vo_.node(vo_node);
  VarSet keys = vo_.anc(vo_node) | bit(nd.var);
  TripleTemplate t;
  t.var = nd.var;
  t.keys = keys;
  t.all = build_vt("All", vo_node, keys);
  t.light = build_vt("L", vo_node, keys, keys);
  triples_.push_back(std::move(t));
  return static_cast<int>(triples_.size() - 1);
}

int Planner::triple_for_keys(VarSet keys) const {
  for (std::size_t i = 0; i < triples_.size(); ++i)
    if (triples_[i].keys == keys) return static_cast<int>(i);
  return -1;
}

std::vector<TPtr> Planner::tau(int vo_node, VarSet free) {
  const VONode& nd = vo_.node(vo_node);
  if (nd.is_atom()) return {leaf(nd.atom, 0)};
  const VarId x = nd.var;
  const VarSet keys = vo_.anc(vo_node) | bit(x);
  const VarSet fx = vo_.anc(vo_node) | (free & vo_.subtree_vars(vo_node));
  ConjunctiveQuery qx = subquery(q_, vo_.subtree_atoms(vo_node), fx);
  if ((mode_ == Mode::Static && is_free_connex(qx)) ||
      (mode_ == Mode::Dynamic && is_q_hierarchical(qx)))
    return {build_vt("V", vo_node, fx)};

  std::vector<std::vector<TPtr>> sets;
  for (int c : nd.children) sets.push_back(tau(c, free));

  std::vector<TPtr> out;
  TPtr eh;
  if (!has(free, x)) {
    int t = indicator_vts(vo_node);
    auto h = std::make_shared<TNode>();
    h->kind = NodeKind::ExistsH;
    h->schema = keys;
    h->triple = t;
    h->var = x;
    h->name = "∃H@" + path(vo_node);
    eh = h;
    out.push_back(build_vt("V", vo_node, fx, keys));
  }
  std::vector<std::size_t> pick(sets.size(), 0);
  while (true) {
    std::vector<TPtr> ch;
    if (eh) ch.push_back(eh);
    for (std::size_t i = 0; i < sets.size(); ++i)
      ch.push_back(aux_view(nd.children[i], sets[i][pick[i]]));
    out.push_back(new_vt("V", x, keys, std::move(ch)));
    std::size_t i = sets.size();
    while (i > 0) {
      --i;
      if (++pick[i] < sets[i].size()) break;
      pick[i] = 0;
      if (i == 0) return out;
    }
    if (sets.empty()) return out;
  }
}

std::string render(const TPtr& t, const ConjunctiveQuery& q) {
  std::string s = t->name + "(" + q.names(t->schema) + ")";
  if (t->children.empty()) return s;
  s += "[";
  for (std::size_t i = 0; i < t->children.size(); ++i)
    s += (i ? "," : "") + render(t->children[i], q);
  return s + "]";
}

void Forest::set_counters(Counters* c) {
  for (auto& n : nodes) n.content.set_counters(c);
  for (auto& lp : light_parts) lp.content.set_counters(c);
  for (auto& t : triples) t.heavy.set_counters(c);
}

std::size_t Forest::num_result_trees() const {
  std::size_t n = 0;
  for (const auto& ts : component_trees) n += ts.size();
  return n;
}

namespace {

struct Builder {
  const ConjunctiveQuery& q;
  const Planner& p;
  Forest& f;

  int light_part(int atom, VarSet keys) {
    for (std::size_t i = 0; i < f.light_parts.size(); ++i)
      if (f.light_parts[i].atom == atom && f.light_parts[i].keys == keys) return static_cast<int>(i);
    LightPart lp;
    lp.atom = atom;
    lp.keys = keys;
    lp.name = q.atoms()[atom].label() + "^" + q.names(keys);
    lp.triple = p.triple_for_keys(keys);
    if (lp.triple < 0) plan_error("light part without indicator triple");
    lp.key_pos = positions_of(f.atom_schema[atom], keys);
    lp.content = Relation(f.atom_schema[atom]);
    lp.content_key_index = lp.content.register_index(lp.key_pos);
    f.light_parts.push_back(std::move(lp));
    return static_cast<int>(f.light_parts.size() - 1);
  }

  int inst(const TPtr& t, int tree) {
    std::vector<int> kids;
    for (const auto& c : t->children) kids.push_back(inst(c, tree));
    ViewNode n;
    n.name = t->name;
    n.kind = t->kind;
    n.mask = t->schema;
    n.schema = members(t->schema);
    n.tree = tree;
    n.atom = t->atom;
    n.var = t->var;
    n.triple = t->triple;
    if (t->kind == NodeKind::LightAtom) n.light = light_part(t->atom, t->light_keys);
    n.content = Relation(n.schema);
    n.children = kids;
    int id = static_cast<int>(f.nodes.size());
    for (int k : kids) f.nodes[k].parent = id;
    f.nodes.push_back(std::move(n));
    return id;
  }

  int add_tree(const TPtr& t, TreeRole role, int component, int triple) {
    int tid = static_cast<int>(f.trees.size());
    f.trees.push_back({});
    int root = inst(t, tid);
    f.trees[tid] = ViewTree{root, role, component, triple};
    return tid;
  }
};

void set_range(Relation& r, const std::vector<VarId>& schema, VarSet fixed, int& index, bool& point) {
  std::vector<int> pos = positions_of(schema, fixed);
  index = -1;
  point = false;
  if (pos.size() == schema.size()) point = true;
  else if (!pos.empty()) index = r.register_index(pos);
}

void assign_enum(Forest& f, const ConjunctiveQuery& q, int id, VarSet fixed) {
  ViewNode& v = f.nodes[id];
  const VarSet free = q.free_vars();
  v.fixed = fixed;
  v.out = v.leaf_vars & free;
  if (!subset(fixed & v.leaf_vars, v.mask)) plan_error(v.name + ": fixed variable hidden below view");
  v.h_child = -1;
  for (int c : v.children)
    if (f.nodes[c].kind == NodeKind::ExistsH) v.h_child = c;
  set_range(v.content, v.schema, fixed, v.range_index, v.range_point);

  if (subset(v.out, v.mask)) {
    v.emode = EnumMode::Covering;
    if (!subset(v.mask, fixed | free)) plan_error(v.name + ": covering view with unfixed bound variable");
    return;
  }
  if (v.h_child >= 0) {
    v.emode = EnumMode::Bucket;
    ViewNode& h = f.nodes[v.h_child];
    VarSet keys = h.mask;
    VarSet bfix = fixed | keys;
    if ((keys & ~fixed & free) != 0) plan_error(v.name + ": heavy key variable is free and unfixed");
    if (!subset(v.mask, bfix | free)) plan_error(v.name + ": bucket view with unfixed bound variable");
    set_range(v.content, v.schema, bfix, v.bucket_range_index, v.bucket_range_point);
    set_range(h.content, h.schema, fixed & keys, v.h_range_index, v.h_range_point);
    if (!subset(v.join_mask, bfix | v.mask)) plan_error(v.name + ": children not independent");
    std::vector<int> kids = v.children;
    VarSet cfix = bfix | v.mask;
    for (int c : kids)
      if (f.nodes[c].kind != NodeKind::ExistsH) assign_enum(f, q, c, cfix);
    return;
  }
  v.emode = EnumMode::Product;
  if (!subset(v.mask, fixed | free)) plan_error(v.name + ": product view with unfixed bound variable");
  if (v.children.size() > 1 && !subset(v.join_mask, fixed | v.mask))
    plan_error(v.name + ": children not independent");
  std::vector<int> kids = v.children;
  VarSet cfix = fixed | v.mask;
  for (int c : kids) assign_enum(f, q, c, cfix);
}

}  // namespace

Forest plan_forest(const ConjunctiveQuery& q, Mode mode) {
  require_hierarchical(q);
  Planner p(q, mode);
  const VariableOrder& vo = p.vo();

  std::vector<std::vector<TPtr>> per_component;
  for (int r : vo.roots()) per_component.push_back(p.tau(r, q.free_vars()));

  Forest f;
  f.mode = mode;
  for (int a = 0; a < q.num_atoms(); ++a) f.atom_schema.push_back(members(q.atom_vars(a)));
  Builder b{q, p, f};

  const auto& tt = p.triples();
  std::vector<std::pair<int, int>> triple_trees;
  for (std::size_t t = 0; t < tt.size(); ++t) {
    int all = b.add_tree(tt[t].all, TreeRole::All, -1, static_cast<int>(t));
    int light = b.add_tree(tt[t].light, TreeRole::Light, -1, static_cast<int>(t));
    triple_trees.push_back({all, light});
  }
  for (std::size_t c = 0; c < per_component.size(); ++c) {
    std::vector<int> ids;
    for (const auto& t : per_component[c])
      ids.push_back(b.add_tree(t, TreeRole::Result, static_cast<int>(c), -1));
    f.component_trees.push_back(std::move(ids));
  }

  // Node ids are children-first, so one forward pass is bottom-up.
  for (auto& n : f.nodes) {
    n.leaf_vars = n.children.empty() ? n.mask : 0;
    n.partition_dependent = n.kind == NodeKind::LightAtom || n.kind == NodeKind::ExistsH;
    for (int c : n.children) {
      n.leaf_vars |= f.nodes[c].leaf_vars;
      n.partition_dependent |= f.nodes[c].partition_dependent;
    }
  }

  f.atom_leaves.assign(q.num_atoms(), {});
  f.light_leaves.assign(f.light_parts.size(), {});
  f.h_leaves.assign(tt.size(), {});
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    const ViewNode& n = f.nodes[i];
    int id = static_cast<int>(i);
    if (n.kind == NodeKind::Atom) f.atom_leaves[n.atom].push_back(id);
    if (n.kind == NodeKind::LightAtom) f.light_leaves[n.light].push_back(id);
    if (n.kind == NodeKind::ExistsH) f.h_leaves[n.triple].push_back(id);
  }

  // Join metadata.
  for (auto& v : f.nodes) {
    if (v.children.empty()) continue;
    VarSet p_mask = ~VarSet{0}, all = 0;
    for (int c : v.children) {
      p_mask &= f.nodes[c].mask;
      all |= f.nodes[c].mask;
    }
    for (std::size_t i = 0; i < v.children.size(); ++i)
      for (std::size_t j = i + 1; j < v.children.size(); ++j)
        if ((f.nodes[v.children[i]].mask & f.nodes[v.children[j]].mask) != p_mask)
          plan_error(v.name + ": children do not meet on a common key");
    if (!subset(v.mask, all)) plan_error(v.name + ": schema not covered by children");
    v.join_mask = p_mask;
    v.join_vars = members(p_mask);
    v.joins.clear();
    for (int c : v.children) {
      ViewNode& cn = f.nodes[c];
      ChildJoin cj;
      if (v.children.size() > 1 && cn.mask != p_mask) {
        VarSet extra = cn.mask & v.mask & ~p_mask;
        cj.kind = extra ? ChildJoin::Scan : ChildJoin::Sum;
        cj.index = cn.content.register_index(positions_of(cn.schema, p_mask));
        cj.extra_vars = members(extra);
        cj.extra_pos = positions_of(cn.schema, extra);
      }
      v.joins.push_back(std::move(cj));
    }
  }

  for (std::size_t t = 0; t < tt.size(); ++t) {
    IndicatorTriple it;
    it.var = tt[t].var;
    it.keys = tt[t].keys;
    it.key_vars = members(it.keys);
    it.all_tree = triple_trees[t].first;
    it.light_tree = triple_trees[t].second;
    it.atoms = vo.subtree_atoms(vo.node_of_var(it.var));
    it.heavy = Relation(it.key_vars);
    for (std::size_t l = 0; l < f.light_parts.size(); ++l)
      if (f.light_parts[l].triple == static_cast<int>(t)) it.light_parts.push_back(static_cast<int>(l));
    if (f.nodes[f.trees[it.all_tree].root].mask != it.keys ||
        f.nodes[f.trees[it.light_tree].root].mask != it.keys)
      plan_error("indicator root schema differs from its keys");
    f.triples.push_back(std::move(it));
  }
  f.atom_triples.assign(q.num_atoms(), {});
  f.atom_light_parts.assign(q.num_atoms(), {});
  for (std::size_t t = 0; t < f.triples.size(); ++t)
    for (int a : members(f.triples[t].atoms)) f.atom_triples[a].push_back(static_cast<int>(t));
  for (std::size_t l = 0; l < f.light_parts.size(); ++l)
    f.atom_light_parts[f.light_parts[l].atom].push_back(static_cast<int>(l));

  for (const auto& ids : f.component_trees)
    for (int t : ids) assign_enum(f, q, f.trees[t].root, 0);
  return f;
}

void join_delta(const Forest& f, int node, int slot, TupleView d, Mult m,
                const std::function<void(TupleView, Mult)>& emit) {
  const ViewNode& v = f.nodes[node];
  const ViewNode& src = f.nodes[v.children[slot]];
  std::array<Value, kMaxVars> bind{};
  for (std::size_t i = 0; i < src.schema.size(); ++i) bind[src.schema[i]] = d[i];
  Tuple key;
  for (VarId x : v.join_vars) key.push_back(bind[x]);

  Mult factor = m;
  struct ScanPart {
    const ViewNode* node;
    const ChildJoin* join;
    absl::Span<const std::uint32_t> rows;
  };
  absl::InlinedVector<ScanPart, 4> scans;
  for (std::size_t i = 0; i < v.children.size(); ++i) {
    if (static_cast<int>(i) == slot) continue;
    const ViewNode& c = f.nodes[v.children[i]];
    const ChildJoin& cj = v.joins[i];
    Mult s = 0;
    switch (cj.kind) {
      case ChildJoin::Lookup:
        s = c.content.lookup(key);
        break;
      case ChildJoin::Sum:
        s = c.content.index_sum(cj.index, key);
        break;
      case ChildJoin::Scan: {
        auto rows = c.content.index_rows(cj.index, key);
        if (rows.empty()) return;
        scans.push_back({&c, &cj, rows});
        continue;
      }
    }
    if (s == 0) return;
    factor *= s;
  }

  Tuple out(v.schema.size());
  auto finish = [&](Mult mm) {
    for (std::size_t i = 0; i < v.schema.size(); ++i) out[i] = bind[v.schema[i]];
    emit(out, mm);
  };
  std::function<void(std::size_t, Mult)> rec = [&](std::size_t k, Mult mm) {
    if (k == scans.size()) {
      finish(mm);
      return;
    }
    const ScanPart& sp = scans[k];
    for (std::uint32_t r : sp.rows) {
      sp.node->content.note();
      TupleView row = sp.node->content.row(r);
      for (std::size_t e = 0; e < sp.join->extra_vars.size(); ++e)
        bind[sp.join->extra_vars[e]] = row[sp.join->extra_pos[e]];
      rec(k + 1, mm * sp.node->content.row_mult(r));
    }
  };
  if (scans.empty()) finish(factor);
  else rec(0, factor);
}

void recompute_into(const Forest& f, int node, Relation& out) {
  const ViewNode& v = f.nodes[node];
  out.clear();
  if (v.children.empty()) return;
  int driver = 0;
  for (std::size_t i = 1; i < v.children.size(); ++i)
    if (f.nodes[v.children[i]].content.raw_size() < f.nodes[v.children[driver]].content.raw_size())
      driver = static_cast<int>(i);
  f.nodes[v.children[driver]].content.for_each([&](TupleView t, Mult m) {
    join_delta(f, node, driver, t, m, [&](TupleView o, Mult mm) { out.add(o, mm); });
  });
}

void recompute_node(Forest& f, int node) {
  Relation& out = f.nodes[node].content;
  Relation tmp = std::move(out);
  tmp.clear();
  recompute_into(f, node, tmp);
  f.nodes[node].content = std::move(tmp);
}

std::string forest_to_dot(const Forest& f, const ConjunctiveQuery& q) {
  std::ostringstream os;
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    const ViewTree& tr = f.trees[t];
    os << "digraph \"tree" << t << "_" << to_string(tr.role) << "\" {\n";
    std::vector<int> stack{tr.root};
    while (!stack.empty()) {
      int id = stack.back();
      stack.pop_back();
      const ViewNode& n = f.nodes[id];
      os << "  n" << id << " [label=\"" << n.name << "(" << q.names(n.mask) << ")\"";
      if (n.kind == NodeKind::Aux) os << ",style=dashed";
      if (n.children.empty()) os << ",shape=box";
      os << "];\n";
      for (int c : n.children) {
        os << "  n" << id << " -> n" << c << ";\n";
        stack.push_back(c);
      }
    }
    os << "}\n";
  }
  return os.str();
}

std::string forest_to_json(const Forest& f, const ConjunctiveQuery& q) {
  using nlohmann::json;
  json j;
  j["mode"] = f.mode == Mode::Static ? "static" : "dynamic";
  json trees = json::array();
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    const ViewTree& tr = f.trees[t];
    json jt;
    jt["id"] = t;
    jt["role"] = to_string(tr.role);
    jt["root"] = tr.root;
    if (tr.component >= 0) jt["component"] = tr.component;
    if (tr.triple >= 0) jt["triple"] = tr.triple;
    trees.push_back(jt);
  }
  j["trees"] = trees;
  json nodes = json::array();
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    const ViewNode& n = f.nodes[i];
    json jn;
    jn["id"] = i;
    jn["name"] = n.name;
    jn["kind"] = to_string(n.kind);
    json schema = json::array();
    for (VarId v : n.schema) schema.push_back(q.var_name(v));
    jn["schema"] = schema;
    jn["children"] = n.children;
    jn["tree"] = n.tree;
    jn["size"] = n.content.raw_size();
    nodes.push_back(jn);
  }
  j["nodes"] = nodes;
  json triples = json::array();
  for (const auto& t : f.triples) {
    json jt;
    jt["variable"] = q.var_name(t.var);
    json keys = json::array();
    for (VarId v : t.key_vars) keys.push_back(q.var_name(v));
    jt["keys"] = keys;
    jt["all_tree"] = t.all_tree;
    jt["light_tree"] = t.light_tree;
    jt["heavy_size"] = t.heavy.raw_size();
    triples.push_back(jt);
  }
  j["indicators"] = triples;
  json lps = json::array();
  for (const auto& lp : f.light_parts) lps.push_back({{"name", lp.name}, {"size", lp.content.raw_size()}});
  j["light_parts"] = lps;
  return j.dump(2);
}

}  // namespace hqivm
