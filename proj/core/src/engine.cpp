#include "hqivm/engine.hpp"

#include <cmath>
#include <sstream>

#include <absl/container/flat_hash_map.h>

namespace hqivm {

std::string InvariantReport::to_string() const {
  std::string s;
  for (const auto& v : violations) s += v + "\n";
  return s;
}

Engine::Engine(const ConjunctiveQuery& q, const Database& db, EngineOptions options)
    : q_(q), epsilon_(options.epsilon), counters_(std::make_unique<Counters>()) {
  if (!(epsilon_ >= 0.0 && epsilon_ <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
  forest_ = plan_forest(q_, options.mode);

  for (int a = 0; a < q_.num_atoms(); ++a) {
    const Atom& at = q_.atoms()[a];
    const std::size_t arity = at.schema.size();
    auto it = relations_.find(at.symbol);
    if (it == relations_.end()) {
      std::vector<VarId> cols;
      for (std::size_t i = 0; i < arity; ++i) cols.push_back(static_cast<VarId>(i));
      it = relations_.emplace(at.symbol, Relation(cols, true)).first;
    } else if (it->second.arity() != arity) {
      throw ArityMismatch("symbol " + at.symbol + " used with different arities");
    }
  }
  for (auto& [sym, rel] : relations_) {
    auto d = db.find(sym);
    if (d == db.end()) continue;
    for (const auto& [t, m] : d->second) {
      if (t.size() != rel.arity()) throw ArityMismatch("tuple arity does not match relation " + sym);
      if (m < 0) throw RejectedDelete("negative multiplicity in input relation " + sym);
      if (m == 0) continue;
      rel.add(TupleView(t.data(), t.size()), m);
    }
    n_ += static_cast<std::int64_t>(rel.raw_size());
  }
  m_ = options.threshold_base ? *options.threshold_base : 2 * n_ + 1;
  if (m_ < 1) throw std::invalid_argument("threshold base must be positive");

  for (int a = 0; a < q_.num_atoms(); ++a) {
    const auto& schema = forest_.atom_schema[a];
    const auto& text = q_.atom_schema(a);
    std::vector<int> perm;
    for (VarId v : schema)
      for (std::size_t c = 0; c < text.size(); ++c)
        if (text[c] == v) perm.push_back(static_cast<int>(c));
    atom_perm_.push_back(perm);
    Relation base(schema, true);
    relations_.at(q_.atoms()[a].symbol).for_each([&](TupleView t, Mult m) {
      Tuple x;
      for (int c : perm) x.push_back(t[c]);
      base.add(x, m);
    });
    occ_base_.push_back(std::move(base));
    std::vector<std::vector<int>> per_triple;
    for (const auto& tr : forest_.triples) per_triple.push_back(positions_of(schema, tr.keys));
    triple_key_pos_.push_back(std::move(per_triple));
  }
  for (auto& lp : forest_.light_parts)
    lp.base_key_index = occ_base_[lp.atom].register_index(lp.key_pos);

  Counters* c = counters_.get();
  forest_.set_counters(c);
  for (auto& [sym, rel] : relations_) rel.set_counters(c);
  for (auto& r : occ_base_) r.set_counters(c);

  materialize();
  counters_->reset();
}

double Engine::theta() const { return std::pow(static_cast<double>(m_), epsilon_); }

const Relation& Engine::relation(const std::string& symbol) const {
  auto it = relations_.find(symbol);
  if (it == relations_.end()) throw UnknownRelation("relation " + symbol + " is not used by the query");
  return it->second;
}

Database Engine::database() const {
  Database db;
  for (const auto& [sym, rel] : relations_) db[sym] = rel.to_map();
  return db;
}

Tuple Engine::to_atom_order(int atom, const std::vector<Value>& t) const {
  Tuple x;
  for (int c : atom_perm_[atom]) x.push_back(t[c]);
  return x;
}

Tuple Engine::project(TupleView x, const std::vector<int>& pos) const {
  Tuple k;
  for (int p : pos) k.push_back(x[p]);
  return k;
}

void Engine::fill_from(int node, const Relation& src) {
  Relation& dst = forest_.nodes[node].content;
  dst.clear();
  src.for_each([&](TupleView t, Mult m) { dst.add(t, m); });
}

void Engine::recompute_heavy(int t) {
  IndicatorTriple& tr = forest_.triples[t];
  const Relation& all = forest_.nodes[forest_.trees[tr.all_tree].root].content;
  const Relation& light = forest_.nodes[forest_.trees[tr.light_tree].root].content;
  tr.heavy.clear();
  all.for_each([&](TupleView k, Mult) {
    if (light.lookup(k) == 0) tr.heavy.add(k, 1);
  });
}

void Engine::materialize() {
  const double th = theta();
  for (auto& lp : forest_.light_parts)
    lp.content = strict_partition(occ_base_[lp.atom], lp.key_pos, th, &lp.content);
  auto& nodes = forest_.nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind == NodeKind::Atom) fill_from(static_cast<int>(i), occ_base_[nodes[i].atom]);
    if (nodes[i].kind == NodeKind::LightAtom)
      fill_from(static_cast<int>(i), forest_.light_parts[nodes[i].light].content);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!nodes[i].children.empty() && forest_.trees[nodes[i].tree].role != TreeRole::Result)
      recompute_node(forest_, static_cast<int>(i));
  for (std::size_t t = 0; t < forest_.triples.size(); ++t) {
    recompute_heavy(static_cast<int>(t));
    for (int leaf : forest_.h_leaves[t]) fill_from(leaf, forest_.triples[t].heavy);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!nodes[i].children.empty() && forest_.trees[nodes[i].tree].role == TreeRole::Result)
      recompute_node(forest_, static_cast<int>(i));
}

void Engine::apply(int leaf, TupleView t, Mult m) {
  auto& nodes = forest_.nodes;
  nodes[leaf].content.add(t, m);
  using Delta = absl::flat_hash_map<Tuple, Mult, TupleHash, TupleEq>;
  Delta cur;
  cur.emplace(Tuple(t.begin(), t.end()), m);
  int child = leaf;
  while (nodes[child].parent >= 0 && !cur.empty()) {
    const int p = nodes[child].parent;
    const auto& kids = nodes[p].children;
    const int slot = static_cast<int>(std::find(kids.begin(), kids.end(), child) - kids.begin());
    Delta next;
    for (const auto& [d, dm] : cur)
      join_delta(forest_, p, slot, d, dm, [&](TupleView o, Mult om) {
        next[Tuple(o.begin(), o.end())] += om;
      });
    Delta applied;
    for (auto& [o, om] : next)
      if (om != 0) {
        nodes[p].content.add(o, om);
        applied.emplace(o, om);
      }
    cur = std::move(applied);
    child = p;
  }
}

void Engine::refresh_heavy(int t, TupleView key) {
  IndicatorTriple& tr = forest_.triples[t];
  const bool all = forest_.nodes[forest_.trees[tr.all_tree].root].content.lookup(key) != 0;
  const bool light = forest_.nodes[forest_.trees[tr.light_tree].root].content.lookup(key) != 0;
  const bool want = all && !light;
  const bool have = tr.heavy.lookup(key) != 0;
  if (want == have) return;
  const Mult d = want ? 1 : -1;
  tr.heavy.add(key, d);
  for (int leaf : forest_.h_leaves[t]) apply(leaf, key, d);
}

void Engine::apply_light(int l, TupleView x, Mult m) {
  LightPart& lp = forest_.light_parts[l];
  const Relation& lroot = forest_.nodes[forest_.trees[forest_.triples[lp.triple].light_tree].root].content;
  Tuple key = project(x, triple_key_pos_[lp.atom][lp.triple]);
  const bool before = lroot.lookup(key) != 0;
  lp.content.add(x, m);
  for (int leaf : forest_.light_leaves[l]) apply(leaf, x, m);
  const bool after = lroot.lookup(key) != 0;
  if (before != after) refresh_heavy(lp.triple, key);
}

void Engine::update_trees(int a, TupleView x, Mult m) {
  const auto& triples = forest_.atom_triples[a];
  std::vector<Tuple> keys;
  std::vector<bool> before;
  for (int t : triples) {
    keys.push_back(project(x, triple_key_pos_[a][t]));
    const Relation& all = forest_.nodes[forest_.trees[forest_.triples[t].all_tree].root].content;
    before.push_back(all.lookup(keys.back()) != 0);
  }
  for (int leaf : forest_.atom_leaves[a]) apply(leaf, x, m);
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Relation& all = forest_.nodes[forest_.trees[forest_.triples[triples[i]].all_tree].root].content;
    if ((all.lookup(keys[i]) != 0) != before[i]) refresh_heavy(triples[i], keys[i]);
  }
  for (int l : forest_.atom_light_parts[a]) {
    const LightPart& lp = forest_.light_parts[l];
    Tuple key = project(x, lp.key_pos);
    const bool fresh = occ_base_[a].index_count(lp.base_key_index, key) == 0;
    const bool light = lp.content.index_count(lp.content_key_index, key) > 0;
    if (fresh || light) apply_light(l, x, m);
  }
  occ_base_[a].add(x, m);
}

void Engine::minor_rebalancing(int l, TupleView key, Mult sign) {
  const LightPart& lp = forest_.light_parts[l];
  std::vector<std::pair<Tuple, Mult>> tuples;
  occ_base_[lp.atom].scan(lp.base_key_index, key, [&](TupleView t, Mult m) {
    tuples.emplace_back(Tuple(t.begin(), t.end()), m);
  });
  for (const auto& [t, m] : tuples) apply_light(l, t, sign * m);
  ++counters_->minors;
}

void Engine::major_rebalancing() {
  const double th = theta();
  for (auto& lp : forest_.light_parts)
    lp.content = strict_partition(occ_base_[lp.atom], lp.key_pos, th, &lp.content);
  auto& nodes = forest_.nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == NodeKind::LightAtom)
      fill_from(static_cast<int>(i), forest_.light_parts[nodes[i].light].content);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!nodes[i].children.empty() && nodes[i].partition_dependent &&
        forest_.trees[nodes[i].tree].role == TreeRole::Light)
      recompute_node(forest_, static_cast<int>(i));
  for (std::size_t t = 0; t < forest_.triples.size(); ++t) {
    recompute_heavy(static_cast<int>(t));
    for (int leaf : forest_.h_leaves[t]) fill_from(leaf, forest_.triples[t].heavy);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (!nodes[i].children.empty() && nodes[i].partition_dependent &&
        forest_.trees[nodes[i].tree].role == TreeRole::Result)
      recompute_node(forest_, static_cast<int>(i));
  ++counters_->majors;
  if (major_hook_) major_hook_(*this);
}

void Engine::on_update(const Update& u) {
  if (forest_.mode == Mode::Static) throw StaticModeUpdate("updates require dynamic mode");
  auto it = relations_.find(u.symbol);
  if (it == relations_.end()) throw UnknownRelation("relation " + u.symbol + " is not used by the query");
  Relation& rel = it->second;
  if (u.tuple.size() != rel.arity()) throw ArityMismatch("update arity does not match relation " + u.symbol);
  if (u.mult == 0) return;
  TupleView tv(u.tuple.data(), u.tuple.size());
  if (rel.lookup(tv) + u.mult < 0) throw RejectedDelete("delete exceeds multiplicity in " + u.symbol);

  UpdateScope scope(*counters_);
  ++generation_;
  const std::vector<int> occ = q_.occurrences(u.symbol);
  std::vector<Tuple> xs;
  for (int a : occ) {
    xs.push_back(to_atom_order(a, u.tuple));
    update_trees(a, xs.back(), u.mult);
  }
  const bool before = rel.lookup(tv) != 0;
  rel.add(tv, u.mult);
  const bool after = rel.lookup(tv) != 0;
  n_ += static_cast<std::int64_t>(after) - static_cast<std::int64_t>(before);

  if (n_ == m_) {
    m_ *= 2;
    major_rebalancing();
    return;
  }
  if (n_ < m_ / 4) {
    m_ = m_ / 2 - 1;
    major_rebalancing();
    return;
  }
  const double th = theta();
  const std::int64_t low = ceil_tol(0.5 * th);
  const std::int64_t high = ceil_tol(1.5 * th);
  for (std::size_t i = 0; i < occ.size(); ++i) {
    for (int l : forest_.atom_light_parts[occ[i]]) {
      const LightPart& lp = forest_.light_parts[l];
      Tuple key = project(xs[i], lp.key_pos);
      const auto lc = static_cast<std::int64_t>(lp.content.index_count(lp.content_key_index, key));
      const auto deg = static_cast<std::int64_t>(occ_base_[occ[i]].index_count(lp.base_key_index, key));
      if (lc == 0 && deg > 0 && deg < low) minor_rebalancing(l, key, +1);
      else if (lc >= high) minor_rebalancing(l, key, -1);
    }
  }
}

namespace {

bool positive(const Relation& r) {
  bool ok = true;
  for (std::size_t i = 0; i < r.raw_size(); ++i) ok = ok && r.row_mult(static_cast<std::uint32_t>(i)) > 0;
  return ok;
}

}  // namespace

InvariantReport Engine::check_invariants(bool deep) const {
  const std::uint64_t saved = counters_->storage_ops;
  InvariantReport rep;
  auto fail = [&](const std::string& s) { rep.violations.push_back(s); };

  if (forest_.mode == Mode::Dynamic && !(m_ / 4 <= n_ && n_ < m_))
    fail("size invariant: N=" + std::to_string(n_) + " M=" + std::to_string(m_));
  std::int64_t n = 0;
  for (const auto& [sym, rel] : relations_) n += static_cast<std::int64_t>(rel.raw_size());
  if (n != n_) fail("database size counter out of date");

  const double th = theta();
  const std::int64_t low = ceil_tol(0.5 * th);
  const std::int64_t high = ceil_tol(1.5 * th);
  for (const auto& lp : forest_.light_parts) {
    const Relation& base = occ_base_[lp.atom];
    absl::flat_hash_map<Tuple, std::int64_t, TupleHash, TupleEq> deg, light_deg;
    base.for_each([&](TupleView t, Mult) { ++deg[project(t, lp.key_pos)]; });
    lp.content.for_each([&](TupleView t, Mult m) {
      ++light_deg[project(t, lp.key_pos)];
      if (base.lookup(t) != m) fail(lp.name + ": light tuple differs from base");
    });
    for (const auto& [k, d] : deg) {
      auto it = light_deg.find(k);
      if (it == light_deg.end()) {
        if (d < low) fail(lp.name + ": heavy key below the lower threshold");
      } else {
        if (it->second != d) fail(lp.name + ": light key missing base tuples");
        if (d >= high) fail(lp.name + ": light key above the upper threshold");
      }
    }
    for (const auto& [k, d] : light_deg)
      if (!deg.contains(k)) fail(lp.name + ": light key absent from base");
  }

  for (std::size_t t = 0; t < forest_.triples.size(); ++t) {
    const IndicatorTriple& tr = forest_.triples[t];
    const Relation& all = forest_.nodes[forest_.trees[tr.all_tree].root].content;
    const Relation& light = forest_.nodes[forest_.trees[tr.light_tree].root].content;
    std::size_t expected = 0;
    all.for_each([&](TupleView k, Mult) {
      if (light.lookup(k) == 0) {
        ++expected;
        if (tr.heavy.lookup(k) != 1) fail("heavy indicator misses a key of All minus L");
      }
    });
    if (tr.heavy.raw_size() != expected) fail("heavy indicator has extra keys");
    for (int leaf : forest_.h_leaves[t])
      if (!forest_.nodes[leaf].content.same_content(tr.heavy))
        fail(forest_.nodes[leaf].name + ": differs from heavy indicator");
  }

  if (deep) {
    for (std::size_t i = 0; i < forest_.nodes.size(); ++i) {
      const ViewNode& v = forest_.nodes[i];
      if (!positive(v.content)) fail(v.name + ": non-positive multiplicity");
      if (!v.content.indexes_consistent()) fail(v.name + ": inconsistent index");
      if (v.kind == NodeKind::Atom && !v.content.same_content(occ_base_[v.atom]))
        fail(v.name + ": leaf differs from base relation");
      if (v.kind == NodeKind::LightAtom && !v.content.same_content(forest_.light_parts[v.light].content))
        fail(v.name + ": leaf differs from light part");
      if (!v.children.empty()) {
        Relation fresh(v.schema);
        recompute_into(forest_, static_cast<int>(i), fresh);
        if (!fresh.same_content(v.content)) fail(v.name + ": differs from recomputation");
      }
    }
    for (const auto& lp : forest_.light_parts)
      if (!lp.content.indexes_consistent()) fail(lp.name + ": inconsistent index");
    for (const auto& r : occ_base_)
      if (!r.indexes_consistent()) fail("occurrence base: inconsistent index");
  }
  counters_->storage_ops = saved;
  return rep;
}

std::vector<std::string> Engine::diff_state(const Engine& o) const {
  std::vector<std::string> d;
  const std::uint64_t saved = counters_->storage_ops, osaved = o.counters_->storage_ops;
  if (!(q_ == o.q_) || forest_.mode != o.forest_.mode || forest_.nodes.size() != o.forest_.nodes.size()) {
    d.push_back("query or plan");
    return d;
  }
  if (n_ != o.n_) d.push_back("N");
  if (m_ != o.m_) d.push_back("M");
  if (epsilon_ != o.epsilon_) d.push_back("epsilon");
  for (const auto& [sym, rel] : relations_)
    if (!rel.same_content(o.relations_.at(sym))) d.push_back("relation " + sym);
  for (std::size_t a = 0; a < occ_base_.size(); ++a)
    if (!occ_base_[a].same_content(o.occ_base_[a])) d.push_back("occurrence " + q_.atoms()[a].label());
  for (std::size_t l = 0; l < forest_.light_parts.size(); ++l)
    if (!forest_.light_parts[l].content.same_content(o.forest_.light_parts[l].content))
      d.push_back("light part " + forest_.light_parts[l].name);
  for (std::size_t t = 0; t < forest_.triples.size(); ++t)
    if (!forest_.triples[t].heavy.same_content(o.forest_.triples[t].heavy))
      d.push_back("heavy indicator " + std::to_string(t));
  for (std::size_t i = 0; i < forest_.nodes.size(); ++i)
    if (!forest_.nodes[i].content.same_content(o.forest_.nodes[i].content))
      d.push_back("view " + std::to_string(i) + " " + forest_.nodes[i].name);
  counters_->storage_ops = saved;
  o.counters_->storage_ops = osaved;
  return d;
}

}  // namespace hqivm
