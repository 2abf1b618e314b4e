#include "hqivm/enumerate.hpp"

namespace hqivm {

namespace {

void copy_vars(VarSet vars, const Slots& from, Slots& to) {
  while (vars) {
    int v = std::countr_zero(vars);
    to[v] = from[v];
    vars &= vars - 1;
  }
}

Tuple project(const std::vector<VarId>& vars, const Slots& s) {
  Tuple k;
  for (VarId v : vars) k.push_back(s[v]);
  return k;
}

// Rows of `r` selected by a point, an index or the full relation.
template <class F>
void for_range(const Relation& r, int index, bool point, const Slots& s, F&& f) {
  if (point) {
    Tuple k = project(r.schema(), s);
    if (auto row = r.find_row(k)) f(*row);
    return;
  }
  if (index >= 0) {
    Tuple k;
    for (int p : r.index_positions(index)) k.push_back(s[r.schema()[p]]);
    for (std::uint32_t row : r.index_rows(index, k)) {
      r.note();
      f(row);
    }
    return;
  }
  const std::size_t n = r.size();
  for (std::uint32_t row = 0; row < n; ++row) {
    r.note();
    f(row);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

UnionCursor::UnionCursor(std::vector<std::unique_ptr<Cursor>> inputs) : in_(std::move(inputs)) {}

VarSet UnionCursor::out_vars() const { return in_.empty() ? 0 : in_[0]->out_vars(); }

void UnionCursor::open(const Slots& ctx) {
  ctx_ = ctx;
  for (auto& c : in_) c->open(ctx);
  first_ = 0;
  opened_ = true;
}

void UnionCursor::close() {
  for (auto& c : in_) c->close();
  opened_ = false;
}

Mult UnionCursor::next(Slots& out) {
  if (!opened_) throw CallBeforeOpen("union cursor used before open");
  const std::size_t n = in_.size();
  Slots t = ctx_;
  Mult m = 0;
  while (first_ < n) {
    t = ctx_;
    m = in_[first_]->next(t);
    if (m != 0) break;
    ++first_;
  }
  if (first_ == n) return 0;
  std::size_t level = first_;
  for (std::size_t k = level + 1; k < n; ++k) {
    if (in_[k]->lookup(t) == 0) continue;
    Slots t2 = ctx_;
    Mult mk = in_[k]->next(t2);
    if (mk == 0) throw std::logic_error("union input exhausted while replacing a shared tuple");
    t = t2;
    m = mk;
    level = k;
  }
  for (std::size_t i = 0; i < level; ++i) m += in_[i]->lookup(t);
  copy_vars(out_vars(), t, out);
  return m;
}

Mult UnionCursor::lookup(const Slots& t) const {
  Mult m = 0;
  for (const auto& c : in_) m += c->lookup(t);
  return m;
}

// ---------------------------------------------------------------------------

ProductCursor::ProductCursor(std::vector<std::unique_ptr<Cursor>> inputs)
    : in_(std::move(inputs)), cur_(in_.size()), vals_(in_.size()) {
  for (const auto& c : in_) out_ |= c->out_vars();
}

void ProductCursor::open(const Slots& ctx) {
  ctx_ = ctx;
  for (auto& c : in_) c->open(ctx);
  opened_ = true;
  started_ = false;
  done_ = false;
}

void ProductCursor::close() {
  for (auto& c : in_) c->close();
  opened_ = false;
}

Mult ProductCursor::next(Slots& out) {
  if (!opened_) throw CallBeforeOpen("product cursor used before open");
  if (done_) return 0;
  const std::size_t n = in_.size();
  if (!started_) {
    started_ = true;
    for (std::size_t i = 0; i < n; ++i) {
      vals_[i] = ctx_;
      cur_[i] = in_[i]->next(vals_[i]);
      if (cur_[i] == 0) {
        done_ = true;
        return 0;
      }
    }
  } else {
    if (n == 0) {
      done_ = true;
      return 0;
    }
    std::size_t i = n - 1;
    while (true) {
      Slots s = ctx_;
      Mult c = in_[i]->next(s);
      if (c != 0) {
        vals_[i] = s;
        cur_[i] = c;
        break;
      }
      if (i == 0) {
        done_ = true;
        return 0;
      }
      in_[i]->open(ctx_);
      vals_[i] = ctx_;
      cur_[i] = in_[i]->next(vals_[i]);
      --i;
    }
  }
  Mult m = 1;
  for (std::size_t i = 0; i < n; ++i) {
    m *= cur_[i];
    copy_vars(in_[i]->out_vars(), vals_[i], out);
  }
  return m;
}

Mult ProductCursor::lookup(const Slots& t) const {
  Mult m = 1;
  for (const auto& c : in_) {
    m *= c->lookup(t);
    if (m == 0) return 0;
  }
  return m;
}

// ---------------------------------------------------------------------------

Mult lookup_view(const Forest& f, int node, const Slots& t, bool skip_heavy) {
  const ViewNode& v = f.nodes[node];
  if (v.emode == EnumMode::Covering) return v.content.lookup(project(v.schema, t));
  if (v.emode == EnumMode::Bucket && !skip_heavy) {
    const Relation& h = f.nodes[v.h_child].content;
    Mult sum = 0;
    for_range(h, v.h_range_index, v.h_range_point, t, [&](std::uint32_t r) {
      Slots s = t;
      TupleView key = h.row(r);
      for (std::size_t i = 0; i < key.size(); ++i) s[h.schema()[i]] = key[i];
      sum += lookup_view(f, node, s, true);
    });
    return sum;
  }
  if (v.content.lookup(project(v.schema, t)) == 0) return 0;
  Mult m = 1;
  for (int c : v.children) {
    if (c == v.h_child) continue;
    m *= lookup_view(f, c, t, false);
    if (m == 0) return 0;
  }
  return m;
}

TreeIterator::TreeIterator(const Forest& f, int node, bool bucket)
    : f_(f), node_(node), bucket_mode_(bucket) {
  const ViewNode& v = f_.nodes[node_];
  mode_ = bucket ? EnumMode::Product : v.emode;
  if (mode_ == EnumMode::Product) {
    std::vector<std::unique_ptr<Cursor>> kids;
    for (int c : v.children)
      if (c != v.h_child) kids.push_back(std::make_unique<TreeIterator>(f_, c));
    product_ = std::make_unique<ProductCursor>(std::move(kids));
  }
}

VarSet TreeIterator::out_vars() const { return f_.nodes[node_].out; }

std::uint32_t TreeIterator::row_at(std::size_t i) const {
  if (point_) return *point_;
  if (all_rows_) return static_cast<std::uint32_t>(i);
  return rows_[i];
}

void TreeIterator::write_row(std::uint32_t r, Slots& s) const {
  const ViewNode& v = f_.nodes[node_];
  TupleView row = v.content.row(r);
  for (std::size_t i = 0; i < v.schema.size(); ++i) s[v.schema[i]] = row[i];
}

void TreeIterator::open(const Slots& ctx) {
  const ViewNode& v = f_.nodes[node_];
  ctx_ = ctx;
  opened_ = true;
  in_row_ = false;
  pos_ = 0;
  end_ = 0;
  point_.reset();
  all_rows_ = false;
  rows_ = {};
  heavy_.clear();
  buckets_.clear();
  first_ = 0;

  if (mode_ == EnumMode::Bucket) {
    const Relation& h = f_.nodes[v.h_child].content;
    for_range(h, v.h_range_index, v.h_range_point, ctx_, [&](std::uint32_t r) {
      TupleView k = h.row(r);
      heavy_.emplace_back(k.begin(), k.end());
    });
    buckets_.resize(heavy_.size());
    return;
  }
  const int index = bucket_mode_ ? v.bucket_range_index : v.range_index;
  const bool point = bucket_mode_ ? v.bucket_range_point : v.range_point;
  if (point) {
    point_ = v.content.find_row(project(v.schema, ctx_));
    end_ = point_ ? 1 : 0;
  } else if (index >= 0) {
    Tuple k;
    for (int p : v.content.index_positions(index)) k.push_back(ctx_[v.schema[p]]);
    rows_ = v.content.index_rows(index, k);
    end_ = rows_.size();
  } else {
    all_rows_ = true;
    end_ = v.content.size();
  }
}

void TreeIterator::close() {
  opened_ = false;
  if (product_) product_->close();
  heavy_.clear();
  buckets_.clear();
}

Mult TreeIterator::next(Slots& out) {
  if (!opened_) throw CallBeforeOpen("view iterator used before open");
  return mode_ == EnumMode::Bucket ? next_bucket(out) : next_row(out);
}

Mult TreeIterator::next_row(Slots& out) {
  const ViewNode& v = f_.nodes[node_];
  if (mode_ == EnumMode::Covering) {
    if (pos_ >= end_) return 0;
    std::uint32_t r = row_at(pos_++);
    v.content.note();
    write_row(r, out);
    return v.content.row_mult(r);
  }
  while (true) {
    if (in_row_) {
      Mult m = product_->next(out);
      if (m != 0) {
        write_row(row_, out);
        return m;
      }
      in_row_ = false;
    }
    if (pos_ >= end_) return 0;
    row_ = row_at(pos_++);
    v.content.note();
    Slots c = ctx_;
    write_row(row_, c);
    product_->open(c);
    in_row_ = true;
  }
}

TreeIterator& TreeIterator::bucket(std::size_t i) {
  if (!buckets_[i]) {
    const ViewNode& h = f_.nodes[f_.nodes[node_].h_child];
    buckets_[i] = std::make_unique<TreeIterator>(f_, node_, true);
    Slots c = ctx_;
    for (std::size_t j = 0; j < h.schema.size(); ++j) c[h.schema[j]] = heavy_[i][j];
    buckets_[i]->open(c);
  }
  return *buckets_[i];
}

Mult TreeIterator::bucket_lookup(std::size_t i, const Slots& t) const {
  const ViewNode& h = f_.nodes[f_.nodes[node_].h_child];
  Slots s = t;
  for (std::size_t j = 0; j < h.schema.size(); ++j) s[h.schema[j]] = heavy_[i][j];
  return lookup_view(f_, node_, s, true);
}

Mult TreeIterator::next_bucket(Slots& out) {
  const std::size_t n = heavy_.size();
  Slots t = ctx_;
  Mult m = 0;
  while (first_ < n) {
    t = ctx_;
    m = bucket(first_).next(t);
    if (m != 0) break;
    ++first_;
  }
  if (first_ == n) return 0;
  std::size_t level = first_;
  for (std::size_t k = level + 1; k < n; ++k) {
    if (bucket_lookup(k, t) == 0) continue;
    Slots t2 = ctx_;
    Mult mk = bucket(k).next(t2);
    if (mk == 0) throw std::logic_error("bucket exhausted while replacing a shared tuple");
    t = t2;
    m = mk;
    level = k;
  }
  for (std::size_t i = 0; i < level; ++i) m += bucket_lookup(i, t);
  copy_vars(out_vars(), t, out);
  return m;
}

Mult TreeIterator::lookup(const Slots& t) const {
  if (!bucket_mode_) return lookup_view(f_, node_, t, false);
  const ViewNode& h = f_.nodes[f_.nodes[node_].h_child];
  Slots s = t;
  for (VarId x : h.schema) s[x] = ctx_[x];
  return lookup_view(f_, node_, s, true);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Cursor> tree_cursor(const Forest& f, int tree) {
  return std::make_unique<TreeIterator>(f, f.trees[tree].root);
}

std::unique_ptr<Cursor> component_cursor(const Forest& f, int component) {
  const auto& ids = f.component_trees[component];
  if (ids.size() == 1) return tree_cursor(f, ids[0]);
  std::vector<std::unique_ptr<Cursor>> in;
  for (int t : ids) in.push_back(tree_cursor(f, t));
  return std::make_unique<UnionCursor>(std::move(in));
}

ResultIterator::ResultIterator(const Engine& e) : e_(e), generation_(e.generation()) {
  const std::uint64_t start = e_.counters().storage_ops;
  std::vector<std::unique_ptr<Cursor>> comps;
  for (std::size_t c = 0; c < e_.forest().component_trees.size(); ++c)
    comps.push_back(component_cursor(e_.forest(), static_cast<int>(c)));
  root_ = std::make_unique<ProductCursor>(std::move(comps));
  root_->open(Slots{});
  opened_ops_ = e_.counters().storage_ops - start;
}

std::optional<std::pair<std::vector<Value>, Mult>> ResultIterator::next() {
  if (e_.generation() != generation_) throw StaleIterator("engine was updated during enumeration");
  Counters& c = e_.counters();
  const std::uint64_t start = c.storage_ops;
  Mult m = root_->next(out_);
  record_next(c, c.storage_ops - start + opened_ops_);
  opened_ops_ = 0;
  if (m == 0) return std::nullopt;
  std::vector<Value> t;
  for (VarId v : e_.query().head_ids()) t.push_back(out_[v]);
  return std::make_pair(std::move(t), m);
}

ResultIterator enumerate_result(const Engine& e) { return ResultIterator(e); }

std::map<std::vector<Value>, Mult> collect(const Engine& e) {
  std::map<std::vector<Value>, Mult> out;
  ResultIterator it(e);
  while (auto r = it.next()) {
    if (r->second <= 0) throw std::logic_error("non-positive multiplicity in enumeration");
    if (!out.emplace(r->first, r->second).second) throw std::logic_error("tuple enumerated twice");
  }
  return out;
}

}  // namespace hqivm
