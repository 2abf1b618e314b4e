#include "hqivm/storage.hpp"

#include <algorithm>
#include <cmath>

namespace hqivm {

Value Interner::intern(const std::string& s) {
  auto [it, fresh] = ids_.try_emplace(s, static_cast<Value>(names_.size()));
  if (fresh) names_.push_back(s);
  return it->second;
}

Relation::Relation() : Relation(std::vector<VarId>{}) {}

Relation::Relation(std::vector<VarId> schema, bool base, Counters* counters)
    : schema_(std::move(schema)), base_(base), counters_(counters), rows_(std::make_unique<Rows>()) {
  rows_->arity = schema_.size();
  set_ = std::make_unique<RowSet>(0, RowHash{rows_.get()}, RowEq{rows_.get()});
}

Relation::Relation(const Relation& o)
    : schema_(o.schema_), base_(o.base_), counters_(o.counters_), rows_(std::make_unique<Rows>(*o.rows_)) {
  set_ = std::make_unique<RowSet>(0, RowHash{rows_.get()}, RowEq{rows_.get()});
  for (const Index& ix : o.indexes_) {
    Index n;
    n.pos = ix.pos;
    indexes_.push_back(std::move(n));
  }
  rebuild();
}

Relation& Relation::operator=(const Relation& o) {
  if (this != &o) {
    Relation tmp(o);
    *this = std::move(tmp);
  }
  return *this;
}

void Relation::rebuild() {
  set_->clear();
  const std::uint32_t n = static_cast<std::uint32_t>(rows_->mults.size());
  set_->reserve(n);
  for (std::uint32_t r = 0; r < n; ++r) set_->insert(r);
  for (Index& ix : indexes_) {
    ix.map.clear();
    ix.slot.assign(n, 0);
    for (std::uint32_t r = 0; r < n; ++r) index_insert(ix, r);
  }
}

Mult Relation::lookup(TupleView t) const {
  note();
  if (t.size() != arity()) throw ArityMismatch("lookup arity mismatch");
  auto it = set_->find(t);
  return it == set_->end() ? 0 : rows_->mults[*it];
}

std::optional<std::uint32_t> Relation::find_row(TupleView t) const {
  note();
  auto it = set_->find(t);
  if (it == set_->end()) return std::nullopt;
  return *it;
}

bool Relation::would_reject(TupleView t, Mult m) const { return base_ && lookup(t) + m < 0; }

Tuple Relation::key_of(std::uint32_t r, const Index& ix) const {
  TupleView v = row(r);
  Tuple k;
  k.reserve(ix.pos.size());
  for (int p : ix.pos) k.push_back(v[p]);
  return k;
}

void Relation::index_insert(Index& ix, std::uint32_t r) {
  Bucket& b = ix.map[key_of(r, ix)];
  if (ix.slot.size() <= r) ix.slot.resize(r + 1);
  ix.slot[r] = static_cast<std::uint32_t>(b.rows.size());
  b.rows.push_back(r);
  b.sum += rows_->mults[r];
}

void Relation::index_erase(Index& ix, std::uint32_t r) {
  auto it = ix.map.find(key_of(r, ix));
  Bucket& b = it->second;
  std::uint32_t s = ix.slot[r];
  std::uint32_t last = b.rows.back();
  b.rows[s] = last;
  ix.slot[last] = s;
  b.rows.pop_back();
  b.sum -= rows_->mults[r];
  if (b.rows.empty()) ix.map.erase(it);
}

void Relation::add(TupleView t, Mult m) {
  note();
  if (t.size() != arity()) throw ArityMismatch("tuple arity does not match relation schema");
  if (m == 0) return;
  auto it = set_->find(t);
  if (it == set_->end()) {
    if (base_ && m < 0) throw RejectedDelete("delete of absent tuple rejected");
    std::uint32_t r = static_cast<std::uint32_t>(rows_->mults.size());
    rows_->vals.insert(rows_->vals.end(), t.begin(), t.end());
    rows_->mults.push_back(m);
    set_->insert(r);
    for (Index& ix : indexes_) index_insert(ix, r);
    return;
  }
  std::uint32_t r = *it;
  Mult nm = rows_->mults[r] + m;
  if (base_ && nm < 0) throw RejectedDelete("delete below zero multiplicity rejected");
  if (nm != 0) {
    rows_->mults[r] = nm;
    for (Index& ix : indexes_) ix.map.find(key_of(r, ix))->second.sum += m;
    return;
  }
  // Remove row r, then move the last row into its slot.
  for (Index& ix : indexes_) index_erase(ix, r);
  set_->erase(it);
  std::uint32_t last = static_cast<std::uint32_t>(rows_->mults.size() - 1);
  if (r != last) {
    set_->erase(set_->find(row(last)));
    std::copy_n(rows_->vals.begin() + last * arity(), arity(), rows_->vals.begin() + r * arity());
    rows_->mults[r] = rows_->mults[last];
    set_->insert(r);
    for (Index& ix : indexes_) {
      std::uint32_t s = ix.slot[last];
      ix.map.find(key_of(r, ix))->second.rows[s] = r;
      ix.slot[r] = s;
    }
  }
  rows_->vals.resize(last * arity());
  rows_->mults.pop_back();
  for (Index& ix : indexes_)
    if (ix.slot.size() > last) ix.slot.resize(last);
}

void Relation::clear() {
  rows_->vals.clear();
  rows_->mults.clear();
  set_->clear();
  for (Index& ix : indexes_) {
    ix.map.clear();
    ix.slot.clear();
  }
}

int Relation::register_index(const std::vector<int>& positions) {
  int existing = index_of(positions);
  if (existing >= 0) return existing;
  for (int p : positions)
    if (p < 0 || p >= static_cast<int>(arity())) throw UnregisteredIndex("index position out of range");
  Index ix;
  ix.pos = positions;
  const std::uint32_t n = static_cast<std::uint32_t>(rows_->mults.size());
  ix.slot.assign(n, 0);
  indexes_.push_back(std::move(ix));
  for (std::uint32_t r = 0; r < n; ++r) index_insert(indexes_.back(), r);
  return static_cast<int>(indexes_.size() - 1);
}

int Relation::index_of(const std::vector<int>& positions) const {
  for (std::size_t i = 0; i < indexes_.size(); ++i)
    if (indexes_[i].pos == positions) return static_cast<int>(i);
  return -1;
}

const Relation::Index& Relation::index(int idx) const {
  if (idx < 0 || idx >= static_cast<int>(indexes_.size()))
    throw UnregisteredIndex("index " + std::to_string(idx) + " is not registered");
  return indexes_[idx];
}

std::size_t Relation::index_count(int idx, TupleView key) const {
  note();
  const Index& ix = index(idx);
  auto it = ix.map.find(key);
  return it == ix.map.end() ? 0 : it->second.rows.size();
}

Mult Relation::index_sum(int idx, TupleView key) const {
  note();
  const Index& ix = index(idx);
  auto it = ix.map.find(key);
  return it == ix.map.end() ? 0 : it->second.sum;
}

absl::Span<const std::uint32_t> Relation::index_rows(int idx, TupleView key) const {
  note();
  const Index& ix = index(idx);
  auto it = ix.map.find(key);
  if (it == ix.map.end()) return {};
  return absl::MakeConstSpan(it->second.rows);
}

std::map<std::vector<Value>, Mult> Relation::to_map() const {
  std::map<std::vector<Value>, Mult> out;
  for (std::uint32_t r = 0; r < rows_->mults.size(); ++r) {
    TupleView v = row(r);
    out[std::vector<Value>(v.begin(), v.end())] = rows_->mults[r];
  }
  return out;
}

bool Relation::same_content(const Relation& o) const {
  if (arity() != o.arity() || raw_size() != o.raw_size()) return false;
  for (std::uint32_t r = 0; r < rows_->mults.size(); ++r) {
    auto it = o.set_->find(row(r));
    if (it == o.set_->end() || o.rows_->mults[*it] != rows_->mults[r]) return false;
  }
  return true;
}

bool Relation::indexes_consistent() const {
  for (const Index& ix : indexes_) {
    absl::flat_hash_map<Tuple, std::pair<std::size_t, Mult>, TupleHash, TupleEq> fresh;
    for (std::uint32_t r = 0; r < rows_->mults.size(); ++r) {
      auto& e = fresh[key_of(r, ix)];
      ++e.first;
      e.second += rows_->mults[r];
    }
    if (fresh.size() != ix.map.size()) return false;
    for (const auto& [k, b] : ix.map) {
      auto it = fresh.find(k);
      if (it == fresh.end() || it->second.first != b.rows.size() || it->second.second != b.sum)
        return false;
      for (std::size_t s = 0; s < b.rows.size(); ++s) {
        std::uint32_t r = b.rows[s];
        if (r >= rows_->mults.size() || ix.slot[r] != s || !TupleEq::eq(key_of(r, ix), k))
          return false;
      }
    }
  }
  return true;
}

Relation strict_partition(const Relation& r, const std::vector<int>& key_pos, double theta,
                          const Relation* like) {
  Relation out(r.schema(), false, r.counters());
  if (like)
    for (std::size_t i = 0; i < like->num_indexes(); ++i)
      out.register_index(like->index_positions(static_cast<int>(i)));
  const std::int64_t bound = ceil_tol(theta);
  absl::flat_hash_map<Tuple, std::int64_t, TupleHash, TupleEq> degree;
  r.for_each([&](TupleView t, Mult) {
    Tuple k;
    for (int p : key_pos) k.push_back(t[p]);
    ++degree[k];
  });
  r.for_each([&](TupleView t, Mult m) {
    Tuple k;
    for (int p : key_pos) k.push_back(t[p]);
    if (degree[k] < bound) out.add(t, m);
  });
  return out;
}

std::int64_t ceil_tol(double x) {
  return static_cast<std::int64_t>(std::ceil(x - 1e-9 * std::max(1.0, std::abs(x))));
}

std::vector<int> positions_of(const std::vector<VarId>& schema, VarSet sub) {
  std::vector<int> pos;
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (has(sub, schema[i])) pos.push_back(static_cast<int>(i));
  return pos;
}

}  // namespace hqivm
