#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>
#include <absl/hash/hash.h>

#include "hqivm/metrics.hpp"
#include "hqivm/types.hpp"

namespace hqivm {

class RejectedDelete : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArityMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnregisteredIndex : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TupleHash {
  using is_transparent = void;
  std::size_t operator()(TupleView t) const { return absl::Hash<TupleView>{}(t); }
  std::size_t operator()(const Tuple& t) const { return absl::Hash<Tuple>{}(t); }
};

struct TupleEq {
  using is_transparent = void;
  static bool eq(TupleView a, TupleView b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
  }
  bool operator()(TupleView a, TupleView b) const { return eq(a, b); }
  bool operator()(const Tuple& a, const Tuple& b) const { return eq(a, b); }
  bool operator()(const Tuple& a, TupleView b) const { return eq(a, b); }
  bool operator()(TupleView a, const Tuple& b) const { return eq(a, b); }
};

/// Maps external string values to dense identifiers.
class Interner {
 public:
  Value intern(const std::string& s);
  // Throws std::out_of_range for an unknown identifier.
  const std::string& name(Value v) const { return names_.at(v); }
  bool contains(const std::string& s) const { return ids_.contains(s); }
  std::size_t size() const { return names_.size(); }

 private:
  absl::flat_hash_map<std::string, Value> ids_;
  std::vector<std::string> names_;
};

/// A multiset of tuples with hash indexes on registered sub-schemas.
///
/// Rows are stored densely; deleting a row moves the last row into its slot.
/// Row ids are stable only between mutations.
class Relation {
 public:
  Relation();
  explicit Relation(std::vector<VarId> schema, bool base = false, Counters* counters = nullptr);
  Relation(const Relation& o);
  Relation& operator=(const Relation& o);
  Relation(Relation&&) noexcept = default;
  Relation& operator=(Relation&&) noexcept = default;

  const std::vector<VarId>& schema() const { return schema_; }
  std::size_t arity() const { return schema_.size(); }
  bool is_base() const { return base_; }
  void set_counters(Counters* c) { counters_ = c; }
  Counters* counters() const { return counters_; }

  std::size_t size() const {
    note();
    return rows_->mults.size();
  }
  // Uncounted, for invariants and tests.
  std::size_t raw_size() const { return rows_->mults.size(); }
  bool empty() const { return rows_->mults.empty(); }

  Mult lookup(TupleView t) const;
  // Row id of t, if stored.
  std::optional<std::uint32_t> find_row(TupleView t) const;
  bool contains(TupleView t) const { return lookup(t) != 0; }
  // Adds m to the multiplicity of t. Base relations throw RejectedDelete if
  // the result would be negative and are then left unchanged.
  void add(TupleView t, Mult m);
  bool would_reject(TupleView t, Mult m) const;
  void clear();

  // Positions are indexes into the schema. Registering twice returns the
  // same id. An empty position list indexes the whole relation as one key.
  int register_index(const std::vector<int>& positions);
  int index_of(const std::vector<int>& positions) const;
  const std::vector<int>& index_positions(int idx) const { return indexes_.at(idx).pos; }
  std::size_t num_indexes() const { return indexes_.size(); }

  std::size_t index_count(int idx, TupleView key) const;
  Mult index_sum(int idx, TupleView key) const;
  // Row ids with the key; valid until the next mutation.
  absl::Span<const std::uint32_t> index_rows(int idx, TupleView key) const;

  TupleView row(std::uint32_t r) const { return rows_->view(r); }
  Mult row_mult(std::uint32_t r) const { return rows_->mults[r]; }
  void note(std::uint64_t k = 1) const {
    if (counters_) counters_->storage_ops += k;
  }

  template <class F>
  void for_each(F&& f) const {
    const std::size_t n = rows_->mults.size();
    for (std::uint32_t r = 0; r < n; ++r) {
      note();
      f(row(r), rows_->mults[r]);
    }
  }

  template <class F>
  void scan(int idx, TupleView key, F&& f) const {
    for (std::uint32_t r : index_rows(idx, key)) {
      note();
      f(row(r), rows_->mults[r]);
    }
  }

  std::map<std::vector<Value>, Mult> to_map() const;
  bool same_content(const Relation& o) const;
  // Rebuilds every index from the rows and compares with the live indexes.
  bool indexes_consistent() const;

 private:
  struct Rows {
    std::size_t arity = 0;
    std::vector<Value> vals;
    std::vector<Mult> mults;
    TupleView view(std::uint32_t r) const { return TupleView(vals.data() + r * arity, arity); }
  };
  struct RowHash {
    using is_transparent = void;
    const Rows* rows = nullptr;
    std::size_t operator()(std::uint32_t r) const { return TupleHash{}(rows->view(r)); }
    std::size_t operator()(TupleView t) const { return TupleHash{}(t); }
  };
  struct RowEq {
    using is_transparent = void;
    const Rows* rows = nullptr;
    bool operator()(std::uint32_t a, std::uint32_t b) const {
      return TupleEq::eq(rows->view(a), rows->view(b));
    }
    bool operator()(std::uint32_t a, TupleView b) const { return TupleEq::eq(rows->view(a), b); }
    bool operator()(TupleView a, std::uint32_t b) const { return TupleEq::eq(a, rows->view(b)); }
  };
  using RowSet = absl::flat_hash_set<std::uint32_t, RowHash, RowEq>;

  struct Bucket {
    std::vector<std::uint32_t> rows;
    Mult sum = 0;
  };
  struct Index {
    std::vector<int> pos;
    absl::flat_hash_map<Tuple, Bucket, TupleHash, TupleEq> map;
    std::vector<std::uint32_t> slot;  // row -> position inside its bucket
  };

  Tuple key_of(std::uint32_t r, const Index& ix) const;
  void index_insert(Index& ix, std::uint32_t r);
  void index_erase(Index& ix, std::uint32_t r);
  void rebuild();
  const Index& index(int idx) const;

  std::vector<VarId> schema_;
  bool base_ = false;
  Counters* counters_ = nullptr;
  std::unique_ptr<Rows> rows_;
  std::unique_ptr<RowSet> set_;
  std::vector<Index> indexes_;
};

/// Strict light part of r on the positions `key_pos`: tuples whose key has
/// degree below theta. Returns a relation with the same schema; indexes of
/// `like` are registered on the result.
Relation strict_partition(const Relation& r, const std::vector<int>& key_pos, double theta,
                          const Relation* like = nullptr);

// Smallest integer n with n >= x, tolerant to rounding noise in x.
std::int64_t ceil_tol(double x);

// Positions of the variables in `sub` within `schema`.
std::vector<int> positions_of(const std::vector<VarId>& schema, VarSet sub);

}  // namespace hqivm
