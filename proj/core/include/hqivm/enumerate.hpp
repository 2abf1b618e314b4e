#pragma once

#include <array>
#include <bit>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hqivm/engine.hpp"

namespace hqivm {

class StaleIterator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CallBeforeOpen : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Variable assignment indexed by variable id.
using Slots = std::array<Value, kMaxVars>;

/// Iterator over distinct tuples with multiplicities. next() writes the
/// output variables into `out` and returns the multiplicity, or 0 at the end.
class Cursor {
 public:
  virtual ~Cursor() = default;
  virtual void open(const Slots& ctx) = 0;
  virtual Mult next(Slots& out) = 0;
  // Multiplicity of the assignment in `t` under the opened context.
  virtual Mult lookup(const Slots& t) const = 0;
  virtual void close() {}
  // Variables written by next().
  virtual VarSet out_vars() const = 0;
};

/// Emits each distinct tuple of the union of its inputs once, with the
/// multiplicities summed.
class UnionCursor : public Cursor {
 public:
  explicit UnionCursor(std::vector<std::unique_ptr<Cursor>> inputs);
  void open(const Slots& ctx) override;
  Mult next(Slots& out) override;
  Mult lookup(const Slots& t) const override;
  void close() override;
  VarSet out_vars() const override;

 private:
  std::vector<std::unique_ptr<Cursor>> in_;
  Slots ctx_{};
  std::size_t first_ = 0;
  bool opened_ = false;
};

/// Cartesian product of independent inputs under a shared context.
class ProductCursor : public Cursor {
 public:
  explicit ProductCursor(std::vector<std::unique_ptr<Cursor>> inputs);
  void open(const Slots& ctx) override;
  Mult next(Slots& out) override;
  Mult lookup(const Slots& t) const override;
  void close() override;
  VarSet out_vars() const override { return out_; }

 private:
  std::vector<std::unique_ptr<Cursor>> in_;
  VarSet out_ = 0;
  std::vector<Mult> cur_;
  std::vector<Slots> vals_;
  Slots ctx_{};
  bool opened_ = false;
  bool started_ = false;
  bool done_ = false;
};

/// Cursor over a view of a result tree. Bucket copies share the view
/// contents and own only their cursor state.
class TreeIterator : public Cursor {
 public:
  // `bucket` makes a grounded copy that ignores the heavy indicator child.
  TreeIterator(const Forest& f, int node, bool bucket = false);
  void open(const Slots& ctx) override;
  Mult next(Slots& out) override;
  Mult lookup(const Slots& t) const override;
  void close() override;
  VarSet out_vars() const override;

  int node() const { return node_; }
  std::size_t num_buckets() const { return heavy_.size(); }

 private:
  Mult next_row(Slots& out);
  Mult next_bucket(Slots& out);
  std::uint32_t row_at(std::size_t i) const;
  void write_row(std::uint32_t r, Slots& s) const;
  TreeIterator& bucket(std::size_t i);
  Mult bucket_lookup(std::size_t i, const Slots& t) const;

  const Forest& f_;
  int node_;
  bool bucket_mode_;
  EnumMode mode_;
  Slots ctx_{};
  bool opened_ = false;

  // Row cursor.
  absl::Span<const std::uint32_t> rows_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  bool all_rows_ = false;
  std::optional<std::uint32_t> point_;
  std::uint32_t row_ = 0;
  std::unique_ptr<ProductCursor> product_;
  bool in_row_ = false;

  // Grounded copies, one per heavy key agreeing with the context.
  std::vector<Tuple> heavy_;
  std::vector<std::unique_ptr<TreeIterator>> buckets_;
  std::size_t first_ = 0;
};

// Stateless multiplicity of the assignment `t` at a result-tree view.
Mult lookup_view(const Forest& f, int node, const Slots& t, bool skip_heavy = false);

/// Distinct result tuples of the query, in head order, with multiplicities.
class ResultIterator {
 public:
  explicit ResultIterator(const Engine& e);
  // Throws StaleIterator if the engine was updated since construction.
  std::optional<std::pair<std::vector<Value>, Mult>> next();

 private:
  const Engine& e_;
  std::uint64_t generation_;
  std::unique_ptr<ProductCursor> root_;
  Slots out_{};
  std::uint64_t opened_ops_ = 0;
};

ResultIterator enumerate_result(const Engine& e);

// Cursor over the union of the result trees of one component.
std::unique_ptr<Cursor> component_cursor(const Forest& f, int component);
// Cursor over a single result tree.
std::unique_ptr<Cursor> tree_cursor(const Forest& f, int tree);

// Drains an iterator. Throws std::logic_error on a repeated or
// non-positive tuple.
std::map<std::vector<Value>, Mult> collect(const Engine& e);

}  // namespace hqivm
