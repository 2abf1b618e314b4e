#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hqivm/metrics.hpp"
#include "hqivm/query.hpp"
#include "hqivm/storage.hpp"
#include "hqivm/viewtree.hpp"

namespace hqivm {

class UnknownRelation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StaticModeUpdate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A single-tuple update {tuple -> mult} to the relation `symbol`.
struct Update {
  std::string symbol;
  std::vector<Value> tuple;
  Mult mult = 1;
};

struct EngineOptions {
  double epsilon = 0.5;
  Mode mode = Mode::Dynamic;
  // Overrides the initial threshold base 2N+1.
  std::optional<std::int64_t> threshold_base;
};

struct InvariantReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
  std::string to_string() const;
};

/// Preprocessing and maintenance of the skew-aware view trees of a
/// hierarchical query.
class Engine {
 public:
  Engine(const ConjunctiveQuery& q, const Database& db, EngineOptions options = {});
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Throws RejectedDelete (state unchanged), UnknownRelation, ArityMismatch
  // or StaticModeUpdate.
  void on_update(const Update& u);
  void insert(const std::string& symbol, const std::vector<Value>& t, Mult m = 1) {
    on_update({symbol, t, m});
  }
  void erase(const std::string& symbol, const std::vector<Value>& t, Mult m = 1) {
    on_update({symbol, t, -m});
  }

  const ConjunctiveQuery& query() const { return q_; }
  const Forest& forest() const { return forest_; }
  Mode mode() const { return forest_.mode; }
  double epsilon() const { return epsilon_; }
  std::int64_t threshold_base() const { return m_; }
  double theta() const;
  std::int64_t size() const { return n_; }
  std::uint64_t generation() const { return generation_; }
  Counters& counters() const { return *counters_; }

  Database database() const;
  const Relation& relation(const std::string& symbol) const;
  const Relation& occurrence_base(int atom) const { return occ_base_[atom]; }

  // Cheap checks: size invariant, light-part conditions, heavy indicators.
  // Deep checks add leaf/source equality, recomputation of every view and
  // index consistency. Storage counters are left unchanged.
  InvariantReport check_invariants(bool deep = false) const;
  // Names of the state components that differ from `other`.
  std::vector<std::string> diff_state(const Engine& other) const;

  // Called right after every major rebalancing.
  void set_major_hook(std::function<void(const Engine&)> hook) { major_hook_ = std::move(hook); }

 private:
  Tuple to_atom_order(int atom, const std::vector<Value>& t) const;
  Tuple project(TupleView x, const std::vector<int>& pos) const;

  void materialize();
  void apply(int leaf, TupleView t, Mult m);
  void update_trees(int atom, TupleView x, Mult m);
  void apply_light(int lp, TupleView x, Mult m);
  void refresh_heavy(int triple, TupleView key);
  void major_rebalancing();
  void minor_rebalancing(int lp, TupleView key, Mult sign);
  void recompute_heavy(int triple);
  void fill_from(int node, const Relation& src);

  ConjunctiveQuery q_;
  double epsilon_;
  Forest forest_;
  std::map<std::string, Relation> relations_;
  std::vector<Relation> occ_base_;
  // Column of the symbol tuple for each position of the sorted atom schema.
  std::vector<std::vector<int>> atom_perm_;
  // triple_key_pos_[atom][triple]: key positions in the sorted atom schema.
  std::vector<std::vector<std::vector<int>>> triple_key_pos_;
  std::int64_t n_ = 0;
  std::int64_t m_ = 1;
  std::uint64_t generation_ = 0;
  std::unique_ptr<Counters> counters_;
  std::function<void(const Engine&)> major_hook_;
};

}  // namespace hqivm
