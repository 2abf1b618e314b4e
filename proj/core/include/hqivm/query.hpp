#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hqivm/types.hpp"

namespace hqivm {

class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public QueryError {
 public:
  SyntaxError(std::size_t position, std::string expected);
  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

class DuplicateVariableInAtom : public QueryError {
 public:
  using QueryError::QueryError;
};

class HeadVarNotInBody : public QueryError {
 public:
  using QueryError::QueryError;
};

class EmptyAtomSchema : public QueryError {
 public:
  using QueryError::QueryError;
};

class NotHierarchical : public QueryError {
 public:
  NotHierarchical(std::string x, std::string y);
  const std::pair<std::string, std::string>& pair() const { return pair_; }

 private:
  std::pair<std::string, std::string> pair_;
};

struct Atom {
  std::string symbol;
  std::vector<std::string> schema;
  int occurrence = 0;

  // "R" for occurrence 0, "R#k" otherwise.
  std::string label() const;
  bool operator==(const Atom&) const = default;
};

/// A conjunctive query Head(F) = R1(X1), ..., Rn(Xn).
///
/// Variable ids are assigned in lexicographic order of names, so sorting
/// by id is the same as sorting by name.
class ConjunctiveQuery {
 public:
  ConjunctiveQuery(std::string head_name, std::vector<std::string> head,
                   std::vector<Atom> atoms);

  const std::string& head_name() const { return head_name_; }
  const std::vector<std::string>& head() const { return head_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  int num_atoms() const { return static_cast<int>(atoms_.size()); }
  int num_vars() const { return static_cast<int>(var_names_.size()); }

  const std::string& var_name(VarId v) const { return var_names_[v]; }
  // -1 when the name is not a variable of the query.
  VarId var_id(const std::string& name) const;

  VarSet all_vars() const { return all_vars_; }
  VarSet free_vars() const { return free_; }
  VarSet bound_vars() const { return all_vars_ & ~free_; }
  bool is_free(VarId v) const { return has(free_, v); }

  VarSet atom_vars(int a) const { return atom_vars_[a]; }
  // Schema of atom a as variable ids, in textual order.
  const std::vector<VarId>& atom_schema(int a) const { return atom_schema_[a]; }
  AtomSet atoms_of(VarId v) const { return atoms_of_[v]; }
  // Head variables as ids, in head order.
  const std::vector<VarId>& head_ids() const { return head_ids_; }
  // Atom indexes that share the given symbol, in textual order.
  std::vector<int> occurrences(const std::string& symbol) const;

  std::string names(VarSet s) const;
  std::string to_string() const;

  bool operator==(const ConjunctiveQuery& o) const {
    return head_name_ == o.head_name_ && head_ == o.head_ && atoms_ == o.atoms_;
  }

 private:
  std::string head_name_;
  std::vector<std::string> head_;
  std::vector<Atom> atoms_;
  std::vector<std::string> var_names_;
  std::vector<VarId> head_ids_;
  std::vector<VarSet> atom_vars_;
  std::vector<std::vector<VarId>> atom_schema_;
  std::vector<AtomSet> atoms_of_;
  VarSet all_vars_ = 0;
  VarSet free_ = 0;
};

ConjunctiveQuery parse_query(const std::string& text);

bool is_hierarchical(const ConjunctiveQuery& q);
// A pair of variables whose atom sets overlap without nesting, if any.
std::optional<std::pair<VarId, VarId>> hierarchy_violation(const ConjunctiveQuery& q);
// Throws NotHierarchical naming the violating pair.
void require_hierarchical(const ConjunctiveQuery& q);

bool is_q_hierarchical(const ConjunctiveQuery& q);
bool is_free_connex(const ConjunctiveQuery& q);
int delta_index(const ConjunctiveQuery& q);

// Atom indexes of each connected component, ordered by smallest atom index.
std::vector<std::vector<int>> component_atoms(const ConjunctiveQuery& q);
std::vector<ConjunctiveQuery> connected_components(const ConjunctiveQuery& q);

// The query over the given atoms whose free variables are `free`.
ConjunctiveQuery subquery(const ConjunctiveQuery& q, AtomSet atoms, VarSet free,
                          const std::string& head_name = "Q");

}  // namespace hqivm
