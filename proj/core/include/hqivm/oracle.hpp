#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "hqivm/query.hpp"
#include "hqivm/types.hpp"

namespace hqivm {

class MissingRelation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Result tuples in head order with strictly positive multiplicities.
using ResultMultiset = std::map<std::vector<Value>, Mult>;

/// Nested-loop join over all atom combinations. Shares no code with the
/// engine.
ResultMultiset brute_force_eval(const ConjunctiveQuery& q, const Database& db);

struct Widths {
  int w = 0;
  int delta = 0;
};

/// Minimum static and dynamic widths over all free-top variable orders,
/// found by exhaustive search. At most 7 variables.
Widths brute_force_widths(const ConjunctiveQuery& q);

}  // namespace hqivm
