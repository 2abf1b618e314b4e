#pragma once

#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hqivm/engine.hpp"
#include "hqivm/query.hpp"
#include "hqivm/storage.hpp"

namespace hqivm {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads one relation from CSV. Fields are trimmed and interned. Blank lines
/// and lines starting with '#' are skipped. The first row is a header when
/// one of its fields is `__mult` (that column then holds multiplicities) or
/// when it equals `header`. Repeated rows add up.
std::map<std::vector<Value>, Mult> read_relation_csv(std::istream& in, std::size_t arity, Interner& names,
                                                     const std::vector<std::string>& header = {});

/// Loads every symbol of `q` from `dir`: `<symbol>.csv`, or `<symbol>.0.csv`
/// with optional per-occurrence files `<symbol>.<k>.csv` that must agree.
Database load_database(const std::string& dir, const ConjunctiveQuery& q, Interner& names);

/// Parses an update stream: `+|- symbol, v1, ..., vk [, m]` per line.
std::vector<Update> read_updates(std::istream& in, const ConjunctiveQuery& q, Interner& names);
std::vector<Update> load_updates(const std::string& path, const ConjunctiveQuery& q, Interner& names);

// Reads a query from a file path, or treats the argument as query text.
std::string read_query_text(const std::string& path_or_text);

std::vector<std::string> split_fields(const std::string& line);

}  // namespace hqivm
