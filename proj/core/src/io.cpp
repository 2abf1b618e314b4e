#include "hqivm/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace hqivm {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool skip_line(const std::string& t) { return t.empty() || t[0] == '#'; }

Mult parse_mult(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    long long m = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return m;
  } catch (const std::exception&) {
    throw IoError("line " + std::to_string(line) + ": invalid multiplicity '" + s + "'");
  }
}

}  // namespace

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::map<std::vector<Value>, Mult> read_relation_csv(std::istream& in, std::size_t arity, Interner& names,
                                                     const std::vector<std::string>& header) {
  std::map<std::vector<Value>, Mult> out;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  int mult_col = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (skip_line(t)) continue;
    auto fields = split_fields(t);
    if (first) {
      first = false;
      bool is_header = !header.empty() && fields == header;
      for (std::size_t i = 0; i < fields.size(); ++i)
        if (fields[i] == "__mult") {
          mult_col = static_cast<int>(i);
          is_header = true;
        }
      if (is_header) {
        if (fields.size() != arity + (mult_col >= 0 ? 1 : 0))
          throw IoError("line " + std::to_string(lineno) + ": header has wrong number of columns");
        continue;
      }
    }
    if (fields.size() != arity + (mult_col >= 0 ? 1 : 0))
      throw IoError("line " + std::to_string(lineno) + ": expected " + std::to_string(arity) + " fields");
    std::vector<Value> tuple;
    Mult m = 1;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (static_cast<int>(i) == mult_col) m = parse_mult(fields[i], lineno);
      else tuple.push_back(names.intern(fields[i]));
    }
    if (m < 0) throw IoError("line " + std::to_string(lineno) + ": negative multiplicity");
    if (m == 0) continue;
    out[tuple] += m;
  }
  return out;
}

Database load_database(const std::string& dir, const ConjunctiveQuery& q, Interner& names) {
  Database db;
  for (const Atom& a : q.atoms()) {
    if (db.contains(a.symbol)) continue;
    const std::vector<int> occ = q.occurrences(a.symbol);
    fs::path plain = fs::path(dir) / (a.symbol + ".csv");
    fs::path zero = fs::path(dir) / (a.symbol + ".0.csv");
    fs::path src = fs::exists(plain) ? plain : zero;
    if (!fs::exists(src)) throw IoError("missing data file for relation " + a.symbol + " in " + dir);
    std::ifstream in(src);
    if (!in) throw IoError("cannot read " + src.string());
    try {
      db[a.symbol] = read_relation_csv(in, a.schema.size(), names, a.schema);
    } catch (const IoError& e) {
      throw IoError(src.string() + ": " + e.what());
    }
    for (std::size_t k = 1; k < occ.size(); ++k) {
      fs::path extra = fs::path(dir) / (a.symbol + "." + std::to_string(k) + ".csv");
      if (!fs::exists(extra)) continue;
      std::ifstream ein(extra);
      const Atom& ak = q.atoms()[occ[k]];
      if (read_relation_csv(ein, ak.schema.size(), names, ak.schema) != db[a.symbol])
        throw IoError(extra.string() + ": occurrences of " + a.symbol + " must hold the same relation");
    }
  }
  return db;
}

std::vector<Update> read_updates(std::istream& in, const ConjunctiveQuery& q, Interner& names) {
  std::map<std::string, std::size_t> arity;
  for (const Atom& a : q.atoms()) arity[a.symbol] = a.schema.size();
  std::vector<Update> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (skip_line(t)) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (t[0] != '+' && t[0] != '-') throw IoError(where + "update must start with '+' or '-'");
    const Mult sign = t[0] == '+' ? 1 : -1;
    auto fields = split_fields(t.substr(1));
    if (fields.empty() || fields[0].empty()) throw IoError(where + "missing relation symbol");
    auto it = arity.find(fields[0]);
    if (it == arity.end()) throw IoError(where + "unknown relation " + fields[0]);
    const std::size_t k = it->second;
    if (fields.size() != k + 1 && fields.size() != k + 2)
      throw IoError(where + "expected " + std::to_string(k) + " values for " + fields[0]);
    Update u;
    u.symbol = fields[0];
    for (std::size_t i = 1; i <= k; ++i) u.tuple.push_back(names.intern(fields[i]));
    Mult m = fields.size() == k + 2 ? parse_mult(fields[k + 1], lineno) : 1;
    if (m <= 0) throw IoError(where + "multiplicity must be positive");
    u.mult = sign * m;
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Update> load_updates(const std::string& path, const ConjunctiveQuery& q, Interner& names) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return read_updates(in, q, names);
}

std::string read_query_text(const std::string& path_or_text) {
  std::error_code ec;
  if (fs::is_regular_file(path_or_text, ec)) {
    std::ifstream in(path_or_text);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return path_or_text;
}

}  // namespace hqivm
