#include "hqivm/workload.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>
#include <sstream>

#include "hqivm/enumerate.hpp"
#include "hqivm/variable_order.hpp"

namespace hqivm {

namespace {

// Distinct symbols with their arity, in first-occurrence order.
std::vector<std::pair<std::string, std::size_t>> symbols_of(const ConjunctiveQuery& q) {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const Atom& a : q.atoms()) {
    bool seen = false;
    for (const auto& s : out) seen = seen || s.first == a.symbol;
    if (!seen) out.emplace_back(a.symbol, a.schema.size());
  }
  return out;
}

template <class T>
T uniform(Rng& rng, T lo, T hi) {
  return std::uniform_int_distribution<T>(lo, hi)(rng);
}

}  // namespace

Database random_database(const ConjunctiveQuery& q, Rng& rng, const RandomDbOptions& opt) {
  Database db;
  const auto syms = symbols_of(q);
  const std::size_t per = opt.max_tuples / syms.size();
  for (const auto& [sym, arity] : syms) {
    auto& rel = db[sym];
    const std::size_t count = uniform<std::size_t>(rng, 0, per);
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<Value> t(arity);
      for (auto& v : t) v = uniform<Value>(rng, 0, opt.domain - 1);
      rel[t] = uniform<Mult>(rng, 1, opt.max_mult);
    }
  }
  return db;
}

std::vector<Update> random_trace(const ConjunctiveQuery& q, Rng& rng, const TraceOptions& opt) {
  const auto syms = symbols_of(q);
  Database db;
  std::size_t present = 0;
  std::vector<Update> out;
  std::bernoulli_distribution ins(opt.insert_ratio);
  for (std::size_t step = 0; step < opt.steps; ++step) {
    if (present == 0 || ins(rng)) {
      const auto& [sym, arity] = syms[uniform<std::size_t>(rng, 0, syms.size() - 1)];
      std::vector<Value> t(arity);
      for (auto& v : t) v = uniform<Value>(rng, 0, opt.domain - 1);
      Mult m = uniform<Mult>(rng, 1, opt.max_mult);
      Mult& cur = db[sym][t];
      if (cur == 0) ++present;
      cur += m;
      out.push_back({sym, t, m});
      continue;
    }
    std::size_t k = uniform<std::size_t>(rng, 0, present - 1);
    for (auto& [sym, rel] : db) {
      if (k >= rel.size()) {
        k -= rel.size();
        continue;
      }
      auto it = std::next(rel.begin(), static_cast<std::ptrdiff_t>(k));
      Mult m = std::bernoulli_distribution(0.5)(rng) ? it->second : uniform<Mult>(rng, 1, it->second);
      out.push_back({sym, it->first, -m});
      it->second -= m;
      if (it->second == 0) {
        rel.erase(it);
        --present;
      }
      break;
    }
  }
  return out;
}

ConjunctiveQuery random_hierarchical_query(Rng& rng, const RandomQueryOptions& opt) {
  while (true) {
    const int nv = uniform<int>(rng, 1, opt.max_vars);
    std::vector<int> parent(nv, -1);
    for (int v = 1; v < nv; ++v) parent[v] = uniform<int>(rng, -1, v - 1);
    std::vector<bool> leaf(nv, true);
    for (int v = 0; v < nv; ++v)
      if (parent[v] >= 0) leaf[parent[v]] = false;
    std::vector<int> nodes;
    for (int v = 0; v < nv; ++v)
      if (leaf[v]) nodes.push_back(v);
    if (static_cast<int>(nodes.size()) > opt.max_atoms) continue;
    const int extra = uniform<int>(rng, 0, opt.max_atoms - static_cast<int>(nodes.size()));
    for (int i = 0; i < extra; ++i) nodes.push_back(uniform<int>(rng, 0, nv - 1));
    std::shuffle(nodes.begin(), nodes.end(), rng);

    auto name = [](int v) { return std::string(1, static_cast<char>('A' + v)); };
    std::vector<Atom> atoms;
    std::map<std::string, int> uses;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::vector<std::string> schema;
      for (int u = nodes[i]; u >= 0; u = parent[u]) schema.push_back(name(u));
      std::shuffle(schema.begin(), schema.end(), rng);
      std::string symbol = "R" + std::to_string(i);
      if (i > 0 && std::bernoulli_distribution(0.2)(rng)) {
        for (std::size_t j = 0; j < atoms.size(); ++j)
          if (atoms[j].schema.size() == schema.size()) {
            symbol = atoms[j].symbol;
            break;
          }
      }
      atoms.push_back({symbol, schema, uses[symbol]++});
    }
    std::vector<std::string> head;
    for (int v = 0; v < nv; ++v)
      if (std::bernoulli_distribution(0.5)(rng)) head.push_back(name(v));
    std::shuffle(head.begin(), head.end(), rng);
    return ConjunctiveQuery("Q", head, atoms);
  }
}

std::vector<Update> skewed_trace(const ConjunctiveQuery& q, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const VariableOrder vo = canonical_vo(q);
  const int first_atom = component_atoms(q)[0][0];
  const VarId key = vo.node(vo.root_of(vo.node_of_atom(first_atom))).var;
  const AtomSet comp = mask_of(component_atoms(q)[0]);

  struct Sym {
    std::string name;
    std::size_t arity;
    int key_pos;  // column of the key variable, or -1
  };
  std::vector<Sym> syms;
  for (const auto& [s, arity] : symbols_of(q)) {
    int pos = -1;
    for (int a : q.occurrences(s)) {
      if (!has(comp, a)) continue;
      const auto& sch = q.atom_schema(a);
      for (std::size_t c = 0; c < sch.size(); ++c)
        if (sch[c] == key) pos = static_cast<int>(c);
      break;
    }
    syms.push_back({s, arity, pos});
  }
  std::vector<std::size_t> keyed;
  for (std::size_t i = 0; i < syms.size(); ++i)
    if (syms[i].key_pos >= 0) keyed.push_back(i);

  const std::size_t celeb = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 0.9))));
  const std::size_t keys = std::max<std::size_t>(1, (n - celeb) / (2 * std::max<std::size_t>(1, keyed.size())));
  const Value range = static_cast<Value>(4 * n);

  std::set<std::pair<std::size_t, std::vector<Value>>> seen;
  std::vector<Update> out;
  auto emit = [&](std::size_t s, std::vector<Value> t) {
    if (seen.insert({s, t}).second) out.push_back({syms[s].name, std::move(t), 1});
  };
  auto fill = [&](std::size_t s, Value keyval) {
    std::vector<Value> t(syms[s].arity);
    for (auto& v : t) v = uniform<Value>(rng, 0, range - 1);
    if (syms[s].key_pos >= 0) t[syms[s].key_pos] = keyval;
    return t;
  };
  std::size_t attempts = 0;
  for (std::size_t i = 0; out.size() < celeb && !keyed.empty() && attempts < 20 * n; ++i, ++attempts)
    emit(keyed[i % keyed.size()], fill(keyed[i % keyed.size()], 0));
  for (std::size_t i = 0; out.size() < n && attempts < 20 * n; ++i, ++attempts) {
    std::size_t s = i % syms.size();
    emit(s, fill(s, uniform<Value>(rng, 1, static_cast<Value>(keys))));
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

BenchRow run_bench_point(const ConjunctiveQuery& q, std::size_t n, double epsilon, std::uint64_t seed,
                         std::size_t max_results) {
  EngineOptions opt;
  opt.epsilon = epsilon;
  opt.mode = Mode::Dynamic;
  Engine e(q, Database{}, opt);
  for (const Update& u : skewed_trace(q, n, seed)) e.on_update(u);
  BenchRow row;
  row.n = n;
  row.epsilon = epsilon;
  const Counters& c = e.counters();
  row.max_update_ops = c.max_update_ops;
  row.amortized_ops = c.amortized_update_ops();
  row.majors = c.majors;
  row.minors = c.minors;
  ResultIterator it(e);
  while (row.results < max_results && it.next()) ++row.results;
  row.max_delay_ops = c.max_next_ops;
  return row;
}

std::string bench_csv_header() {
  return "N,epsilon,max_per_update_ops,amortized_ops,max_delay_ops,majors,minors";
}

std::string to_csv(const BenchRow& r) {
  std::ostringstream os;
  os << r.n << "," << r.epsilon << "," << r.max_update_ops << "," << r.amortized_ops << ","
     << r.max_delay_ops << "," << r.majors << "," << r.minors;
  return os.str();
}

}  // namespace hqivm
