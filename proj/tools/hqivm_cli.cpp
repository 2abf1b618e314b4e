// hqivm: analyze hierarchical queries, maintain them under updates, and
// benchmark the update/delay trade-off.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hqivm/engine.hpp"
#include "hqivm/enumerate.hpp"
#include "hqivm/io.hpp"
#include "hqivm/oracle.hpp"
#include "hqivm/query.hpp"
#include "hqivm/variable_order.hpp"
#include "hqivm/viewtree.hpp"
#include "hqivm/workload.hpp"

using json = nlohmann::ordered_json;
using namespace hqivm;

namespace {

enum Exit { kOk = 0, kInputError = 1, kNotHierarchical = 2, kVerifyFailed = 3, kRejected = 4 };

struct Config {
  std::string query;
  std::string data;
  std::string epsilon = "0.5";
  std::string updates;
  bool verify = false;
  std::size_t checkpoint_every = 0;
  bool enumerate = false;
  bool sorted = false;
  bool json = false;
  bool static_mode = false;
  std::string dot;
  std::string bench_sizes = "1024,4096,16384";
  std::uint64_t seed = 1;
};

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& f : split_fields(s)) out.push_back(std::stod(f));
  return out;
}

double parse_epsilon(const std::string& s) {
  double e = std::stod(s);
  if (!(e >= 0.0 && e <= 1.0)) throw CLI::ValidationError("--epsilon", "must lie in [0,1]");
  return e;
}

json classify(const ConjunctiveQuery& q) {
  json j;
  j["query"] = q.to_string();
  j["hierarchical"] = true;
  j["free_connex"] = is_free_connex(q);
  j["q_hierarchical"] = is_q_hierarchical(q);
  j["delta_index"] = delta_index(q);
  if (q.num_vars() <= 7) {
    Widths w = brute_force_widths(q);
    j["w"] = w.w;
    j["delta"] = w.delta;
  } else {
    j["w"] = static_width(q);
    j["delta"] = dynamic_width(q);
  }
  const VariableOrder vo = canonical_vo(q);
  j["static_width"] = static_width(q);
  j["dynamic_width"] = dynamic_width(q);
  j["xi_root"] = xi_root(vo, q.free_vars());
  j["kappa"] = kappa_measure(vo, q.free_vars());
  j["components"] = component_atoms(q).size();
  j["canonical_order"] = vo.to_string();
  j["free_top_order"] = free_top(vo, q.free_vars()).to_string();
  return j;
}

json plan_json(const ConjunctiveQuery& q, Mode mode) {
  Planner p(q, mode);
  json trees = json::array();
  for (int r : p.vo().roots())
    for (const auto& t : p.tau(r, q.free_vars())) trees.push_back(render(t, q));
  json ind = json::array();
  for (const auto& t : p.triples())
    ind.push_back({{"all", render(t.all, q)}, {"light", render(t.light, q)}});
  return {{"result_trees", trees}, {"indicator_trees", ind}};
}

void write_dot(const std::string& path, const ConjunctiveQuery& q, Mode mode) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const VariableOrder vo = canonical_vo(q);
  out << vo.to_dot("canonical_order");
  out << free_top(vo, q.free_vars()).to_dot("free_top_order");
  Forest f = plan_forest(q, mode);
  out << forest_to_dot(f, q);
}

int cmd_analyze(const Config& c) {
  ConjunctiveQuery q = parse_query(read_query_text(c.query));
  if (auto v = hierarchy_violation(q)) {
    json j{{"query", q.to_string()},
           {"hierarchical", false},
           {"violating_pair", {q.var_name(v->first), q.var_name(v->second)}}};
    std::cout << j.dump(2) << "\n";
    std::cerr << "query is not hierarchical: variables " << q.var_name(v->first) << " and "
              << q.var_name(v->second) << "\n";
    return kNotHierarchical;
  }
  json j = classify(q);
  const Mode mode = c.static_mode ? Mode::Static : Mode::Dynamic;
  j["plan"] = plan_json(q, mode);
  j["plan"]["mode"] = c.static_mode ? "static" : "dynamic";
  if (!c.dot.empty()) write_dot(c.dot, q, mode);
  std::cout << j.dump(2) << "\n";
  return kOk;
}

std::vector<std::string> render_tuple(const std::vector<Value>& t, const Interner& names) {
  std::vector<std::string> out;
  for (Value v : t) out.push_back(names.name(v));
  return out;
}

bool verify(const Engine& e, const ConjunctiveQuery& q, std::size_t step) {
  auto got = collect(e);
  auto want = brute_force_eval(q, e.database());
  if (got == want) return true;
  std::cerr << "verification failed after " << step << " updates: " << got.size() << " tuples enumerated, "
            << want.size() << " expected\n";
  return false;
}

int cmd_run(const Config& c) {
  ConjunctiveQuery q = parse_query(read_query_text(c.query));
  require_hierarchical(q);
  Interner names;
  Database db = c.data.empty() ? Database{} : load_database(c.data, q, names);
  std::vector<Update> updates;
  if (!c.updates.empty()) updates = load_updates(c.updates, q, names);

  EngineOptions opt;
  opt.epsilon = parse_epsilon(c.epsilon);
  opt.mode = c.static_mode ? Mode::Static : Mode::Dynamic;
  if (c.static_mode && !updates.empty()) {
    std::cerr << "updates require dynamic mode\n";
    return kInputError;
  }
  Engine e(q, db, opt);

  for (std::size_t i = 0; i < updates.size(); ++i) {
    try {
      e.on_update(updates[i]);
    } catch (const RejectedDelete& ex) {
      std::cerr << "update " << i + 1 << " rejected: " << ex.what() << "\n";
      return kRejected;
    }
    if (c.verify && c.checkpoint_every > 0 && (i + 1) % c.checkpoint_every == 0 && !verify(e, q, i + 1))
      return kVerifyFailed;
  }
  if (c.verify && !verify(e, q, updates.size())) return kVerifyFailed;

  const bool print = c.enumerate || c.sorted;
  std::vector<std::pair<std::vector<std::string>, Mult>> rows;
  std::size_t count = 0;
  if (print || c.json) {
    ResultIterator it(e);
    while (auto r = it.next()) {
      ++count;
      if (print && !c.sorted && !c.json) {
        for (const auto& v : render_tuple(r->first, names)) std::cout << v << ",";
        std::cout << r->second << "\n";
      } else {
        rows.emplace_back(render_tuple(r->first, names), r->second);
      }
    }
  }
  if (c.sorted) std::sort(rows.begin(), rows.end());
  if (c.json) {
    json j;
    j["query"] = q.to_string();
    j["epsilon"] = opt.epsilon;
    j["size"] = e.size();
    j["threshold_base"] = e.threshold_base();
    j["updates"] = updates.size();
    j["counters"] = json::parse(e.counters().to_json());
    j["result_count"] = count;
    if (print) {
      json rs = json::array();
      for (const auto& [t, m] : rows) rs.push_back({{"tuple", t}, {"multiplicity", m}});
      j["results"] = rs;
    }
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& [t, m] : rows) {
      for (const auto& v : t) std::cout << v << ",";
      std::cout << m << "\n";
    }
    std::cerr << e.counters().to_json() << "\n";
  }
  return kOk;
}

int cmd_bench(const Config& c) {
  ConjunctiveQuery q = parse_query(read_query_text(c.query.empty() ? "Q(A,C) = R(A,B), S(B,C)." : c.query));
  require_hierarchical(q);
  std::vector<std::size_t> sizes;
  for (double d : parse_doubles(c.bench_sizes)) sizes.push_back(static_cast<std::size_t>(d));
  std::vector<double> eps = parse_doubles(c.epsilon);
  for (double e : eps) parse_epsilon(std::to_string(e));
  json rows = json::array();
  if (!c.json) std::cout << bench_csv_header() << "\n";
  for (double e : eps)
    for (std::size_t n : sizes) {
      BenchRow r = run_bench_point(q, n, e, c.seed);
      if (c.json) {
        rows.push_back({{"N", r.n},
                        {"epsilon", r.epsilon},
                        {"max_per_update_ops", r.max_update_ops},
                        {"amortized_ops", r.amortized_ops},
                        {"max_delay_ops", r.max_delay_ops},
                        {"majors", r.majors},
                        {"minors", r.minors}});
      } else {
        std::cout << to_csv(r) << std::endl;
      }
    }
  if (c.json) std::cout << rows.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maintenance of hierarchical conjunctive queries with skew-aware view trees"};
  app.require_subcommand(1);
  Config c;

  auto* analyze = app.add_subcommand("analyze", "Classify a query and print its widths and view trees");
  analyze->add_option("--query", c.query, "Query file or query text")->required();
  analyze->add_option("--dot", c.dot, "Write the variable order and view trees as DOT");
  analyze->add_flag("--json", c.json, "JSON output (default for analyze)");
  analyze->add_flag("--static", c.static_mode, "Plan for the static setting");

  auto* run = app.add_subcommand("run", "Preprocess data, replay updates and enumerate the result");
  run->add_option("--query", c.query, "Query file or query text")->required();
  run->add_option("--data", c.data, "Directory with <symbol>.csv files");
  run->add_option("--epsilon", c.epsilon, "Trade-off parameter in [0,1]");
  run->add_option("--updates", c.updates, "Update stream file");
  run->add_flag("--verify", c.verify, "Compare with the brute-force evaluator");
  run->add_option("--checkpoint-every", c.checkpoint_every, "Verify every K updates");
  run->add_flag("--enumerate", c.enumerate, "Print the result as CSV v1,...,vk,multiplicity");
  run->add_flag("--sorted", c.sorted, "Print the result sorted lexicographically");
  run->add_flag("--json", c.json, "JSON output");
  run->add_flag("--static", c.static_mode, "Static setting, no updates");

  auto* bench = app.add_subcommand("bench", "Skewed synthetic traces; prints counter table");
  bench->add_option("--query", c.query, "Query file or query text");
  bench->add_option("--epsilon", c.epsilon, "Comma separated epsilon grid");
  bench->add_option("--bench-sizes", c.bench_sizes, "Comma separated sizes");
  bench->add_option("--seed", c.seed, "Trace seed");
  bench->add_flag("--json", c.json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInputError;
  }

  try {
    if (*analyze) return cmd_analyze(c);
    if (*run) return cmd_run(c);
    if (*bench) return cmd_bench(c);
  } catch (const NotHierarchical& e) {
    std::cerr << e.what() << "\n";
    return kNotHierarchical;
  } catch (const RejectedDelete& e) {
    std::cerr << e.what() << "\n";
    return kRejected;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
