// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hqivm/engine.hpp"
#include "hqivm/enumerate.hpp"
#include "hqivm/oracle.hpp"
#include "hqivm/query.hpp"
#include "hqivm/variable_order.hpp"
#include "hqivm/viewtree.hpp"
#include "hqivm/workload.hpp"

using namespace hqivm;

namespace {

// Pinned tolerances and workload sizes.
constexpr int kStaticDbs = 50;
constexpr std::size_t kTraceSteps = 500;
constexpr std::size_t kCheckpointEvery = 25;
constexpr int kTracesPerCell = 50;
constexpr double kConstantTolerance = 0.10;
constexpr double kMaxGrowthRatio = 3.0;
constexpr double kFlatTolerance = 0.10;
constexpr double kMinLinearRatio = 2.5;
constexpr int kRandomQueries = 200;
constexpr std::size_t kScaleSmall = 1u << 12;
constexpr std::size_t kScaleLarge = 1u << 14;
constexpr std::uint64_t kBenchSeed = 1;

const std::vector<double> kEpsilons = {0.0, 0.25, 0.5, 1.0};

const std::vector<std::string> kSuite = {
    "Q(A,C) = R(A,B), S(B,C).",
    "Q(A) = R(A,B), S(B).",
    "Q(A,D,E) = R(A,B,C), S(A,B,D), T(A,E).",
    "Q(A,C,F) = R(A,B,C), S(A,B,D), T(A,E,F), U(A,E,G).",
    "Q(C,D,E,F) = R(A,B,D), S(A,B,E), T(A,C,F), U(A,C,G).",
    "Q(Y0,Y1,Y2) = R0(X,Y0), R1(X,Y1), R2(X,Y2).",
};

struct Classification {
  int w, delta, delta_index;
  bool free_connex, q_hierarchical;
  bool operator==(const Classification&) const = default;
};

// Frozen from the exhaustive free-top order search.
const std::vector<Classification> kWidthTable = {
    {2, 1, 1, false, false}, {1, 1, 1, true, false}, {1, 1, 1, true, false},
    {1, 1, 1, true, false},  {3, 3, 3, false, false}, {3, 2, 2, false, false},
};

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

std::string to_string(const Classification& c) {
  std::ostringstream os;
  os << "(" << c.w << "," << c.delta << "," << c.delta_index << "," << (c.free_connex ? "yes" : "no") << ","
     << (c.q_hierarchical ? "yes" : "no") << ")";
  return os.str();
}

// Enumerates and compares with the oracle; duplicates or bad multiplicities
// count as a mismatch.
bool matches_oracle(const Engine& e, std::string* why = nullptr) {
  try {
    auto got = collect(e);
    auto want = brute_force_eval(e.query(), e.database());
    if (got == want) return true;
    if (why) *why = std::to_string(got.size()) + " tuples vs " + std::to_string(want.size()) + " expected";
  } catch (const std::exception& ex) {
    if (why) *why = ex.what();
  }
  return false;
}

Outcome static_equivalence() {
  Outcome o;
  Rng rng(1001);
  int runs = 0, bad = 0;
  std::string first;
  for (const auto& text : kSuite) {
    auto q = parse_query(text);
    for (double eps : kEpsilons)
      for (int i = 0; i < kStaticDbs; ++i) {
        Database db = random_database(q, rng);
        for (Mode m : {Mode::Static, Mode::Dynamic}) {
          Engine e(q, db, {.epsilon = eps, .mode = m});
          ++runs;
          std::string why;
          if (!matches_oracle(e, &why)) {
            if (!bad++) first = text + " eps=" + fmt(eps) + ": " + why;
          }
        }
      }
  }
  o.pass = bad == 0;
  o.detail = std::to_string(runs - bad) + "/" + std::to_string(runs) + " preprocessing runs match";
  if (bad) o.detail += "; first mismatch " + first;
  return o;
}

Outcome dynamic_equivalence() {
  Outcome o;
  Rng rng(2002);
  std::size_t checkpoints = 0, steps = 0;
  int bad = 0;
  std::string first;
  auto fail = [&](const std::string& msg) {
    if (!bad++) first = msg;
  };
  for (const auto& text : kSuite) {
    auto q = parse_query(text);
    for (double eps : kEpsilons)
      for (int t = 0; t < kTracesPerCell; ++t) {
        Engine e(q, {}, {.epsilon = eps});
        auto trace = random_trace(q, rng, {.steps = kTraceSteps, .insert_ratio = 0.7});
        for (std::size_t i = 0; i < trace.size(); ++i) {
          e.on_update(trace[i]);
          ++steps;
          auto inv = e.check_invariants(false);
          if (!inv.ok()) {
            fail(text + " step " + std::to_string(i + 1) + ": " + inv.to_string());
            break;
          }
          if ((i + 1) % kCheckpointEvery == 0) {
            ++checkpoints;
            std::string why;
            if (!matches_oracle(e, &why)) {
              fail(text + " eps=" + fmt(eps) + " checkpoint " + std::to_string(i + 1) + ": " + why);
              break;
            }
          }
        }
        auto deep = e.check_invariants(true);
        if (!deep.ok()) fail(text + " final state: " + deep.to_string());
      }
  }
  o.pass = bad == 0;
  o.detail = std::to_string(steps) + " updates, " + std::to_string(checkpoints) + " checkpoints, " +
             std::to_string(bad) + " failures";
  if (bad) o.detail += "; first " + first;
  return o;
}

Outcome width_table() {
  Outcome o;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < kSuite.size(); ++i) {
    auto q = parse_query(kSuite[i]);
    Widths bf = brute_force_widths(q);
    Classification got{bf.w, bf.delta, delta_index(q), is_free_connex(q), is_q_hierarchical(q)};
    if (!(got == kWidthTable[i]))
      problems.push_back("row " + std::to_string(i + 1) + " " + to_string(got) + " != " + to_string(kWidthTable[i]));
    if (static_width(q) != bf.w || dynamic_width(q) != bf.delta)
      problems.push_back("row " + std::to_string(i + 1) + " canonical free-top widths disagree with search");
  }

  // Cells pinned independently of the search.
  std::vector<std::string> checked = kSuite;
  checked.push_back("Q(A,E) = R(A,B), S(A,E).");
  checked.push_back("Q(A,B) = R(A,B).");
  Rng rng(3003);
  for (int i = 0; i < kRandomQueries; ++i) checked.push_back(random_hierarchical_query(rng).to_string());
  for (const auto& text : checked) {
    auto q = parse_query(text);
    Widths bf = brute_force_widths(q);
    if (is_free_connex(q) && bf.w != 1) problems.push_back(text + ": free-connex with w=" + std::to_string(bf.w));
    if (is_q_hierarchical(q) != (delta_index(q) == 0)) problems.push_back(text + ": q-hierarchical vs delta index 0");
    if (bf.delta != bf.w && bf.delta != bf.w - 1) problems.push_back(text + ": delta outside {w-1, w}");
  }
  Widths fa = brute_force_widths(parse_query(kSuite[4]));
  if (fa.w != 3 || fa.delta != 3) problems.push_back("four-atom query widths differ from (3,3)");
  Widths qh = brute_force_widths(parse_query("Q(A,B) = R(A,B)."));
  if (qh.w != 1 || qh.delta != 0) problems.push_back("Q(A,B) = R(A,B). widths differ from (1,0)");

  o.pass = problems.empty();
  std::ostringstream os;
  for (std::size_t i = 0; i < kSuite.size(); ++i) os << (i ? " " : "") << to_string(kWidthTable[i]);
  o.detail = os.str() + "; " + std::to_string(checked.size()) + " queries checked for pinned relations";
  if (!problems.empty()) o.detail += "; " + problems.front();
  return o;
}

double spread(const std::vector<double>& xs) {
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return *lo == 0 ? (*hi == 0 ? 0.0 : 1e9) : (*hi - *lo) / *lo;
}

Outcome constant_updates() {
  Outcome o;
  std::ostringstream os;
  for (const char* text : {"Q(A,E) = R(A,B), S(A,E).", "Q(A,B,E) = R(A,B), S(A,E)."}) {
    auto q = parse_query(text);
    std::vector<double> ops;
    for (std::size_t n : {1000u, 10000u, 100000u}) {
      BenchRow r = run_bench_point(q, n, 0.5, kBenchSeed, 1000);
      ops.push_back(static_cast<double>(r.max_update_ops));
    }
    const double s = spread(ops);
    if (!(s < kConstantTolerance)) o.pass = false;
    os << text << " max ops " << fmt(ops[0]) << "/" << fmt(ops[1]) << "/" << fmt(ops[2]) << " spread " << fmt(s)
       << "; ";
  }
  o.detail = os.str() + "tolerance " + fmt(kConstantTolerance);
  return o;
}

Outcome tradeoff_scaling() {
  Outcome o;
  auto q = parse_query(kSuite[0]);
  BenchRow h_s = run_bench_point(q, kScaleSmall, 0.5, kBenchSeed);
  BenchRow h_l = run_bench_point(q, kScaleLarge, 0.5, kBenchSeed);
  BenchRow o_s = run_bench_point(q, kScaleSmall, 1.0, kBenchSeed);
  BenchRow o_l = run_bench_point(q, kScaleLarge, 1.0, kBenchSeed);
  const double amort = h_l.amortized_ops / h_s.amortized_ops;
  const double delay = static_cast<double>(h_l.max_delay_ops) / static_cast<double>(h_s.max_delay_ops);
  const double flat = spread({static_cast<double>(o_s.max_delay_ops), static_cast<double>(o_l.max_delay_ops)});
  const double linear = o_l.amortized_ops / o_s.amortized_ops;
  o.pass = amort <= kMaxGrowthRatio && delay <= kMaxGrowthRatio && flat <= kFlatTolerance && linear >= kMinLinearRatio;
  o.detail = "eps=0.5 amortized x" + fmt(amort) + " delay x" + fmt(delay) + " (<= " + fmt(kMaxGrowthRatio) +
             "); eps=1 delay " + std::to_string(o_s.max_delay_ops) + "->" + std::to_string(o_l.max_delay_ops) +
             " spread " + fmt(flat) + " (<= " + fmt(kFlatTolerance) + "), amortized x" + fmt(linear) +
             " (>= " + fmt(kMinLinearRatio) + ")";
  return o;
}

void collect_leaves(const Forest& f, int node, std::vector<int>& out) {
  if (f.nodes[node].children.empty()) out.push_back(node);
  for (int c : f.nodes[node].children) collect_leaves(f, c, out);
}

// Support of the join of the tree's leaves, projected onto `head` (ascending
// variable ids), by the oracle.
std::set<std::vector<Value>> leaf_join_support(const Forest& f, const ConjunctiveQuery& q, int root, VarSet head) {
  std::vector<int> leaves;
  collect_leaves(f, root, leaves);
  std::string text = "V(" + q.names(head) + ") = ";
  Database db;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const ViewNode& l = f.nodes[leaves[i]];
    const std::string sym = "L" + std::to_string(i);
    VarSet mask = 0;
    for (VarId v : l.schema) mask |= bit(v);
    text += (i ? ", " : "") + sym + "(" + q.names(mask) + ")";
    db[sym] = l.content.to_map();
  }
  std::set<std::vector<Value>> out;
  for (const auto& [t, m] : brute_force_eval(parse_query(text + "."), db))
    if (m > 0) out.insert(t);
  return out;
}

// Result support of component `c`, with values in ascending variable order.
std::set<std::vector<Value>> component_support(const ConjunctiveQuery& q, const ConjunctiveQuery& sub,
                                               const Database& db) {
  std::vector<std::pair<VarId, std::size_t>> order;
  for (std::size_t i = 0; i < sub.head().size(); ++i) order.emplace_back(q.var_id(sub.head()[i]), i);
  std::sort(order.begin(), order.end());
  Database part;
  for (const Atom& a : sub.atoms()) part[a.symbol] = db.at(a.symbol);
  std::set<std::vector<Value>> out;
  for (const auto& [t, m] : brute_force_eval(sub, part)) {
    std::vector<Value> r;
    for (const auto& [id, pos] : order) r.push_back(t[pos]);
    out.insert(r);
  }
  return out;
}

std::string check_forest(const Engine& e) {
  const ConjunctiveQuery& q = e.query();
  const Forest& f = e.forest();
  const Database db = e.database();
  const auto subs = connected_components(q);
  if (subs.size() != f.component_trees.size()) return "component count mismatch";
  for (std::size_t c = 0; c < f.component_trees.size(); ++c) {
    // Components are matched by their variable sets.
    std::vector<int> leaves;
    collect_leaves(f, f.trees[f.component_trees[c].front()].root, leaves);
    VarSet vars = 0;
    for (int l : leaves) vars |= f.nodes[l].mask;
    const ConjunctiveQuery* sub = nullptr;
    for (const auto& s : subs) {
      VarSet sv = 0;
      for (const Atom& a : s.atoms())
        for (const auto& name : a.schema) sv |= bit(q.var_id(name));
      if (sv == vars) sub = &s;
    }
    if (!sub) return "no component over " + q.names(vars);
    const VarSet head = vars & q.free_vars();
    std::set<std::vector<Value>> uni;
    for (int t : f.component_trees[c]) {
      auto s = leaf_join_support(f, q, f.trees[t].root, head);
      uni.insert(s.begin(), s.end());
    }
    if (uni != component_support(q, *sub, db)) return "component over " + q.names(vars) + " differs";
  }
  return "";
}

Outcome forest_equivalence() {
  Outcome o;
  Rng rng(6006);
  int checks = 0, bad = 0;
  std::string first;
  for (int i = 0; i < kRandomQueries; ++i) {
    auto q = random_hierarchical_query(rng, {.max_atoms = 5, .max_vars = 7});
    const double eps = kEpsilons[i % kEpsilons.size()];
    std::vector<std::string> errs;
    {
      Engine e(q, random_database(q, rng), {.epsilon = eps});
      errs.push_back(check_forest(e));
      ++checks;
    }
    {
      Engine e(q, random_database(q, rng), {.epsilon = eps, .mode = Mode::Static});
      errs.push_back(check_forest(e));
      ++checks;
    }
    {
      Engine e(q, {}, {.epsilon = eps});
      for (const auto& u : random_trace(q, rng, {.steps = 150})) e.on_update(u);
      errs.push_back(check_forest(e));
      ++checks;
    }
    for (const auto& err : errs)
      if (!err.empty() && !bad++) first = q.to_string() + ": " + err;
  }
  o.pass = bad == 0;
  o.detail = std::to_string(checks - bad) + "/" + std::to_string(checks) + " forests over " +
             std::to_string(kRandomQueries) + " random queries";
  if (bad) o.detail += "; first " + first;
  return o;
}

Outcome major_equivalence() {
  Outcome o;
  Rng rng(7007);
  std::uint64_t majors = 0;
  int bad = 0;
  std::string first;
  auto run = [&](const ConjunctiveQuery& q, double eps, std::size_t steps) {
    Engine e(q, {}, {.epsilon = eps});
    e.set_major_hook([&](const Engine& cur) {
      ++majors;
      Engine fresh(q, cur.database(), {.epsilon = eps, .threshold_base = cur.threshold_base()});
      auto d = cur.diff_state(fresh);
      if (!d.empty() && !bad++) first = q.to_string() + " eps=" + fmt(eps) + ": " + d.front();
    });
    for (const auto& u : random_trace(q, rng, {.steps = steps})) e.on_update(u);
  };
  for (const auto& text : kSuite)
    for (double eps : kEpsilons)
      for (int t = 0; t < 3; ++t) run(parse_query(text), eps, kTraceSteps);
  for (int i = 0; i < kRandomQueries; ++i) run(random_hierarchical_query(rng), kEpsilons[i % kEpsilons.size()], 200);
  o.pass = bad == 0 && majors > 0;
  o.detail = std::to_string(majors) + " major rebalancings compared view by view, " + std::to_string(bad) +
             " differ";
  if (bad) o.detail += "; first " + first;
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"static oracle equivalence", static_equivalence},
      {"dynamic oracle equivalence", dynamic_equivalence},
      {"width and classification table", width_table},
      {"constant-time updates for q-hierarchical queries", constant_updates},
      {"update/delay trade-off scaling", tradeoff_scaling},
      {"forest equivalence", forest_equivalence},
      {"major rebalancing state equivalence", major_equivalence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].name << ": " << o.detail << " ("
              << fmt(sec) << "s)" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
