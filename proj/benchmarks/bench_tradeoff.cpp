#include <benchmark/benchmark.h>

#include "hqivm/engine.hpp"
#include "hqivm/enumerate.hpp"
#include "hqivm/workload.hpp"

using namespace hqivm;

namespace {

const ConjunctiveQuery& intro_query() {
  static const ConjunctiveQuery q = parse_query("Q(A,C) = R(A,B), S(B,C).");
  return q;
}

const ConjunctiveQuery& q_hierarchical_query() {
  static const ConjunctiveQuery q = parse_query("Q(A,E) = R(A,B), S(A,E).");
  return q;
}

double eps_of(const benchmark::State& state) { return static_cast<double>(state.range(1)) / 100.0; }

// Replays a skewed insert trace; reports per-update primitive operations.
void BM_UpdateStream(benchmark::State& state, const ConjunctiveQuery& q) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double eps = eps_of(state);
  const auto trace = skewed_trace(q, n, 1);
  Counters last;
  for (auto _ : state) {
    Engine e(q, {}, {.epsilon = eps});
    for (const auto& u : trace) e.on_update(u);
    last = e.counters();
    benchmark::DoNotOptimize(e.size());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * trace.size()));
  state.counters["amortized_ops"] = last.amortized_update_ops();
  state.counters["max_update_ops"] = static_cast<double>(last.max_update_ops);
  state.counters["majors"] = static_cast<double>(last.majors);
  state.counters["minors"] = static_cast<double>(last.minors);
}

// Full enumeration after the trace; reports the worst per-tuple delay.
void BM_Enumerate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double eps = eps_of(state);
  const auto& q = intro_query();
  Engine e(q, {}, {.epsilon = eps});
  for (const auto& u : skewed_trace(q, n, 1)) e.on_update(u);
  std::size_t tuples = 0;
  for (auto _ : state) {
    e.counters().reset();
    tuples = 0;
    ResultIterator it(e);
    while (auto r = it.next()) {
      benchmark::DoNotOptimize(r);
      if (++tuples == (1u << 16)) break;
    }
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * tuples));
  state.counters["max_delay_ops"] = static_cast<double>(e.counters().max_next_ops);
}

// Preprocessing a database of the same shape as the trace.
void BM_Preprocess(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double eps = eps_of(state);
  const auto& q = intro_query();
  Database db;
  for (const auto& u : skewed_trace(q, n, 1)) db[u.symbol][u.tuple] += u.mult;
  for (auto _ : state) {
    Engine e(q, db, {.epsilon = eps});
    benchmark::DoNotOptimize(e.threshold_base());
  }
}

void ladder(benchmark::internal::Benchmark* b) {
  for (int n : {1 << 10, 1 << 12, 1 << 14})
    for (int eps : {0, 50, 100}) b->Args({n, eps});
  b->ArgNames({"N", "eps_pct"})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK_CAPTURE(BM_UpdateStream, intro, intro_query())->Apply(ladder);
BENCHMARK_CAPTURE(BM_UpdateStream, q_hierarchical, q_hierarchical_query())->Apply(ladder);
BENCHMARK(BM_Enumerate)->Apply(ladder);
BENCHMARK(BM_Preprocess)->Apply(ladder);

BENCHMARK_MAIN();
