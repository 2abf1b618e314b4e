#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hqivm/engine.hpp"
#include "hqivm/query.hpp"

namespace hqivm {

using Rng = std::mt19937_64;

struct RandomDbOptions {
  std::size_t max_tuples = 300;  // total over all symbols
  Value domain = 25;
  Mult max_mult = 3;
};

Database random_database(const ConjunctiveQuery& q, Rng& rng, const RandomDbOptions& opt = {});

struct TraceOptions {
  std::size_t steps = 500;
  double insert_ratio = 0.7;
  Value domain = 25;
  Mult max_mult = 3;
};

// Updates from the empty database: inserts of random tuples and deletes of
// tuples currently present (never rejected).
std::vector<Update> random_trace(const ConjunctiveQuery& q, Rng& rng, const TraceOptions& opt = {});

struct RandomQueryOptions {
  int max_atoms = 5;
  int max_vars = 7;
};

// A random hierarchical query; one symbol may occur twice.
ConjunctiveQuery random_hierarchical_query(Rng& rng, const RandomQueryOptions& opt = {});

// Insert-only trace of about n distinct tuples. One join key of the first
// component ("celebrity") holds ceil(n^0.9) tuples; other keys are uniform.
std::vector<Update> skewed_trace(const ConjunctiveQuery& q, std::size_t n, std::uint64_t seed);

struct BenchRow {
  std::size_t n = 0;
  double epsilon = 0;
  std::uint64_t max_update_ops = 0;
  double amortized_ops = 0;
  std::uint64_t max_delay_ops = 0;
  std::uint64_t majors = 0;
  std::uint64_t minors = 0;
  std::size_t results = 0;
};

// Replays a skewed trace from the empty database, then enumerates up to
// `max_results` tuples.
BenchRow run_bench_point(const ConjunctiveQuery& q, std::size_t n, double epsilon, std::uint64_t seed,
                         std::size_t max_results = std::size_t{1} << 20);

std::string bench_csv_header();
std::string to_csv(const BenchRow& r);

}  // namespace hqivm
