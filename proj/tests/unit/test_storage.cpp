#include <gtest/gtest.h>

#include <map>
#include <random>

#include "hqivm/metrics.hpp"
#include "hqivm/storage.hpp"
#include "test_support.hpp"

using namespace hqivm;
using hqivm::testing::tup;

namespace {

// R(A,B) = {(a1,b1),(a1,b2),(a2,b1)} with a_i = i, b_i = 10 + i.
Relation small_r(bool base = true, Counters* c = nullptr) {
  Relation r({0, 1}, base, c);
  r.add(tup({1, 11}), 1);
  r.add(tup({1, 12}), 1);
  r.add(tup({2, 11}), 1);
  return r;
}

}  // namespace

TEST(Interner, StableIds) {
  Interner n;
  Value a = n.intern("a");
  Value b = n.intern("b");
  EXPECT_NE(a, b);
  EXPECT_EQ(n.intern("a"), a);
  EXPECT_EQ(n.name(b), "b");
  EXPECT_TRUE(n.contains("a"));
  EXPECT_FALSE(n.contains("z"));
  EXPECT_EQ(n.size(), 2u);
}

TEST(RelDelta, InsertAndCancel) {
  Relation r({0, 1}, true);
  r.add(tup({1, 2}), 1);
  EXPECT_EQ(r.lookup(tup({1, 2})), 1);
  EXPECT_EQ(r.raw_size(), 1u);
  r.add(tup({1, 2}), -1);
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(r.lookup(tup({1, 2})), 0);
}

TEST(RelDelta, RejectedDeleteLeavesRelationUnchanged) {
  Relation r({0, 1}, true);
  int ix = r.register_index({0});
  r.add(tup({1, 2}), 1);
  auto before = r.to_map();
  EXPECT_TRUE(r.would_reject(tup({1, 2}), -2));
  EXPECT_THROW(r.add(tup({1, 2}), -2), RejectedDelete);
  EXPECT_THROW(r.add(tup({7, 7}), -1), RejectedDelete);
  EXPECT_EQ(r.to_map(), before);
  EXPECT_EQ(r.index_count(ix, tup({1})), 1u);
  EXPECT_TRUE(r.indexes_consistent());
}

TEST(RelDelta, ViewsMayHoldNegativeMultiplicities) {
  Relation v({0}, false);
  v.add(tup({3}), -2);
  EXPECT_EQ(v.lookup(tup({3})), -2);
  v.add(tup({3}), 2);
  EXPECT_TRUE(v.empty());
}

TEST(RelDelta, ArityMismatch) {
  Relation r({0, 1}, true);
  EXPECT_THROW(r.add(tup({1}), 1), ArityMismatch);
  EXPECT_THROW(r.lookup(tup({1, 2, 3})), ArityMismatch);
}

TEST(Index, Scans) {
  Relation r = small_r();
  int ia = r.register_index({0});
  EXPECT_EQ(r.register_index({0}), ia);
  EXPECT_EQ(r.index_of({0}), ia);
  EXPECT_EQ(r.index_count(ia, tup({1})), 2u);
  EXPECT_EQ(r.index_sum(ia, tup({1})), 2);
  EXPECT_EQ(r.index_count(ia, tup({9})), 0u);
  std::size_t seen = 0;
  r.scan(ia, tup({9}), [&](TupleView, Mult) { ++seen; });
  EXPECT_EQ(seen, 0u);

  int full = r.register_index({0, 1});
  std::vector<std::vector<Value>> rows;
  r.scan(full, tup({2, 11}), [&](TupleView t, Mult m) {
    rows.emplace_back(t.begin(), t.end());
    EXPECT_EQ(m, 1);
  });
  EXPECT_EQ(rows, (std::vector<std::vector<Value>>{{2, 11}}));

  int all = r.register_index({});
  EXPECT_EQ(r.index_count(all, Tuple{}), 3u);
  EXPECT_EQ(r.index_sum(all, Tuple{}), 3);
}

TEST(Index, Unregistered) {
  Relation r = small_r();
  EXPECT_THROW(r.index_count(3, tup({1})), UnregisteredIndex);
  EXPECT_THROW(r.register_index({5}), UnregisteredIndex);
}

TEST(Index, IndexRegisteredAfterRowsSeesThem) {
  Relation r = small_r();
  int ib = r.register_index({1});
  EXPECT_EQ(r.index_count(ib, tup({11})), 2u);
  EXPECT_TRUE(r.indexes_consistent());
}

TEST(Index, CopyKeepsIndexes) {
  Relation r = small_r();
  int ia = r.register_index({0});
  Relation c = r;
  c.add(tup({1, 13}), 2);
  EXPECT_EQ(c.index_count(ia, tup({1})), 3u);
  EXPECT_EQ(c.index_sum(ia, tup({1})), 4);
  EXPECT_EQ(r.index_count(ia, tup({1})), 2u);
  EXPECT_TRUE(c.indexes_consistent());
  EXPECT_FALSE(c.same_content(r));
}

TEST(Partition, ThresholdForced) {
  Relation r({0, 1}, true);
  for (Value b = 0; b < 4; ++b) r.add(tup({1, b}), 1);
  r.add(tup({2, 0}), 1);
  Relation light = strict_partition(r, {0}, 2.0);
  EXPECT_EQ(light.to_map(), (std::map<std::vector<Value>, Mult>{{{2, 0}, 1}}));
  Relation all = strict_partition(r, {0}, 100.0);
  EXPECT_TRUE(all.same_content(r));
}

TEST(Partition, IntroAllLightAtEpsilonOne) {
  Relation r = small_r();
  const double theta = static_cast<double>(r.raw_size());
  EXPECT_TRUE(strict_partition(r, {1}, theta).same_content(r));
  EXPECT_TRUE(strict_partition(r, {0}, theta).same_content(r));
}

TEST(Partition, DegreeCountsDistinctTuples) {
  Relation r({0, 1}, true);
  r.add(tup({1, 1}), 5);
  Relation light = strict_partition(r, {0}, 2.0);
  EXPECT_EQ(light.lookup(tup({1, 1})), 5);
}

TEST(Partition, RegistersIndexesOfTemplate) {
  Relation like({0, 1});
  like.register_index({0});
  Relation r = small_r();
  Relation light = strict_partition(r, {0}, 10.0, &like);
  EXPECT_GE(light.index_of({0}), 0);
  EXPECT_TRUE(light.indexes_consistent());
}

TEST(CeilTol, ToleratesRounding) {
  EXPECT_EQ(ceil_tol(2.0), 2);
  EXPECT_EQ(ceil_tol(2.0000000000001), 2);
  EXPECT_EQ(ceil_tol(2.1), 3);
  EXPECT_EQ(ceil_tol(0.5), 1);
  EXPECT_EQ(ceil_tol(0.0), 0);
}

TEST(Instrumentation, EachPrimitiveCountsOnce) {
  Counters c;
  Relation r({0, 1}, true, &c);
  int ia = r.register_index({0});
  auto delta = [&](auto&& f) {
    const auto before = c.storage_ops;
    f();
    return c.storage_ops - before;
  };
  EXPECT_EQ(delta([&] { r.add(tup({1, 2}), 1); }), 1u);
  EXPECT_EQ(delta([&] { r.add(tup({1, 3}), 1); }), 1u);
  EXPECT_EQ(delta([&] { (void)r.lookup(tup({1, 2})); }), 1u);
  EXPECT_EQ(delta([&] { (void)r.find_row(tup({1, 2})); }), 1u);
  EXPECT_EQ(delta([&] { (void)r.index_count(ia, tup({1})); }), 1u);
  EXPECT_EQ(delta([&] { (void)r.index_sum(ia, tup({1})); }), 1u);
  EXPECT_EQ(delta([&] { (void)r.size(); }), 1u);
  // One for the bucket lookup, one per scanned row.
  EXPECT_EQ(delta([&] { r.scan(ia, tup({1}), [](TupleView, Mult) {}); }), 3u);
  EXPECT_EQ(delta([&] { r.for_each([](TupleView, Mult) {}); }), 2u);
  EXPECT_EQ(delta([&] { (void)r.raw_size(); }), 0u);
}

// Random add sequences keep every index in sync with the rows.
TEST(Index, ConsistencyFuzz) {
  std::mt19937_64 rng(3);
  Relation r({0, 1, 2}, false);
  r.register_index({0});
  r.register_index({1, 2});
  r.register_index({});
  std::map<std::vector<Value>, Mult> model;
  for (int i = 0; i < 5000; ++i) {
    std::vector<Value> t = {static_cast<Value>(rng() % 5), static_cast<Value>(rng() % 5),
                            static_cast<Value>(rng() % 3)};
    Mult m = static_cast<Mult>(rng() % 5) - 2;
    if (m == 0) continue;
    r.add(Tuple(t.begin(), t.end()), m);
    if ((model[t] += m) == 0) model.erase(t);
    if (i % 250 == 0) ASSERT_TRUE(r.indexes_consistent());
  }
  EXPECT_TRUE(r.indexes_consistent());
  EXPECT_EQ(r.to_map(), model);
}
