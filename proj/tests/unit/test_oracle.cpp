#include <gtest/gtest.h>

#include "hqivm/oracle.hpp"
#include "test_support.hpp"

using namespace hqivm;
using hqivm::testing::intro_db;
using hqivm::testing::kFourAtom;
using hqivm::testing::kIntro;
using hqivm::testing::vals;

TEST(BruteForceEval, IntroExample) {
  Interner n;
  auto got = brute_force_eval(parse_query(kIntro), intro_db(n));
  ResultMultiset want = {{vals(n, {"a1", "c1"}), 2}, {vals(n, {"a1", "c2"}), 1}, {vals(n, {"a2", "c1"}), 1}};
  EXPECT_EQ(got, want);
}

TEST(BruteForceEval, EmptyRelation) {
  Interner n;
  Database db = intro_db(n);
  db["S"].clear();
  EXPECT_TRUE(brute_force_eval(parse_query(kIntro), db).empty());
}

TEST(BruteForceEval, BooleanCountsCombinations) {
  Interner n;
  auto got = brute_force_eval(parse_query("Q() = R(A,B), S(B,C)."), intro_db(n));
  EXPECT_EQ(got, (ResultMultiset{{{}, 4}}));
}

TEST(BruteForceEval, MultiplicitiesMultiply) {
  Database db;
  db["R"] = {{{1, 2}, 2}};
  db["S"] = {{{2, 3}, 3}, {{2, 4}, 1}};
  auto got = brute_force_eval(parse_query("Q(A) = R(A,B), S(B,C)."), db);
  EXPECT_EQ(got, (ResultMultiset{{{1}, 8}}));
}

TEST(BruteForceEval, RepeatedSymbolAndReorderedHead) {
  Database db;
  db["R"] = {{{1, 2}, 1}, {{1, 3}, 1}};
  auto got = brute_force_eval(parse_query("Q(C,B) = R(A,B), R(A,C)."), db);
  EXPECT_EQ(got.size(), 4u);
  EXPECT_EQ(got.at({3, 2}), 1);
}

TEST(BruteForceEval, MissingRelation) {
  Interner n;
  Database db = intro_db(n);
  db.erase("S");
  EXPECT_THROW(brute_force_eval(parse_query(kIntro), db), MissingRelation);
}

TEST(BruteForceWidths, Examples) {
  auto w = brute_force_widths(parse_query(kIntro));
  EXPECT_EQ(w.w, 2);
  EXPECT_EQ(w.delta, 1);
  auto qh = brute_force_widths(parse_query("Q(A,E) = R(A,B), S(A,E)."));
  EXPECT_EQ(qh.w, 1);
  EXPECT_EQ(qh.delta, 0);
  auto fa = brute_force_widths(parse_query(kFourAtom));
  EXPECT_EQ(fa.w, 3);
  EXPECT_EQ(fa.delta, 3);
}

TEST(BruteForceWidths, TooLarge) {
  EXPECT_THROW(brute_force_widths(parse_query("Q() = R(A,B,C,D,E,F,G,H).")), TooLarge);
}
