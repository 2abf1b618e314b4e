#include <gtest/gtest.h>

#include "hqivm/engine.hpp"
#include "hqivm/oracle.hpp"
#include "hqivm/viewtree.hpp"
#include "hqivm/workload.hpp"
#include "test_support.hpp"

using namespace hqivm;
using hqivm::testing::kFourAtom;
using hqivm::testing::kIntro;

namespace {

std::vector<std::string> result_renders(const std::string& text, Mode mode) {
  auto q = parse_query(text);
  Planner p(q, mode);
  std::vector<std::string> out;
  for (int r : p.vo().roots())
    for (const auto& t : p.tau(r, q.free_vars())) out.push_back(render(t, q));
  return out;
}

int find_node(const Forest& f, const std::string& name, int tree) {
  for (std::size_t i = 0; i < f.nodes.size(); ++i)
    if (f.nodes[i].name == name && f.nodes[i].tree == tree) return static_cast<int>(i);
  return -1;
}

}  // namespace

TEST(BuildVt, FreeConnexStaticHasNoAuxViews) {
  auto q = parse_query("Q(A,D,E) = R(A,B,C), S(A,B,D), T(A,E).");
  Planner p(q, Mode::Static);
  ASSERT_EQ(p.vo().roots().size(), 1u);
  auto t = p.build_vt("V", p.vo().roots()[0], q.free_vars());
  EXPECT_EQ(render(t, q), "V@A(A)[V@A/B(A,D)[V@A/B/C(A,B)[R(A,B,C)],S(A,B,D)],T(A,E)]");
}

TEST(BuildVt, FreeConnexDynamicAddsAuxViews) {
  auto q = parse_query("Q(A,D,E) = R(A,B,C), S(A,B,D), T(A,E).");
  Planner p(q, Mode::Dynamic);
  auto t = p.build_vt("V", p.vo().roots()[0], q.free_vars());
  EXPECT_EQ(render(t, q), "V@A(A)[V'@A/B(A)[V@A/B(A,D)[V@A/B/C(A,B)[R(A,B,C)],S(A,B,D)]],T'(A)[T(A,E)]]");
}

TEST(BuildVt, SingleAtomIsLeaf) {
  EXPECT_EQ(result_renders("Q(A) = R(A).", Mode::Dynamic), (std::vector<std::string>{"R(A)"}));
  // The root projects the atom onto the first variable of the order.
  EXPECT_EQ(result_renders("Q(A,B) = R(A,B).", Mode::Static), (std::vector<std::string>{"V@A(A)[R(A,B)]"}));
}

TEST(NewVt, ChildReuseAndProjection) {
  auto q = parse_query("Q(A) = R(A,B).");
  Planner p(q, Mode::Static);
  auto leaf = p.leaf(0, 0);
  VarSet ab = q.atom_vars(0);
  EXPECT_EQ(p.new_vt("V", q.var_id("B"), ab, {leaf}), leaf);
  auto proj = p.new_vt("V", q.var_id("B"), bit(q.var_id("A")), {leaf});
  EXPECT_NE(proj, leaf);
  ASSERT_EQ(proj->children.size(), 1u);
  EXPECT_EQ(proj->schema, bit(q.var_id("A")));
}

TEST(Tau, IntroLightAndHeavyTrees) {
  EXPECT_EQ(result_renders(kIntro, Mode::Dynamic),
            (std::vector<std::string>{"V@B(A,C)[R^B(A,B),S^B(B,C)]",
                                      "V@B(B)[∃H@B(B),R'(B)[R(A,B)],S'(B)[S(B,C)]]"}));
}

TEST(Tau, IntroIndicatorTriple) {
  auto q = parse_query(kIntro);
  Planner p(q, Mode::Dynamic);
  (void)p.tau(p.vo().roots()[0], q.free_vars());
  ASSERT_EQ(p.triples().size(), 1u);
  EXPECT_EQ(render(p.triples()[0].all, q), "All@B(B)[All@B/A(B)[R(A,B)],All@B/C(B)[S(B,C)]]");
  EXPECT_EQ(render(p.triples()[0].light, q), "L@B(B)[L@B/A(B)[R^B(A,B)],L@B/C(B)[S^B(B,C)]]");
}

TEST(Tau, FreeConnexQueryWithBoundRoot) {
  EXPECT_EQ(result_renders("Q(A) = R(A,B), S(B).", Mode::Dynamic),
            (std::vector<std::string>{"V@B(A)[R^B(A,B),S^B(B)]", "V@B(B)[∃H@B(B),R'(B)[R(A,B)],S(B)]"}));
}

TEST(Tau, StaticFreeConnexIsSingleton) {
  auto r = result_renders("Q(A,D,E) = R(A,B,C), S(A,B,D), T(A,E).", Mode::Static);
  EXPECT_EQ(r.size(), 1u);
  auto q = parse_query("Q(A,D,E) = R(A,B,C), S(A,B,D), T(A,E).");
  Forest f = plan_forest(q, Mode::Static);
  EXPECT_TRUE(f.triples.empty());
  EXPECT_TRUE(f.light_parts.empty());
}

TEST(Tau, FourAtomQueryThreeTreesTwoTriples) {
  auto q = parse_query(kFourAtom);
  Forest f = plan_forest(q, Mode::Dynamic);
  EXPECT_EQ(f.num_result_trees(), 3u);
  ASSERT_EQ(f.triples.size(), 2u);
  std::vector<VarSet> keys;
  for (const auto& t : f.triples) keys.push_back(t.keys);
  const VarSet a = bit(q.var_id("A")), b = bit(q.var_id("B"));
  EXPECT_NE(std::find(keys.begin(), keys.end(), a), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), a | b), keys.end());
  auto r = result_renders(kFourAtom, Mode::Dynamic);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0],
            "V@A(C,D,E,F)[V@A/B(A,D,E)[R^A(A,B,D),S^A(A,B,E)],V@A/C(A,C,F)[T^A(A,C,F),V@A/C/G(A,C)[U^A(A,C,G)]]]");
}

TEST(Forest, RoutingCoversEveryAtom) {
  for (const auto& text : hqivm::testing::suite_queries()) {
    auto q = parse_query(text);
    for (Mode m : {Mode::Static, Mode::Dynamic}) {
      Forest f = plan_forest(q, m);
      ASSERT_EQ(f.atom_leaves.size(), static_cast<std::size_t>(q.num_atoms()));
      for (int a = 0; a < q.num_atoms(); ++a)
        EXPECT_FALSE(f.atom_leaves[a].empty() && f.atom_light_parts[a].empty()) << text;
      EXPECT_EQ(f.component_trees.size(), component_atoms(q).size());
      EXPECT_FALSE(forest_to_dot(f, q).empty());
      EXPECT_FALSE(forest_to_json(f, q).empty());
    }
  }
}

TEST(Materialize, EmptyDatabaseGivesEmptyViews) {
  auto q = parse_query(kFourAtom);
  Engine e(q, {}, {});
  for (const auto& v : e.forest().nodes) EXPECT_TRUE(v.content.empty()) << v.name;
}

// Each view holds the join of the leaves below it, projected to its schema.
TEST(Materialize, ViewsEqualLeafJoins) {
  Rng rng(21);
  for (const auto& text : hqivm::testing::suite_queries()) {
    auto q = parse_query(text);
    for (Mode m : {Mode::Static, Mode::Dynamic}) {
      for (int rep = 0; rep < 3; ++rep) {
        Database db = random_database(q, rng);
        Engine e(q, db, {.epsilon = 0.5, .mode = m});
        const Forest& f = e.forest();
        for (std::size_t i = 0; i < f.nodes.size(); ++i) {
          const ViewNode& v = f.nodes[i];
          if (v.children.empty()) continue;
          EXPECT_EQ(v.content.to_map(), hqivm::testing::leaf_join(f, q, static_cast<int>(i), v.mask))
              << text << " " << v.name;
          Relation fresh(v.schema);
          recompute_into(f, static_cast<int>(i), fresh);
          EXPECT_TRUE(fresh.same_content(v.content)) << v.name;
        }
      }
    }
  }
}

TEST(Materialize, FourAtomLightViewJoinsLightParts) {
  auto q = parse_query(kFourAtom);
  Rng rng(4);
  Database db = random_database(q, rng, {.max_tuples = 200, .domain = 6, .max_mult = 2});
  Engine e(q, db, {.epsilon = 0.5});
  const Forest& f = e.forest();
  const int tree0 = f.component_trees[0][0];
  int node = find_node(f, "V@A/B", tree0);
  ASSERT_GE(node, 0);
  const ViewNode& v = f.nodes[node];
  EXPECT_EQ(q.names(v.mask), "A,D,E");
  ASSERT_EQ(v.children.size(), 2u);
  for (int c : v.children) EXPECT_EQ(f.nodes[c].kind, NodeKind::LightAtom);
  EXPECT_EQ(v.content.to_map(), hqivm::testing::leaf_join(f, q, node, v.mask));
}
