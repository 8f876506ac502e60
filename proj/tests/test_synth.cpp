#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "xke/error.hpp"
#include "xke/synth.hpp"

namespace xke::synth {
namespace {

SynthConfig small(double noise, double density, Layout layout = Layout::kUniform) {
  SynthConfig c;
  c.n_entities = 100;
  c.density = density;
  c.layout = layout;
  c.rules = {{"r3", {"r1", "r2"}, noise}};
  c.seed = 5;
  return c;
}

// Pairs (x, z), x != z, joined by an r1 then r2 edge, found by a double loop.
std::set<std::pair<EntityId, EntityId>> body_pairs(const Graph& g) {
  const RelationId r1 = *g.relations().find("r1");
  const RelationId r2 = *g.relations().find("r2");
  std::set<std::pair<EntityId, EntityId>> out;
  for (const Triple& a : g.triples_of(r1)) {
    for (const Triple& b : g.triples_of(r2)) {
      if (a.tail == b.head && a.head != b.tail) out.emplace(a.head, b.tail);
    }
  }
  return out;
}

std::set<std::pair<EntityId, EntityId>> head_pairs(const Graph& g) {
  std::set<std::pair<EntityId, EntityId>> out;
  for (const Triple& t : g.triples_of(*g.relations().find("r3"))) out.emplace(t.head, t.tail);
  return out;
}

TEST(Synth, NoiseFreeRuleHoldsExactly) {
  for (Layout layout : {Layout::kUniform, Layout::kLattice}) {
    const auto kb = generate(small(0.0, layout == Layout::kUniform ? 0.02 : 0.7, layout));
    const auto body = body_pairs(kb.full);
    EXPECT_FALSE(body.empty());
    EXPECT_EQ(head_pairs(kb.full), body);
  }
}

TEST(Synth, NoiseKeepsHeadSizeAndFlipsSomePairs) {
  const auto kb = generate(small(0.2, 0.03));
  const auto body = body_pairs(kb.full);
  const auto head = head_pairs(kb.full);
  std::size_t supported = 0;
  for (const auto& p : head) supported += body.contains(p) ? 1 : 0;
  EXPECT_LT(supported, body.size());
  EXPECT_GT(supported, body.size() / 2);
  EXPECT_LE(head.size(), body.size());
}

TEST(Synth, DensityZeroIsEmpty) {
  const auto kb = generate(small(0.0, 0.0));
  EXPECT_TRUE(kb.full.empty());
  EXPECT_TRUE(kb.train.empty());
  EXPECT_TRUE(kb.test.empty());
}

TEST(Synth, DeterministicForSeed) {
  const auto a = generate(small(0.05, 0.02));
  const auto b = generate(small(0.05, 0.02));
  ASSERT_EQ(a.full.triples().size(), b.full.triples().size());
  EXPECT_TRUE(std::equal(a.full.triples().begin(), a.full.triples().end(), b.full.triples().begin()));
  ASSERT_EQ(a.test.size(), b.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_EQ(a.test[i].triple, b.test[i].triple);
  auto other = small(0.05, 0.02);
  other.seed = 6;
  EXPECT_NE(generate(other).full.fingerprint(), a.full.fingerprint());
}

TEST(Synth, SplitsPartitionTheGraph) {
  const auto kb = generate(small(0.05, 0.02));
  std::size_t positives = 0;
  for (const auto* split : {&kb.valid, &kb.test}) {
    for (const auto& row : *split) {
      positives += row.label;
      EXPECT_EQ(kb.full.contains(row.triple), row.label == 1);
      if (row.label == 1) EXPECT_FALSE(kb.train.contains(row.triple));
    }
  }
  EXPECT_EQ(kb.train.triples().size() + positives, kb.full.triples().size());
  EXPECT_EQ(kb.train.num_entities(), 100u);
}

TEST(Synth, LatticeEdgesFollowOneAxisEach) {
  SynthConfig c = small(0.0, 1.0, Layout::kLattice);
  c.n_entities = 81;  // 3^4: a full grid
  const auto kb = generate(c);
  // Every base relation is a partial bijection: at most one tail per head and
  // one head per tail.
  for (const auto& name : c.base_relations) {
    const RelationId r = *kb.full.relations().find(name);
    std::set<EntityId> heads, tails;
    for (const Triple& t : kb.full.triples_of(r)) {
      EXPECT_TRUE(heads.insert(t.head).second);
      EXPECT_TRUE(tails.insert(t.tail).second);
    }
    EXPECT_EQ(kb.full.triples_of(r).size(), 54u);  // 27 lines of 3 points, 2 edges each
  }
}

TEST(Synth, RejectsDegenerateParameters) {
  auto c = small(0.0, 0.1);
  c.n_entities = 2;
  EXPECT_THROW(generate(c), UserError);
  c = small(0.5, 0.1);
  EXPECT_THROW(generate(c), UserError);
  c = small(0.0, 1.5);
  EXPECT_THROW(generate(c), UserError);
  c = small(0.0, 0.1);
  c.rules = {{"r1", {"r2"}, 0.0}};
  EXPECT_THROW(generate(c), UserError);
  c.rules = {{"r3", {"r9"}, 0.0}};
  EXPECT_THROW(generate(c), UserError);
}

TEST(Synth, ParseBodyAcceptsInverseMarks) {
  Vocabulary rel;
  rel.intern("a");
  rel.intern("b");
  const PathType p = parse_body({"a", "b⁻¹", "a^-1"}, rel);
  EXPECT_EQ(p, (PathType{{0, Direction::kForward}, {1, Direction::kInverse}, {0, Direction::kInverse}}));
}

TEST(Synth, OracleOutputReplays) {
  const auto kb = generate(small(0.0, 0.02));
  Graph g = kb.train;
  int checked = 0;
  for (const Triple& t : g.triples()) {
    if (checked++ > 30) break;
    for (const auto& p : path_oracle(g, t.head, t.tail, 3)) {
      EXPECT_TRUE(testing::replay(g, t.head, p).contains(t.tail));
    }
  }
}

TEST(Layout, Parse) {
  EXPECT_EQ(parse_layout("lattice"), Layout::kLattice);
  EXPECT_EQ(to_string(Layout::kUniform), "uniform");
  EXPECT_THROW(parse_layout("hex"), UserError);
}

}  // namespace
}  // namespace xke::synth
