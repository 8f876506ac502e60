#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "xke/error.hpp"
#include "xke/pipeline.hpp"

namespace xke {
namespace {

using testing::TempDir;

TEST(PipelineConfig, ParsesKeysAndResolvesRelativePaths) {
  TempDir dir;
  const auto p = dir.write("run.conf",
                           "# comment\n"
                           "train = data/train.tsv\n"
                           "valid = data/valid.tsv   # trailing comment\n"
                           "out = results\n"
                           "seed = 7\n"
                           "dim = 20, 50\n"
                           "norm = L1,L2\n"
                           "sfe.depth = 2\n"
                           "sfe.exclude_direct_edge = false\n"
                           "variant = pred\n"
                           "k = 2\n"
                           "penalty = L2\n"
                           "lambda = 0.01\n"
                           "synth.rules = r3 <= r1 r2 | 0.1; r5 <= r0 r0^-1\n");
  const auto c = PipelineConfig::load(p);
  EXPECT_EQ(c.train_path, dir / "data/train.tsv");
  EXPECT_EQ(c.out_dir, dir / "results");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.train.seed, Rng::mix(7, "train"));
  EXPECT_EQ(c.dims, (std::vector<int>{20, 50}));
  EXPECT_EQ(c.train_grid().size(), 4u);
  EXPECT_FALSE(c.sfe.exclude_direct_edge);
  EXPECT_EQ(c.variant, Variant::kPred);
  EXPECT_EQ(c.k, 2);
  EXPECT_EQ(c.fit.penalty, logreg::Penalty::kL2);
  EXPECT_DOUBLE_EQ(c.fit.strength, 0.01);
  ASSERT_EQ(c.synth.rules.size(), 2u);
  EXPECT_EQ(c.synth.rules[0].head, "r3");
  EXPECT_EQ(c.synth.rules[0].body, (std::vector<std::string>{"r1", "r2"}));
  EXPECT_DOUBLE_EQ(c.synth.rules[0].noise, 0.1);
  EXPECT_DOUBLE_EQ(c.synth.rules[1].noise, 0.0);
}

TEST(PipelineConfig, ErrorsCarryLineNumbers) {
  TempDir dir;
  try {
    PipelineConfig::load(dir.write("a.conf", "seed = 1\nbogus = 3\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(PipelineConfig::load(dir.write("b.conf", "seed 1\n")), ParseError);
  EXPECT_THROW(PipelineConfig::load(dir.write("c.conf", "k = 0\n")), ParseError);
  EXPECT_THROW(PipelineConfig::load(dir.write("d.conf", "dim = ten\n")), ParseError);
  EXPECT_THROW(PipelineConfig::load(dir / "missing.conf"), IoError);
}

TEST(PipelineConfig, DefaultGridOverridesLists) {
  PipelineConfig c;
  c.set("grid", "default");
  EXPECT_EQ(c.train_grid().size(), 24u);
  PipelineConfig single;
  EXPECT_EQ(single.train_grid().size(), 1u);
}

PipelineConfig tiny_config(const TempDir& dir) {
  PipelineConfig c;
  c.set("seed", "3");
  c.set("synth.entities", "60");
  c.set("synth.layout", "lattice");
  c.set("synth.density", "0.9");
  c.out_dir = dir / "data";
  cmd_synth(c);
  c.train_path = dir / "data/train.tsv";
  c.valid_path = dir / "data/valid.tsv";
  c.test_path = dir / "data/test.tsv";
  c.out_dir = dir / "out";
  c.set("dim", "10");
  c.set("epochs", "30");
  return c;
}

TEST(Pipeline, StagesWriteTheirArtifacts) {
  TempDir dir;
  auto c = tiny_config(dir);
  const auto emb = cmd_train_embedding(c);
  EXPECT_TRUE(std::filesystem::exists(paths::model(c)));
  EXPECT_GT(emb.validation_accuracy, 0.0);
  EXPECT_GT(cmd_extract_features(c), 0u);
  EXPECT_GT(cmd_train_explainer(c), 0u);
  const auto report = cmd_evaluate(c);
  EXPECT_GT(report.n_records, 0u);
  const auto j = nlohmann::json::parse(testing::read_file(paths::metrics(c, "true").string() + ".json"));
  EXPECT_TRUE(j["micro"].contains("fidelity"));
  const auto table = testing::read_file(paths::metrics(c, "true").string() + ".txt");
  for (const auto& name : metrics::table_row_names()) EXPECT_NE(table.find(name), std::string::npos);

  const auto explanations = cmd_explain(c, c.test_path);
  EXPECT_FALSE(explanations.empty());
  for (const auto& e : explanations) {
    double z = e.bias;
    for (const auto& r : e.reasons) z += r.weight;
    // Reasons are all active nonzero-weight features, so they reproduce the score.
    EXPECT_NEAR(1.0 / (1.0 + std::exp(-z)), e.score, 1e-9);
  }
}

TEST(Pipeline, PredVariantWithKOneMatchesPositiveSeeds) {
  TempDir dir;
  auto c = tiny_config(dir);
  c.set("variant", "pred");
  c.set("k", "1");
  cmd_train_embedding(c);
  const auto stats = cmd_build_pred_graph(c);
  EXPECT_EQ(stats.positives, stats.positive_seeds);
  Dataset d = load_dataset(c, false);
  const auto model = TransEModel::load(paths::model(c));
  const Graph pred = load_graph_like(paths::pred_graph(c), d.graph);
  std::size_t expected = 0;
  for (const Triple& t : d.graph.triples()) {
    if (model.classify(t) == 1) {
      ++expected;
      EXPECT_TRUE(pred.contains(t));
    }
  }
  EXPECT_EQ(pred.triples().size(), expected);
}

TEST(Pipeline, MissingValidFileNamesThePath) {
  TempDir dir;
  auto c = tiny_config(dir);
  c.valid_path = dir / "nowhere/valid.tsv";
  try {
    cmd_train_embedding(c);
    FAIL();
  } catch (const UserError& e) {
    EXPECT_NE(std::string(e.what()).find("nowhere/valid.tsv"), std::string::npos);
  }
}

TEST(Pipeline, ExplainUnknownRelationFallsBack) {
  TempDir dir;
  auto c = tiny_config(dir);
  run_pipeline(c);
  const auto triples = dir.write("q.tsv", "e1\tr0\te2\n");
  const auto out = cmd_explain(c, triples);
  ASSERT_EQ(out.size(), 1u);
  const auto unknown = dir.write("u.tsv", "e1\tbrand_new\te2\n");
  EXPECT_THROW(cmd_explain(c, unknown), UserError);
}

}  // namespace
}  // namespace xke
