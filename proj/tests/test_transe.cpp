#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "xke/error.hpp"
#include "xke/transe.hpp"

namespace xke {
namespace {

using testing::make_graph;
using testing::TempDir;

TransEModel two_d(Norm norm, std::vector<double> entities, std::vector<double> relations) {
  TransEModel m(entities.size() / 2, relations.size() / 2, 2, norm);
  m.entity_data() = std::move(entities);
  m.relation_data() = std::move(relations);
  return m;
}

TEST(TransEScore, ExactTranslationIsZero) {
  for (Norm norm : {Norm::kL1, Norm::kL2}) {
    const auto m = two_d(norm, {1, 0, 1, 1}, {0, 1});
    EXPECT_DOUBLE_EQ(m.score({0, 0, 1}), 0.0);
  }
}

TEST(TransEScore, KnownNorms) {
  EXPECT_DOUBLE_EQ(two_d(Norm::kL2, {0, 0, 3, 4}, {0, 0}).score({0, 0, 1}), 5.0);
  EXPECT_DOUBLE_EQ(two_d(Norm::kL1, {0, 0, 3, 4}, {0, 0}).score({0, 0, 1}), 7.0);
}

Graph small_kb() {
  std::vector<std::string> lines;
  for (int i = 0; i < 25; ++i) {
    lines.push_back("e" + std::to_string(i) + " r e" + std::to_string((i + 1) % 25));
    lines.push_back("e" + std::to_string(i) + " s e" + std::to_string((i * 7 + 3) % 25));
    if (i % 2 == 0) lines.push_back("e" + std::to_string(i) + " q e" + std::to_string((i + 5) % 25));
  }
  return make_graph(lines);
}

TEST(TransEInit, DeterministicAndNormalized) {
  const Graph g = small_kb();
  TrainConfig c;
  c.dim = 50;
  c.seed = 9;
  const auto a = init_model(g, c);
  const auto b = init_model(g, c);
  EXPECT_EQ(a.entity_data(), b.entity_data());
  EXPECT_EQ(a.relation_data(), b.relation_data());
  for (EntityId e = 0; e < static_cast<EntityId>(g.num_entities()); ++e) {
    double sq = 0;
    for (double v : a.entity(e)) sq += v * v;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
  }
}

TEST(TransEInit, DimOneStaysInBound) {
  const Graph g = small_kb();
  TrainConfig c;
  c.dim = 1;
  const auto m = init_model(g, c);
  for (double v : m.entity_data()) EXPECT_LE(std::abs(v), 6.0);
  for (double v : m.relation_data()) EXPECT_LE(std::abs(v), 6.0);
}

TEST(TransEInit, DimZeroIsAnError) {
  TrainConfig c;
  c.dim = 0;
  EXPECT_THROW(init_model(small_kb(), c), UserError);
}

TEST(TransETrain, LossDecreasesAndEntitiesStayNormalized) {
  const Graph g = small_kb();
  TrainConfig c;
  c.dim = 10;
  c.epochs = 50;
  c.batch_size = 10;
  c.seed = 3;
  const auto result = train(g, c);
  ASSERT_EQ(result.epoch_loss.size(), 50u);
  EXPECT_LT(result.epoch_loss[49], result.epoch_loss[0]);
  for (EntityId e = 0; e < static_cast<EntityId>(g.num_entities()); ++e) {
    double sq = 0;
    for (double v : result.model.entity(e)) sq += v * v;
    EXPECT_LT(std::abs(std::sqrt(sq) - 1.0), 1e-6);
  }
}

TEST(TransETrain, BitIdenticalAcrossRuns) {
  const Graph g = small_kb();
  TrainConfig c;
  c.dim = 8;
  c.epochs = 20;
  c.seed = 42;
  const auto a = train(g, c);
  const auto b = train(g, c);
  EXPECT_EQ(a.model.entity_data(), b.model.entity_data());
  EXPECT_EQ(a.model.relation_data(), b.model.relation_data());
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

TEST(TransETrain, RejectsBadConfig) {
  const Graph g = small_kb();
  TrainConfig c;
  c.margin = 0;
  EXPECT_THROW(train(g, c), UserError);
  c = TrainConfig{};
  c.learning_rate = -1;
  EXPECT_THROW(train(g, c), UserError);
  c = TrainConfig{};
  c.epochs = 1001;
  EXPECT_THROW(train(g, c), UserError);
}

TEST(TransETrain, DivergenceNamesTheEpoch) {
  const Graph g = small_kb();
  TrainConfig c;
  c.dim = 4;
  c.epochs = 5;
  c.learning_rate = 1e308;
  c.norm = Norm::kL2;
  try {
    train(g, c);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(TransEHinge, InactiveWhenNegativeFarEnough) {
  // f(pos) = 0, f(neg) = 2, margin 1.
  const auto m = two_d(Norm::kL2, {0, 0, 0, 0, 2, 0}, {0, 0});
  EXPECT_DOUBLE_EQ(hinge_loss(m, {0, 0, 1}, {0, 0, 2}, 1.0), 0.0);
  EXPECT_TRUE(hinge_gradient(m, {0, 0, 1}, {0, 0, 2}, 1.0).empty());
}

// Central differences of hinge_loss with respect to every touched row.
double max_relative_error(TransEModel m, const Triple& pos, const Triple& neg, double margin, double step) {
  const auto grads = hinge_gradient(m, pos, neg, margin);
  double worst = 0;
  for (const auto& g : grads) {
    auto row = g.is_entity ? m.entity(g.id) : m.relation(g.id);
    for (std::size_t i = 0; i < row.size(); ++i) {
      const double saved = row[i];
      row[i] = saved + step;
      const double up = hinge_loss(m, pos, neg, margin);
      row[i] = saved - step;
      const double down = hinge_loss(m, pos, neg, margin);
      row[i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double denom = std::max({std::abs(numeric), std::abs(g.grad[i]), 1e-4});
      worst = std::max(worst, std::abs(numeric - g.grad[i]) / denom);
    }
  }
  return worst;
}

TEST(TransEHinge, GradientMatchesFiniteDifferencesL2) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    TransEModel m(4, 2, 6, Norm::kL2);
    for (double& v : m.entity_data()) v = rng.uniform(-1, 1);
    for (double& v : m.relation_data()) v = rng.uniform(-1, 1);
    const Triple pos{0, 0, 1};
    const Triple neg{0, 0, 2 + trial % 2};
    if (hinge_loss(m, pos, neg, 5.0) <= 0.1) continue;
    EXPECT_LT(max_relative_error(m, pos, neg, 5.0, 1e-5), 1e-4);
  }
}

TEST(TransEHinge, GradientMatchesFiniteDifferencesL1OffKinks) {
  Rng rng(6);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 20; ++trial) {
    TransEModel m(4, 1, 5, Norm::kL1);
    for (double& v : m.entity_data()) v = rng.uniform(-1, 1);
    for (double& v : m.relation_data()) v = rng.uniform(-1, 1);
    const Triple pos{0, 0, 1};
    const Triple neg{2, 0, 3};
    bool near_kink = false;
    for (const Triple& t : {pos, neg}) {
      for (int i = 0; i < 5; ++i) {
        const double diff = m.entity(t.head)[i] + m.relation(0)[i] - m.entity(t.tail)[i];
        near_kink |= std::abs(diff) < 1e-3;
      }
    }
    if (near_kink || hinge_loss(m, pos, neg, 10.0) <= 0.1) continue;
    EXPECT_LT(max_relative_error(m, pos, neg, 10.0, 1e-5), 1e-4);
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(TransEHinge, SharedRowsAreMerged) {
  TransEModel m(3, 1, 2, Norm::kL2);
  m.entity_data() = {0.1, 0.2, 0.3, -0.4, 0.5, 0.6};
  m.relation_data() = {0.2, 0.1};
  const auto grads = hinge_gradient(m, {0, 0, 1}, {0, 0, 2}, 5.0);
  int head_rows = 0;
  for (const auto& g : grads) head_rows += g.is_entity && g.id == 0 ? 1 : 0;
  EXPECT_EQ(head_rows, 1);
  EXPECT_LT(max_relative_error(m, {0, 0, 1}, {0, 0, 2}, 5.0, 1e-5), 1e-4);
}

TEST(Thresholds, SeparatedScores) {
  const auto [theta, acc] = best_threshold({{0.1, 1}, {0.2, 1}, {0.4, 0}, {0.5, 0}});
  EXPECT_DOUBLE_EQ(theta, 0.3);
  EXPECT_DOUBLE_EQ(acc, 1.0);
}

TEST(Thresholds, AllPositiveUsesUpperSentinel) {
  const auto [theta, acc] = best_threshold({{0.1, 1}, {0.2, 1}});
  EXPECT_DOUBLE_EQ(theta, 0.2 + kThresholdEpsilon);
  EXPECT_DOUBLE_EQ(acc, 1.0);
}

TEST(Thresholds, AllNegativeUsesLowerSentinel) {
  const auto [theta, acc] = best_threshold({{0.1, 0}, {0.2, 0}});
  EXPECT_DOUBLE_EQ(theta, 0.1 - kThresholdEpsilon);
  EXPECT_DOUBLE_EQ(acc, 1.0);
}

TEST(Thresholds, InterleavedScores) {
  const auto [theta, acc] = best_threshold({{0.1, 1}, {0.5, 1}, {0.3, 0}, {0.7, 0}});
  EXPECT_DOUBLE_EQ(theta, 0.2);
  EXPECT_DOUBLE_EQ(acc, 0.75);
}

// Independent oracle: try every midpoint and both sentinels, keep the first best.
TEST(Thresholds, MatchesExhaustiveSweep) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<double, int>> scored;
    const int n = 1 + static_cast<int>(rng.uniform_index(15));
    for (int i = 0; i < n; ++i) scored.emplace_back(static_cast<double>(rng.uniform_index(6)), rng.bernoulli(0.5));
    std::vector<double> values;
    for (const auto& s : scored) values.push_back(s.first);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<double> candidates{values.front() - kThresholdEpsilon};
    for (std::size_t i = 0; i + 1 < values.size(); ++i) candidates.push_back(0.5 * (values[i] + values[i + 1]));
    candidates.push_back(values.back() + kThresholdEpsilon);
    double best = -1;
    for (double theta : candidates) {
      int correct = 0;
      for (const auto& s : scored) correct += (s.first < theta ? 1 : 0) == s.second ? 1 : 0;
      best = std::max(best, static_cast<double>(correct) / n);
    }
    EXPECT_DOUBLE_EQ(best_threshold(scored).second, best);
  }
}

TEST(Thresholds, PerRelationAndPooledFallback) {
  // Relation 0 scores: (0,0,1) -> 0, (0,0,2) -> 2. Relation 1 absent.
  TransEModel m(3, 2, 1, Norm::kL2);
  m.entity_data() = {0, 0, 2};
  m.relation_data() = {0, 0};
  const std::vector<LabeledTriple> valid{{{0, 0, 1}, 1}, {{0, 0, 2}, 0}};
  const auto r = select_thresholds(m, valid);
  EXPECT_DOUBLE_EQ(r.thresholds[0], 1.0);
  EXPECT_DOUBLE_EQ(r.thresholds[1], r.global_threshold);
  EXPECT_DOUBLE_EQ(r.relation_accuracy[0], 1.0);
  EXPECT_TRUE(std::isnan(r.relation_accuracy[1]));
  EXPECT_THROW(select_thresholds(m, {}), UserError);
}

TEST(Classify, StrictInequality) {
  TransEModel m(2, 1, 1, Norm::kL2);
  m.entity_data() = {0, 0};
  m.relation_data() = {0};
  m.set_thresholds({0.3});
  EXPECT_EQ(m.classify({0, 0, 1}), 1);
  m.entity_data() = {0, 0.3};
  EXPECT_EQ(m.classify({0, 0, 1}), 0);
  m.entity_data() = {0, 0.31};
  EXPECT_EQ(m.classify({0, 0, 1}), 0);
}

TEST(Classify, MissingThresholdIsAnError) {
  TransEModel m(2, 1, 1, Norm::kL2);
  EXPECT_THROW(m.classify({0, 0, 1}), Error);
}

TEST(Classify, MonotoneInScore) {
  TransEModel m(2, 1, 1, Norm::kL2);
  m.relation_data() = {0};
  m.set_thresholds({0.5});
  int previous = 0;
  for (double x = 1.0; x >= 0.0; x -= 0.05) {
    m.entity_data() = {0, x};
    const int label = m.classify({0, 0, 1});
    EXPECT_GE(label, previous);
    previous = label;
  }
}

TEST(Knn, KOneIsSelf) {
  TransEModel m(5, 1, 2, Norm::kL2);
  EXPECT_EQ(knn(m, 3, 1), std::vector<EntityId>{3});
}

TEST(Knn, MatchesBruteForceSort) {
  Rng rng(4);
  TransEModel m(5, 1, 3, Norm::kL2);
  for (double& v : m.entity_data()) v = rng.uniform(-1, 1);
  for (EntityId e = 0; e < 5; ++e) {
    std::vector<std::pair<double, EntityId>> all;
    for (EntityId o = 0; o < 5; ++o) {
      if (o == e) continue;
      double d = 0;
      for (int i = 0; i < 3; ++i) d += std::pow(m.entity(e)[i] - m.entity(o)[i], 2);
      all.emplace_back(std::sqrt(d), o);
    }
    std::sort(all.begin(), all.end());
    const auto got = knn(m, e, 3);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0], e);
    EXPECT_EQ(got[1], all[0].second);
    EXPECT_EQ(got[2], all[1].second);
  }
}

TEST(Knn, TiesByAscendingId) {
  TransEModel m(4, 1, 1, Norm::kL2);
  m.entity_data() = {0, 1, -1, 5};
  EXPECT_EQ(knn(m, 0, 3), (std::vector<EntityId>{0, 1, 2}));
  EXPECT_THROW(knn(m, 0, 5), UserError);
}

Graph chain_kb() {
  std::vector<std::string> lines;
  for (int i = 0; i < 20; ++i) lines.push_back("e" + std::to_string(i) + " r e" + std::to_string(i + 1));
  return make_graph(lines);
}

std::vector<LabeledTriple> chain_valid(const Graph& g) {
  std::vector<LabeledTriple> v;
  for (int i = 0; i < 20; i += 4) {
    v.push_back({{i, 0, i + 1}, 1});
    v.push_back({{i + 1, 0, i}, 0});
  }
  (void)g;
  return v;
}

TEST(GridSearch, SingleConfig) {
  const Graph g = chain_kb();
  TrainConfig c;
  c.dim = 4;
  c.epochs = 10;
  const std::vector<TrainConfig> grid{c};
  const auto r = grid_search(g, chain_valid(g), grid);
  EXPECT_EQ(r.config.dim, 4);
  ASSERT_EQ(r.accuracies.size(), 1u);
  EXPECT_DOUBLE_EQ(r.accuracies[0], r.validation_accuracy);
  EXPECT_TRUE(r.model.has_thresholds());
}

TEST(GridSearch, PicksBestAndBreaksTiesByOrder) {
  const Graph g = chain_kb();
  const auto valid = chain_valid(g);
  TrainConfig a;
  a.dim = 4;
  a.epochs = 0;
  a.seed = 1;
  TrainConfig b = a;
  b.epochs = 200;
  b.learning_rate = 0.05;
  const std::vector<TrainConfig> grid{a, b, b};
  const auto r = grid_search(g, valid, grid);
  ASSERT_EQ(r.accuracies.size(), 3u);
  const double best = *std::max_element(r.accuracies.begin(), r.accuracies.end());
  EXPECT_DOUBLE_EQ(r.validation_accuracy, best);
  const auto first = std::find(r.accuracies.begin(), r.accuracies.end(), best) - r.accuracies.begin();
  EXPECT_EQ(r.config.epochs, grid[static_cast<std::size_t>(first)].epochs);
}

TEST(GridSearch, SkipsFailedConfigs) {
  const Graph g = chain_kb();
  TrainConfig bad;
  bad.dim = 4;
  bad.epochs = 5;
  bad.learning_rate = 1e308;
  bad.norm = Norm::kL2;
  TrainConfig good = bad;
  good.learning_rate = 0.01;
  const std::vector<TrainConfig> grid{bad, good};
  const auto r = grid_search(g, chain_valid(g), grid);
  EXPECT_TRUE(std::isnan(r.accuracies[0]));
  EXPECT_DOUBLE_EQ(r.config.learning_rate, 0.01);
  const std::vector<TrainConfig> all_bad{bad};
  EXPECT_THROW(grid_search(g, chain_valid(g), all_bad), Error);
}

TEST(GridSearch, DefaultGridHas24Configs) {
  EXPECT_EQ(default_grid(TrainConfig{}).size(), 24u);
}

TEST(TransEModelIo, ReloadReproducesScoresBitExactly) {
  TempDir dir;
  const Graph g = small_kb();
  TrainConfig c;
  c.dim = 7;
  c.epochs = 3;
  auto m = train(g, c).model;
  std::vector<double> thresholds(g.num_relations(), 0.1234567890123);
  m.set_thresholds(thresholds);
  m.save(dir / "model.json");
  const auto back = TransEModel::load(dir / "model.json");
  EXPECT_EQ(back.entity_data(), m.entity_data());
  EXPECT_EQ(back.relation_data(), m.relation_data());
  EXPECT_EQ(back.thresholds(), m.thresholds());
  EXPECT_EQ(back.config().seed, c.seed);
  for (const Triple& t : g.triples()) {
    EXPECT_EQ(back.score(t), m.score(t));
    // Recompute oracle straight from the serialized vectors.
    double sq = 0;
    for (int i = 0; i < 7; ++i) {
      sq += std::abs(back.entity(t.head)[i] + back.relation(t.relation)[i] - back.entity(t.tail)[i]);
    }
    EXPECT_NEAR(back.score(t), sq, 1e-12);
  }
  m.save(dir / "again.json");
  EXPECT_EQ(testing::read_file(dir / "model.json"), testing::read_file(dir / "again.json"));
}

TEST(TransEModelIo, RejectsForeignFiles) {
  TempDir dir;
  EXPECT_THROW(TransEModel::load(dir.write("x.json", "{\"format\": \"other\"}")), UserError);
  EXPECT_THROW(TransEModel::load(dir.write("y.json", "not json")), UserError);
  EXPECT_THROW(TransEModel::load(dir / "missing.json"), IoError);
}

}  // namespace
}  // namespace xke
