#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xke/graph.hpp"
#include "xke/logreg.hpp"
#include "xke/sfe.hpp"
#include "xke/transe.hpp"

namespace xke {

// TRUE explains with features from the observed graph, PRED with features
// from the graph of the black box's own positive predictions.
enum class Variant { kTrue, kPred };

std::string to_string(Variant v);
Variant parse_variant(std::string_view text);

struct PredictedGraphSpec {
  std::vector<Triple> seeds;
  int k = 1;
};

struct PredictedGraphStats {
  std::size_t seeds = 0;
  std::size_t positive_seeds = 0;
  std::size_t candidates = 0;  // distinct (h', r, t') pairs classified
  std::size_t positives = 0;   // |G^|
  double positive_ratio = 0.0;  // positives / candidates; NaN when no candidates
};

struct PredictedGraph {
  Graph graph;
  PredictedGraphStats stats;
};

// For every seed the black box accepts, classifies all k*k combinations of
// knn(head, k) x knn(tail, k) under the seed's relation; the accepted
// candidates form the predicted graph. Ids are shared with `graph`.
PredictedGraph build_predicted_graph(const Graph& graph, const TransEModel& model, const PredictedGraphSpec& spec);

// Positives followed by neg_ratio Bernoulli corruptions each, corrupted against
// `truth`. Every instance is distinct.
std::vector<Triple> build_instances(const Graph& truth, std::span<const Triple> positives, int neg_ratio, Rng& rng);

struct PedagogicalDataset {
  Variant source = Variant::kTrue;
  FeatureMatrix matrix;     // rows keyed by instance, in instance order
  std::vector<int> labels;  // one per row
};

// Labels every instance with the black box (never the gold label) and
// extracts its features from feature_graph.
PedagogicalDataset make_dataset(Variant variant, const Graph& feature_graph, const TransEModel& model,
                                RelationId relation, std::span<const Triple> instances, const SfeParams& params,
                                SubgraphCache* cache = nullptr);

PedagogicalDataset make_dataset(Variant variant, const Graph& feature_graph, const Graph& truth,
                                const TransEModel& model, RelationId relation, std::span<const Triple> positives,
                                int neg_ratio, const SfeParams& params, Rng& rng);

inline constexpr double kRuleWeightEpsilon = 1e-8;

struct Explainer {
  RelationId relation = 0;
  FeatureVocabulary vocab;
  std::vector<double> weights;
  double bias = 0.0;
  bool constant = false;   // fitted on a single-class dataset or a fallback
  bool converged = true;

  double score(std::span<const std::int32_t> active) const;
  std::size_t rule_count() const;           // |w| > kRuleWeightEpsilon
  std::size_t positive_rule_count() const;  // w > kRuleWeightEpsilon
};

// Logistic regression of the dataset's labels on its path features. A
// single-class dataset yields a bias-only explainer.
Explainer train_explainer(const PedagogicalDataset& dataset, const logreg::FitConfig& config);

// Bias-only explainer at logit(positive_rate), rate clamped to [1e-6, 1 - 1e-6].
Explainer constant_explainer(RelationId relation, double positive_rate);

struct Reason {
  PathType path;
  double weight = 0.0;
};

struct Explanation {
  Triple triple;
  std::vector<Reason> reasons;  // by descending |weight|
  double bias = 0.0;
  double score = 0.0;
  int black_box_label = 0;
  std::size_t n_features = 0;  // active features known to the explainer

  int explainer_label() const { return score >= 0.5 ? 1 : 0; }
};

Explanation explain(const Explainer& explainer, const Triple& triple, SubgraphCache& features,
                    const TransEModel& model);

// Convenience overload that extracts features with a throwaway cache.
Explanation explain(const Explainer& explainer, const Triple& triple, const Graph& feature_graph,
                    const SfeParams& params, const TransEModel& model);

// Explainers for every relation plus the fallback used for relations that
// never got one.
class ExplainerSet {
 public:
  ExplainerSet() = default;
  ExplainerSet(Variant variant, SfeParams params, double fallback_positive_rate);

  void add(Explainer e);
  // Returns the relation's explainer, or the fallback (and sets *fallback).
  const Explainer& get(RelationId relation, bool* fallback = nullptr) const;
  bool has(RelationId relation) const;
  std::span<const Explainer> explainers() const { return explainers_; }

  Variant variant() const { return variant_; }
  const SfeParams& params() const { return params_; }
  double fallback_rate() const { return fallback_rate_; }

  void save(const std::filesystem::path& path, const Graph& graph) const;
  static ExplainerSet load(const std::filesystem::path& path, Graph& graph);

 private:
  Variant variant_ = Variant::kTrue;
  SfeParams params_;
  double fallback_rate_ = 0.5;
  std::vector<Explainer> explainers_;
  std::vector<std::int32_t> slot_;  // relation id -> index in explainers_, -1 if none
  Explainer fallback_;
};

// Rule text in the human-readable form "a, b⁻¹, c".
std::string format_rule(const PathType& path, const Vocabulary& relations);

std::string explanation_json_line(const Explanation& e, const Graph& graph);
std::string explanation_table(const Explanation& e, const Graph& graph);

}  // namespace xke
