#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xke/graph.hpp"
#include "xke/logreg.hpp"
#include "xke/metrics.hpp"
#include "xke/pedagogue.hpp"
#include "xke/sfe.hpp"
#include "xke/synth.hpp"
#include "xke/transe.hpp"

namespace xke {

// Everything one pipeline run needs. Loaded from a flat `key = value` file;
// see README for the key list.
struct PipelineConfig {
  std::filesystem::path train_path;
  std::filesystem::path valid_path;
  std::filesystem::path test_path;
  std::filesystem::path out_dir = "xke_out";

  TrainConfig train;
  // Comma-separated values for these keys expand into a grid search.
  std::vector<int> dims;
  std::vector<double> margins;
  std::vector<double> learning_rates;
  std::vector<Norm> norms;
  bool use_default_grid = false;

  SfeParams sfe;
  Variant variant = Variant::kTrue;
  int k = 3;
  int neg_ratio = 2;
  std::size_t max_positives = 0;  // per relation; 0 keeps every training triple
  logreg::FitConfig fit;

  std::uint64_t seed = 0;
  int threads = 1;

  synth::SynthConfig synth;

  static PipelineConfig load(const std::filesystem::path& path);
  // Applies one key/value pair; throws UserError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  // Seeds of every stage are derived from `seed`; call after changing it.
  void derive_seeds();
  // The embedding configurations to try, in grid order.
  std::vector<TrainConfig> train_grid() const;
};

// Training graph with valid/test vocabulary interned, plus the labeled splits.
struct Dataset {
  Graph graph;
  std::vector<LabeledTriple> valid;
  std::vector<LabeledTriple> test;
};

Dataset load_dataset(const PipelineConfig& config, bool need_test = true);

namespace paths {
std::filesystem::path model(const PipelineConfig& c);
std::filesystem::path pred_graph(const PipelineConfig& c);
std::filesystem::path pred_graph_stats(const PipelineConfig& c);
std::filesystem::path features_dir(const PipelineConfig& c, const std::string& tag);
std::filesystem::path explainers(const PipelineConfig& c, const std::string& tag);
std::filesystem::path explanations(const PipelineConfig& c, const std::string& tag);
std::filesystem::path metrics(const PipelineConfig& c, const std::string& tag);
}  // namespace paths

struct EmbeddingSummary {
  TrainConfig config;
  double validation_accuracy = 0.0;
  std::optional<double> test_accuracy;
};

EmbeddingSummary cmd_train_embedding(const PipelineConfig& config);

PredictedGraphStats cmd_build_pred_graph(const PipelineConfig& config);

// Writes one feature matrix plus a label file per relation. Returns the
// number of relations processed.
std::size_t cmd_extract_features(const PipelineConfig& config);

std::size_t cmd_train_explainer(const PipelineConfig& config);

// Explains every triple of `triples_path` (3 or 4 columns). Returns the
// explanations in file order.
std::vector<Explanation> cmd_explain(const PipelineConfig& config, const std::filesystem::path& triples_path);

metrics::MetricsReport cmd_evaluate(const PipelineConfig& config);

// Explainers fitted on gold labels instead of black-box labels.
metrics::MetricsReport cmd_baseline_sfe(const PipelineConfig& config);

void cmd_synth(const PipelineConfig& config);

// train-embedding, build-pred-graph (PRED only), extract-features,
// train-explainer and evaluate in sequence.
metrics::MetricsReport run_pipeline(const PipelineConfig& config);

// Per-record evaluation of an explainer set on labeled triples.
std::vector<metrics::EvalRecord> evaluate_records(const ExplainerSet& explainers, const Graph& feature_graph,
                                                  const TransEModel& model, std::span<const LabeledTriple> examples);

}  // namespace xke
