#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xke/graph.hpp"

namespace xke {

enum class Norm { kL1, kL2 };

std::string to_string(Norm norm);
Norm parse_norm(std::string_view text);

struct TrainConfig {
  int dim = 50;
  double margin = 1.0;
  double learning_rate = 0.01;
  Norm norm = Norm::kL1;
  int epochs = 1000;
  int batch_size = 100;
  std::uint64_t seed = 0;
};

// TransE: score(h, r, t) = ||e_h + r_r - e_t||, lower is more plausible.
class TransEModel {
 public:
  TransEModel() = default;
  TransEModel(std::size_t n_entities, std::size_t n_relations, int dim, Norm norm);

  int dim() const { return dim_; }
  Norm norm() const { return norm_; }
  std::size_t num_entities() const { return n_entities_; }
  std::size_t num_relations() const { return n_relations_; }

  std::span<double> entity(EntityId e) { return {entity_vecs_.data() + offset(e), static_cast<std::size_t>(dim_)}; }
  std::span<const double> entity(EntityId e) const {
    return {entity_vecs_.data() + offset(e), static_cast<std::size_t>(dim_)};
  }
  std::span<double> relation(RelationId r) { return {relation_vecs_.data() + offset(r), static_cast<std::size_t>(dim_)}; }
  std::span<const double> relation(RelationId r) const {
    return {relation_vecs_.data() + offset(r), static_cast<std::size_t>(dim_)};
  }

  std::vector<double>& entity_data() { return entity_vecs_; }
  const std::vector<double>& entity_data() const { return entity_vecs_; }
  std::vector<double>& relation_data() { return relation_vecs_; }
  const std::vector<double>& relation_data() const { return relation_vecs_; }

  double score(const Triple& t) const;

  // Per-relation thresholds; empty until select_thresholds has run.
  const std::vector<double>& thresholds() const { return thresholds_; }
  bool has_thresholds() const { return !thresholds_.empty(); }
  void set_thresholds(std::vector<double> thresholds) { thresholds_ = std::move(thresholds); }

  // Black-box classifier: 1 iff score < threshold of the triple's relation.
  int classify(const Triple& t) const;

  void normalize_entities();

  const TrainConfig& config() const { return config_; }
  void set_config(const TrainConfig& config) { config_ = config; }

  void save(const std::filesystem::path& path) const;
  static TransEModel load(const std::filesystem::path& path);

 private:
  std::size_t offset(std::int32_t id) const { return static_cast<std::size_t>(id) * static_cast<std::size_t>(dim_); }

  std::size_t n_entities_ = 0;
  std::size_t n_relations_ = 0;
  int dim_ = 0;
  Norm norm_ = Norm::kL1;
  std::vector<double> entity_vecs_;
  std::vector<double> relation_vecs_;
  std::vector<double> thresholds_;
  TrainConfig config_;
};

TransEModel init_model(const Graph& graph, const TrainConfig& config);

struct TrainResult {
  TransEModel model;
  std::vector<double> epoch_loss;  // mean hinge loss per positive, per epoch
};

// Mini-batch SGD on the margin ranking loss with one Bernoulli negative per
// positive per epoch. Entity rows are renormalized at the end of every epoch.
TrainResult train(const Graph& graph, const TrainConfig& config);

// Hinge loss max(0, margin + f(pos) - f(neg)) and its gradient.
double hinge_loss(const TransEModel& model, const Triple& positive, const Triple& negative, double margin);

struct ParameterGradient {
  bool is_entity = true;
  std::int32_t id = 0;
  std::vector<double> grad;
};

// Gradient of hinge_loss with respect to every parameter row it touches.
// Rows that appear more than once (shared head, say) are merged.
std::vector<ParameterGradient> hinge_gradient(const TransEModel& model, const Triple& positive, const Triple& negative,
                                              double margin);

inline constexpr double kThresholdEpsilon = 1e-6;

struct ThresholdResult {
  std::vector<double> thresholds;        // one per relation in the model
  std::vector<double> relation_accuracy;  // NaN for relations absent from valid
  double global_threshold = 0.0;
};

// Picks each relation's threshold from the midpoints of consecutive distinct
// validation scores plus min-eps / max+eps sentinels. Relations without
// validation examples receive the pooled optimum.
ThresholdResult select_thresholds(const TransEModel& model, std::span<const LabeledTriple> valid);

// Best threshold and its accuracy for one list of (score, label) pairs.
std::pair<double, double> best_threshold(std::vector<std::pair<double, int>> scored);

double classification_accuracy(const TransEModel& model, std::span<const LabeledTriple> examples);

// `entity` first, then its k-1 nearest entities by L2 distance (ties by id).
std::vector<EntityId> knn(const TransEModel& model, EntityId entity, int k);

struct GridSearchResult {
  TransEModel model;
  TrainConfig config;
  double validation_accuracy = 0.0;
  std::vector<double> accuracies;  // per grid entry; NaN where training failed
};

GridSearchResult grid_search(const Graph& graph, std::span<const LabeledTriple> valid,
                             std::span<const TrainConfig> grid);

// d in {20, 50, 100}, margin in {1, 5}, lr in {0.01, 0.001}, norm in {L1, L2}.
std::vector<TrainConfig> default_grid(const TrainConfig& base);

}  // namespace xke
