#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xke/graph.hpp"
#include "xke/path.hpp"

namespace xke {

enum class WalkMode {
  kExhaustive,  // every path up to `depth`
  kSampled,     // `walks` random walks of length `depth`
  kAuto,        // exhaustive unless the expansion exceeds `degree_budget`
};

std::string to_string(WalkMode mode);
WalkMode parse_walk_mode(std::string_view text);

struct SfeParams {
  int depth = 2;
  int walks = 1000;
  std::size_t max_path_length = 4;
  WalkMode mode = WalkMode::kAuto;
  std::size_t degree_budget = 200000;
  bool exclude_direct_edge = true;
  std::uint64_t seed = 0;

  std::string to_string() const;
  static SfeParams parse(std::string_view text);
  friend bool operator==(const SfeParams&, const SfeParams&) = default;
};

// Paths leaving `center`, grouped by the node where they end. Each list is
// sorted and unique.
struct Subgraph {
  EntityId center = 0;
  std::unordered_map<EntityId, std::vector<PathType>> reach;
  bool sampled = false;
};

// Number of walks of length <= depth leaving `entity`, saturating at `cap`.
std::size_t expansion_size(const Graph& graph, EntityId entity, int depth, std::size_t cap);

// Builds the subgraph around `entity`. When `excluded` is set, that edge is
// not traversed in either direction. Sampled walks draw from `rng`.
Subgraph build_subgraph(const Graph& graph, EntityId entity, const SfeParams& params, Rng& rng,
                        const Triple* excluded = nullptr);

// Joins two subgraphs on shared intermediate nodes: every pi_h ending at a node
// also reached by pi_t yields pi_h followed by inverse(pi_t). Paths that reach
// the other center directly are emitted as-is. Result is sorted and unique,
// capped at max_path_length. With `exclude`, the single-step path
// [exclude.relation] is dropped.
std::vector<PathType> merge_features(const Subgraph& sub_h, const Subgraph& sub_t, std::size_t max_path_length,
                                     const Triple* exclude = nullptr);

class FeatureVocabulary {
 public:
  std::int32_t add(const PathType& p);
  std::optional<std::int32_t> find(const PathType& p) const;
  const PathType& path(std::int32_t index) const { return paths_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const { return paths_.size(); }
  const std::vector<PathType>& paths() const { return paths_; }

 private:
  std::vector<PathType> paths_;
  std::unordered_map<PathType, std::int32_t, PathTypeHash> index_;
};

struct FeatureRow {
  Triple triple;
  std::vector<std::int32_t> features;  // strictly increasing vocabulary indices
};

struct FeatureMatrix {
  RelationId relation = 0;
  SfeParams params;
  FeatureVocabulary vocab;
  std::vector<FeatureRow> rows;
};

// Caches per-entity subgraphs for one (graph, params) pair. Each entity's
// walks use their own random substream, so cached and fresh subgraphs agree.
class SubgraphCache {
 public:
  SubgraphCache(const Graph& graph, const SfeParams& params) : graph_(&graph), params_(params) {}

  const Subgraph& get(EntityId entity);
  Subgraph build(EntityId entity, const Triple* excluded) const;

  const Graph& graph() const { return *graph_; }
  const SfeParams& params() const { return params_; }
  std::size_t size() const { return cache_.size(); }

 private:
  const Graph* graph_;
  SfeParams params_;
  std::unordered_map<EntityId, Subgraph> cache_;
};

// Path types connecting triple.head to triple.tail in the cache's graph. With
// exclude_direct_edge set, the triple's own edge is never traversed.
std::vector<PathType> extract_features(const Triple& triple, SubgraphCache& cache);

// One row per instance. With `vocab` (test time) unseen path types are
// dropped; otherwise the vocabulary grows in instance order.
FeatureMatrix extract_matrix(const Graph& graph, RelationId relation, std::span<const Triple> instances,
                             const SfeParams& params, const FeatureVocabulary* vocab = nullptr,
                             SubgraphCache* cache = nullptr);

void write_feature_matrix(const FeatureMatrix& matrix, const Graph& graph, const std::filesystem::path& path);
FeatureMatrix read_feature_matrix(const std::filesystem::path& path, Graph& graph);

}  // namespace xke
