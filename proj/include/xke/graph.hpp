#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "xke/rng.hpp"

namespace xke {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

enum class Direction : std::uint8_t { kForward = 0, kInverse = 1 };

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t x = static_cast<std::uint32_t>(t.head);
    x = x * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(t.relation);
    x = x * 0x9e3779b97f4a7c15ULL + static_cast<std::uint32_t>(t.tail);
    return static_cast<std::size_t>(Rng::splitmix(x));
  }
};

struct LabeledTriple {
  Triple triple;
  int label = 0;  // 0 or 1
};

// One adjacency entry. Every triple (h, r, t) contributes {r, kForward, t} to
// h's list and {r, kInverse, h} to t's list.
struct Edge {
  RelationId relation;
  Direction direction;
  EntityId neighbor;
};

// Dense string <-> id interning table. Ids are assigned in first-seen order.
class Vocabulary {
 public:
  std::int32_t intern(std::string_view name);
  std::optional<std::int32_t> find(std::string_view name) const;
  const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t, Hash, std::equal_to<>> ids_;
};

struct RelationStats {
  double tph = 0.0;  // mean tails per head
  double hpt = 0.0;  // mean heads per tail
};

// Knowledge graph: interned entities and relations, a deduplicated triple set,
// and adjacency with materialized inverse edges. Edges are fixed at
// construction; vocabularies may still grow (entities seen only in
// valid/test files get ids but no edges).
class Graph {
 public:
  Graph() = default;
  Graph(Vocabulary entities, Vocabulary relations, std::span<const Triple> triples);

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }

  EntityId intern_entity(std::string_view name);
  RelationId intern_relation(std::string_view name);

  // Triples in first-seen order, duplicates removed.
  std::span<const Triple> triples() const { return triples_; }
  std::span<const Triple> triples_of(RelationId relation) const;
  bool contains(const Triple& t) const { return index_.contains(t); }
  bool empty() const { return triples_.empty(); }

  // Ids beyond the adjacency table (interned after construction) have no edges.
  std::span<const Edge> neighbors(EntityId entity) const;
  std::size_t degree(EntityId entity) const { return neighbors(entity).size(); }

  // Order-independent hash of the edge set, used to key feature caches.
  std::uint64_t fingerprint() const { return fingerprint_; }

  std::string describe(const Triple& t) const;

 private:
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triple> triples_;
  std::vector<std::vector<Triple>> by_relation_;
  std::unordered_set<Triple, TripleHash> index_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Edge> edges_;
  std::uint64_t fingerprint_ = 0;
};

// Reads `head<TAB>relation<TAB>tail` lines (plain or gzip). Names from
// extra_vocab_paths are interned after the main file but add no edges.
Graph load_graph(const std::filesystem::path& triples_path,
                 std::span<const std::filesystem::path> extra_vocab_paths = {});

// Same format, but ids are interned starting from base's tables so the
// result shares ids with base (used for the predicted graph).
Graph load_graph_like(const std::filesystem::path& triples_path, const Graph& base);

// Reads `head<TAB>relation<TAB>tail<TAB>label` with label in {1,-1} or {1,0}.
std::vector<LabeledTriple> load_labeled(const std::filesystem::path& path, Graph& graph);

// Reads triples from 3-column lines, or 4-column lines whose label is ignored.
std::vector<Triple> load_triples(const std::filesystem::path& path, Graph& graph);

void write_tsv(const Graph& graph, const std::filesystem::path& path);
void write_labeled(const Graph& graph, std::span<const LabeledTriple> rows, const std::filesystem::path& path);

RelationStats relation_stats(const Graph& graph, RelationId relation);

inline constexpr int kCorruptionRetries = 100;

// Bernoulli negative sampling: replace the head with probability
// tph / (tph + hpt), otherwise the tail, by a uniform entity; resample while
// the result is an observed triple.
Triple corrupt_bernoulli(const Graph& graph, const Triple& triple, const RelationStats& stats, Rng& rng);

// Reads every line of a plain or gzip-compressed text file.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace xke
