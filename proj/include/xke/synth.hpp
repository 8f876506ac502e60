#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xke/graph.hpp"
#include "xke/path.hpp"

namespace xke::synth {

// head <= body, e.g. {"r3", {"r1", "r2"}} plants r3(x, z) <= r1(x, y) ^ r2(y, z).
// Body tokens may end in "⁻¹" or "^-1" to walk an edge backwards.
struct RuleSpec {
  std::string head;
  std::vector<std::string> body;
  double noise = 0.0;  // flip probability in [0, 0.5)
};

// kUniform draws base edges between arbitrary ordered pairs. kLattice places
// entities on a grid with one axis per base relation and only draws edges
// between grid neighbours along that relation's axis, so every relation is a
// consistent translation.
enum class Layout { kUniform, kLattice };

std::string to_string(Layout layout);
Layout parse_layout(std::string_view text);

struct SynthConfig {
  std::size_t n_entities = 300;
  std::vector<std::string> base_relations = {"r0", "r1", "r2", "r4"};
  std::vector<RuleSpec> rules = {{"r3", {"r1", "r2"}, 0.05}};
  // Probability of each candidate pair per base relation: every ordered pair
  // under kUniform, every axis-neighbour pair under kLattice.
  double density = 0.005;
  Layout layout = Layout::kUniform;
  std::uint64_t seed = 0;
};

struct SynthKb {
  Graph full;   // every generated triple
  Graph train;  // 80% split; vocabulary covers all entities and relations
  std::vector<LabeledTriple> valid;  // 10% positives + one corruption each
  std::vector<LabeledTriple> test;   // 10% positives + one corruption each
};

SynthKb generate(const SynthConfig& config);

// Writes train.tsv, valid.tsv and test.tsv under `dir`.
void write_splits(const SynthKb& kb, const std::filesystem::path& dir);

// Body of a rule as a path type over `relations`.
PathType parse_body(const std::vector<std::string>& body, const Vocabulary& relations);

inline constexpr std::size_t kOracleMaxEdges = 1000;

// Every signed path of length <= max_len from head to tail, by depth-first
// enumeration of walks. With `excluded`, that edge is never walked.
std::vector<PathType> path_oracle(const Graph& graph, EntityId head, EntityId tail, std::size_t max_len,
                                  const Triple* excluded = nullptr);

}  // namespace xke::synth
