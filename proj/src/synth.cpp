#include "xke/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "xke/error.hpp"

namespace xke::synth {

std::string to_string(Layout layout) { return layout == Layout::kUniform ? "uniform" : "lattice"; }

Layout parse_layout(std::string_view text) {
  if (text == "uniform") return Layout::kUniform;
  if (text == "lattice") return Layout::kLattice;
  throw UserError("unknown layout '" + std::string(text) + "' (expected uniform or lattice)");
}

PathType parse_body(const std::vector<std::string>& body, const Vocabulary& relations) {
  PathType p;
  for (std::string token : body) {
    Direction dir = Direction::kForward;
    for (std::string_view mark : {kInverseMark, std::string_view("^-1")}) {
      if (token.size() > mark.size() && std::string_view(token).ends_with(mark)) {
        token.resize(token.size() - mark.size());
        dir = Direction::kInverse;
      }
    }
    const auto id = relations.find(token);
    if (!id) throw UserError("rule body names unknown relation '" + token + "'");
    p.push_back({*id, dir});
  }
  return p;
}

namespace {

// Endpoints reachable from x by following `body` step by step.
std::set<EntityId> follow(const Graph& g, EntityId x, const PathType& body) {
  std::set<EntityId> frontier{x};
  for (std::size_t i = 0; i < body.length() && !frontier.empty(); ++i) {
    const PathStep s = body.step(i);
    std::set<EntityId> next;
    for (EntityId node : frontier) {
      for (const Edge& e : g.neighbors(node)) {
        if (e.relation == s.relation && e.direction == s.direction) next.insert(e.neighbor);
      }
    }
    frontier = std::move(next);
  }
  return frontier;
}

std::vector<LabeledTriple> with_negatives(const Graph& full, std::span<const Triple> positives, Rng& rng) {
  std::vector<LabeledTriple> out;
  for (const Triple& t : positives) {
    out.push_back({t, 1});
    out.push_back({corrupt_bernoulli(full, t, relation_stats(full, t.relation), rng), 0});
  }
  return out;
}

}  // namespace

SynthKb generate(const SynthConfig& config) {
  if (config.n_entities < 3) throw UserError("synthetic KB needs at least 3 entities");
  if (!(config.density >= 0.0 && config.density <= 1.0)) throw UserError("density must be in [0, 1]");
  if (config.base_relations.empty()) throw UserError("synthetic KB needs at least one base relation");

  Vocabulary entities, relations;
  for (std::size_t i = 0; i < config.n_entities; ++i) entities.intern("e" + std::to_string(i));
  for (const auto& r : config.base_relations) relations.intern(r);
  std::vector<PathType> bodies;
  for (const auto& rule : config.rules) {
    if (!(rule.noise >= 0.0 && rule.noise < 0.5)) throw UserError("rule noise must be in [0, 0.5)");
    if (rule.body.empty() || rule.body.size() > 4) throw UserError("rule body length must be in [1, 4]");
    if (std::find(config.base_relations.begin(), config.base_relations.end(), rule.head) !=
        config.base_relations.end()) {
      throw UserError("rule head '" + rule.head + "' is also a base relation");
    }
    const RelationId head = relations.intern(rule.head);
    PathType body = parse_body(rule.body, relations);
    if (body.length() == 1 && body.step(0).relation == head && body.step(0).direction == Direction::kForward) {
      throw UserError("rule body may not be its own head relation");
    }
    bodies.push_back(body);
  }

  const Rng root(config.seed);
  Rng edge_rng = root.substream("graph");
  const auto n = config.n_entities;
  std::vector<Triple> triples;
  if (config.layout == Layout::kLattice) {
    // Grid point i has mixed-radix digits of base `side`; entity slot[i] sits there.
    const std::size_t axes = config.base_relations.size();
    std::size_t side = 1;
    while (true) {
      std::size_t cells = 1;
      for (std::size_t a = 0; a < axes && cells < n; ++a) cells *= side;
      if (cells >= n) break;
      ++side;
    }
    std::vector<EntityId> slot(n);
    for (std::size_t i = 0; i < n; ++i) slot[i] = static_cast<EntityId>(i);
    Rng layout_rng = root.substream("layout");
    layout_rng.shuffle(slot);
    std::size_t stride = 1;
    for (std::size_t r = 0; r < axes; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + stride;
        if ((i / stride) % side + 1 >= side || j >= n) continue;
        if (edge_rng.bernoulli(config.density)) triples.push_back({slot[i], static_cast<RelationId>(r), slot[j]});
      }
      stride *= side;
    }
  } else if (config.density > 0.0) {
    // Geometric skipping over the n*n grid of ordered pairs.
    const double log_q = config.density < 1.0 ? std::log1p(-config.density) : 0.0;
    for (std::size_t r = 0; r < config.base_relations.size(); ++r) {
      std::uint64_t idx = 0;
      const std::uint64_t total = static_cast<std::uint64_t>(n) * n;
      while (true) {
        if (config.density < 1.0) {
          const double u = 1.0 - edge_rng.uniform();  // (0, 1]
          idx += static_cast<std::uint64_t>(std::floor(std::log(u) / log_q));
        }
        if (idx >= total) break;
        const auto x = static_cast<EntityId>(idx / n);
        const auto y = static_cast<EntityId>(idx % n);
        if (x != y) triples.push_back({x, static_cast<RelationId>(r), y});
        ++idx;
      }
    }
  }

  Rng rule_rng = root.substream("rules");
  for (std::size_t k = 0; k < config.rules.size(); ++k) {
    const Graph current(entities, relations, triples);
    const RelationId head = *relations.find(config.rules[k].head);
    const double noise = config.rules[k].noise;
    std::vector<Triple> derived;
    std::size_t spurious = 0;
    for (std::size_t x = 0; x < n; ++x) {
      for (EntityId z : follow(current, static_cast<EntityId>(x), bodies[k])) {
        if (z == static_cast<EntityId>(x)) continue;
        if (noise > 0.0 && rule_rng.bernoulli(noise)) {
          ++spurious;  // dropped; an unsupported pair is added instead
          continue;
        }
        derived.push_back({static_cast<EntityId>(x), head, z});
      }
    }
    for (std::size_t i = 0; i < spurious; ++i) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        const auto x = static_cast<EntityId>(rule_rng.uniform_index(n));
        const auto z = static_cast<EntityId>(rule_rng.uniform_index(n));
        if (x == z || follow(current, x, bodies[k]).contains(z)) continue;
        derived.push_back({x, head, z});
        break;
      }
    }
    triples.insert(triples.end(), derived.begin(), derived.end());
  }

  SynthKb kb;
  kb.full = Graph(entities, relations, triples);
  std::vector<Triple> all(kb.full.triples().begin(), kb.full.triples().end());
  Rng split_rng = root.substream("split");
  split_rng.shuffle(all);
  const std::size_t n_train = all.size() * 8 / 10;
  const std::size_t n_valid = all.size() / 10;
  const std::span<const Triple> everything(all);
  kb.train = Graph(entities, relations, everything.subspan(0, n_train));
  Rng corrupt_rng = root.substream("corrupt");
  kb.valid = with_negatives(kb.full, everything.subspan(n_train, n_valid), corrupt_rng);
  kb.test = with_negatives(kb.full, everything.subspan(n_train + n_valid), corrupt_rng);
  return kb;
}

void write_splits(const SynthKb& kb, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_tsv(kb.train, dir / "train.tsv");
  write_labeled(kb.full, kb.valid, dir / "valid.tsv");
  write_labeled(kb.full, kb.test, dir / "test.tsv");
}

namespace {

void dfs(const Graph& g, EntityId node, EntityId tail, std::size_t max_len, const Triple* excluded, PathType& path,
         std::set<PathType>& out) {
  if (!path.empty() && node == tail) out.insert(path);
  if (path.length() == max_len) return;
  for (const Edge& e : g.neighbors(node)) {
    if (excluded != nullptr && e.relation == excluded->relation) {
      const bool fwd = e.direction == Direction::kForward && node == excluded->head && e.neighbor == excluded->tail;
      const bool inv = e.direction == Direction::kInverse && node == excluded->tail && e.neighbor == excluded->head;
      if (fwd || inv) continue;
    }
    PathType next = path.extended({e.relation, e.direction});
    dfs(g, e.neighbor, tail, max_len, excluded, next, out);
  }
}

}  // namespace

std::vector<PathType> path_oracle(const Graph& graph, EntityId head, EntityId tail, std::size_t max_len,
                                  const Triple* excluded) {
  if (max_len > 6) throw UserError("path oracle is limited to length 6");
  if (graph.triples().size() > kOracleMaxEdges) throw UserError("path oracle is limited to 1000-edge graphs");
  std::set<PathType> found;
  PathType path;
  dfs(graph, head, tail, max_len, excluded, path, found);
  return {found.begin(), found.end()};
}

}  // namespace xke::synth
