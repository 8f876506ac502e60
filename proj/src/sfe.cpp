#include "xke/sfe.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "xke/error.hpp"

namespace xke {

std::string to_string(WalkMode mode) {
  switch (mode) {
    case WalkMode::kExhaustive:
      return "exhaustive";
    case WalkMode::kSampled:
      return "sampled";
    case WalkMode::kAuto:
      return "auto";
  }
  return "auto";
}

WalkMode parse_walk_mode(std::string_view text) {
  if (text == "exhaustive") return WalkMode::kExhaustive;
  if (text == "sampled") return WalkMode::kSampled;
  if (text == "auto") return WalkMode::kAuto;
  throw UserError("unknown walk mode '" + std::string(text) + "'");
}

std::string SfeParams::to_string() const {
  std::ostringstream out;
  out << "depth=" << depth << " walks=" << walks << " max_path_length=" << max_path_length
      << " mode=" << xke::to_string(mode) << " degree_budget=" << degree_budget
      << " exclude_direct_edge=" << (exclude_direct_edge ? 1 : 0) << " seed=" << seed;
  return out.str();
}

SfeParams SfeParams::parse(std::string_view text) {
  SfeParams p;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw UserError("bad SFE parameter token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "depth") {
        p.depth = std::stoi(value);
      } else if (key == "walks") {
        p.walks = std::stoi(value);
      } else if (key == "max_path_length") {
        p.max_path_length = std::stoul(value);
      } else if (key == "mode") {
        p.mode = parse_walk_mode(value);
      } else if (key == "degree_budget") {
        p.degree_budget = std::stoul(value);
      } else if (key == "exclude_direct_edge") {
        p.exclude_direct_edge = value == "1" || value == "true";
      } else if (key == "seed") {
        p.seed = std::stoull(value);
      } else {
        throw UserError("unknown SFE parameter '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw UserError("bad value for SFE parameter '" + key + "'");
    }
  }
  return p;
}

namespace {

bool is_excluded(EntityId from, const Edge& e, const Triple* excluded) {
  if (excluded == nullptr || e.relation != excluded->relation) return false;
  if (e.direction == Direction::kForward) return from == excluded->head && e.neighbor == excluded->tail;
  return from == excluded->tail && e.neighbor == excluded->head;
}

struct State {
  EntityId node;
  PathType path;
  friend bool operator==(const State&, const State&) = default;
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept {
    return static_cast<std::size_t>(Rng::splitmix(s.path.hash() ^ static_cast<std::uint32_t>(s.node)));
  }
};

void sort_unique(std::vector<PathType>& paths) {
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
}

}  // namespace

std::size_t expansion_size(const Graph& graph, EntityId entity, int depth, std::size_t cap) {
  std::unordered_map<EntityId, std::size_t> level{{entity, 1}};
  std::size_t total = 0;
  for (int d = 0; d < depth; ++d) {
    std::unordered_map<EntityId, std::size_t> next;
    for (const auto& [node, count] : level) {
      const auto edges = graph.neighbors(node);
      total += count * edges.size();
      if (total >= cap) return cap;
      if (d + 1 < depth) {
        for (const Edge& e : edges) next[e.neighbor] += count;
      }
    }
    level = std::move(next);
  }
  return total;
}

Subgraph build_subgraph(const Graph& graph, EntityId entity, const SfeParams& params, Rng& rng,
                        const Triple* excluded) {
  if (params.depth < 1) throw UserError("subgraph depth must be >= 1");
  if (static_cast<std::size_t>(params.depth) > PathType::kMaxSteps) throw UserError("subgraph depth too large");
  Subgraph sub;
  sub.center = entity;
  bool sample = params.mode == WalkMode::kSampled;
  if (params.mode == WalkMode::kAuto) {
    sample = expansion_size(graph, entity, params.depth, params.degree_budget + 1) > params.degree_budget;
  }
  sub.sampled = sample;

  if (sample) {
    std::vector<const Edge*> options;
    for (int w = 0; w < params.walks; ++w) {
      EntityId node = entity;
      PathType path;
      for (int d = 0; d < params.depth; ++d) {
        options.clear();
        for (const Edge& e : graph.neighbors(node)) {
          if (!is_excluded(node, e, excluded)) options.push_back(&e);
        }
        if (options.empty()) break;
        const Edge& e = *options[rng.uniform_index(options.size())];
        path.push_back({e.relation, e.direction});
        node = e.neighbor;
        sub.reach[node].push_back(path);
      }
    }
  } else {
    std::vector<State> level{{entity, PathType{}}};
    for (int d = 0; d < params.depth && !level.empty(); ++d) {
      std::unordered_set<State, StateHash> seen;
      std::vector<State> next;
      for (const State& s : level) {
        for (const Edge& e : graph.neighbors(s.node)) {
          if (is_excluded(s.node, e, excluded)) continue;
          State n{e.neighbor, s.path.extended({e.relation, e.direction})};
          if (seen.insert(n).second) {
            sub.reach[n.node].push_back(n.path);
            next.push_back(n);
          }
        }
      }
      level = std::move(next);
    }
  }
  for (auto& [node, paths] : sub.reach) sort_unique(paths);
  return sub;
}

std::vector<PathType> merge_features(const Subgraph& sub_h, const Subgraph& sub_t, std::size_t max_path_length,
                                     const Triple* exclude) {
  std::vector<PathType> out;
  for (const auto& [node, paths_h] : sub_h.reach) {
    if (node == sub_t.center) {
      for (const PathType& p : paths_h) {
        if (p.length() <= max_path_length) out.push_back(p);
      }
    }
    const auto it = sub_t.reach.find(node);
    if (it == sub_t.reach.end()) continue;
    for (const PathType& ph : paths_h) {
      for (const PathType& pt : it->second) {
        if (ph.length() + pt.length() <= max_path_length) out.push_back(ph.concat(pt.inverse()));
      }
    }
  }
  if (const auto it = sub_t.reach.find(sub_h.center); it != sub_t.reach.end()) {
    for (const PathType& p : it->second) {
      if (p.length() <= max_path_length) out.push_back(p.inverse());
    }
  }
  sort_unique(out);
  if (exclude != nullptr) {
    const PathType direct{{exclude->relation, Direction::kForward}};
    out.erase(std::remove(out.begin(), out.end(), direct), out.end());
  }
  return out;
}

std::int32_t FeatureVocabulary::add(const PathType& p) {
  if (auto it = index_.find(p); it != index_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(paths_.size());
  paths_.push_back(p);
  index_.emplace(p, id);
  return id;
}

std::optional<std::int32_t> FeatureVocabulary::find(const PathType& p) const {
  if (auto it = index_.find(p); it != index_.end()) return it->second;
  return std::nullopt;
}

Subgraph SubgraphCache::build(EntityId entity, const Triple* excluded) const {
  Rng rng = Rng(params_.seed).substream(static_cast<std::uint64_t>(entity));
  return build_subgraph(*graph_, entity, params_, rng, excluded);
}

const Subgraph& SubgraphCache::get(EntityId entity) {
  auto it = cache_.find(entity);
  if (it == cache_.end()) it = cache_.emplace(entity, build(entity, nullptr)).first;
  return it->second;
}

std::vector<PathType> extract_features(const Triple& triple, SubgraphCache& cache) {
  const SfeParams& params = cache.params();
  const Triple* exclude = params.exclude_direct_edge ? &triple : nullptr;
  if (exclude != nullptr && cache.graph().contains(triple)) {
    // The instance's own edge must not be walked, so its endpoints need
    // subgraphs built without it.
    const Subgraph sub_h = cache.build(triple.head, &triple);
    const Subgraph sub_t = triple.tail == triple.head ? sub_h : cache.build(triple.tail, &triple);
    return merge_features(sub_h, sub_t, params.max_path_length, exclude);
  }
  const Subgraph& sub_h = cache.get(triple.head);
  const Subgraph& sub_t = cache.get(triple.tail);
  return merge_features(sub_h, sub_t, params.max_path_length, exclude);
}

FeatureMatrix extract_matrix(const Graph& graph, RelationId relation, std::span<const Triple> instances,
                             const SfeParams& params, const FeatureVocabulary* vocab, SubgraphCache* cache) {
  std::optional<SubgraphCache> local;
  if (cache == nullptr || &cache->graph() != &graph || !(cache->params() == params)) {
    local.emplace(graph, params);
    cache = &*local;
  }
  FeatureMatrix matrix;
  matrix.relation = relation;
  matrix.params = params;
  if (vocab != nullptr) matrix.vocab = *vocab;
  std::unordered_set<Triple, TripleHash> seen;
  matrix.rows.reserve(instances.size());
  for (const Triple& t : instances) {
    if (t.relation != relation) throw Error("instance relation does not match the matrix relation");
    if (!seen.insert(t).second) throw Error("duplicate instance " + graph.describe(t));
    FeatureRow row{t, {}};
    for (const PathType& p : extract_features(t, *cache)) {
      if (vocab != nullptr) {
        if (auto idx = matrix.vocab.find(p)) row.features.push_back(*idx);
      } else {
        row.features.push_back(matrix.vocab.add(p));
      }
    }
    std::sort(row.features.begin(), row.features.end());
    matrix.rows.push_back(std::move(row));
  }
  return matrix;
}

void write_feature_matrix(const FeatureMatrix& matrix, const Graph& graph, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto& relations = graph.relations();
  out << "#relation\t" << relations.name(matrix.relation) << '\n';
  out << "#params\t" << matrix.params.to_string() << '\n';
  out << "#vocab\t" << matrix.vocab.size() << '\n';
  for (std::size_t i = 0; i < matrix.vocab.size(); ++i) {
    out << '#' << i << '\t' << matrix.vocab.path(static_cast<std::int32_t>(i)).to_string(relations) << '\n';
  }
  for (const FeatureRow& row : matrix.rows) {
    out << graph.describe(row.triple) << '\t';
    for (std::size_t i = 0; i < row.features.size(); ++i) {
      if (i > 0) out << ',';
      out << row.features[i] << ":1";
    }
    out << '\n';
  }
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path, Graph& graph) {
  const auto lines = read_lines(path);
  const std::string file = path.string();
  FeatureMatrix matrix;
  std::size_t line_no = 0;
  std::size_t vocab_size = 0;
  bool have_relation = false;
  for (const std::string& line : lines) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (line[0] == '#') {
      if (tab == std::string::npos) throw ParseError(file, line_no, "malformed header line");
      const std::string key = line.substr(1, tab - 1);
      const std::string value = line.substr(tab + 1);
      if (key == "relation") {
        matrix.relation = graph.intern_relation(value);
        have_relation = true;
      } else if (key == "params") {
        matrix.params = SfeParams::parse(value);
      } else if (key == "vocab") {
        vocab_size = std::stoul(value);
      } else {
        if (static_cast<std::size_t>(std::stoul(key)) != matrix.vocab.size()) {
          throw ParseError(file, line_no, "vocabulary entries out of order");
        }
        matrix.vocab.add(PathType::parse(value, graph.relations()));
      }
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (line.back() == '\t') fields.emplace_back();
    if (fields.size() != 4) throw ParseError(file, line_no, "expected 4 tab-separated fields");
    FeatureRow row;
    row.triple = {graph.intern_entity(fields[0]), graph.intern_relation(fields[1]), graph.intern_entity(fields[2])};
    std::stringstream fs(fields[3]);
    std::string item;
    while (std::getline(fs, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ParseError(file, line_no, "feature entry without ':'");
      const auto idx = std::stol(item.substr(0, colon));
      if (idx < 0 || static_cast<std::size_t>(idx) >= vocab_size) {
        throw ParseError(file, line_no, "feature index out of range");
      }
      row.features.push_back(static_cast<std::int32_t>(idx));
    }
    matrix.rows.push_back(std::move(row));
  }
  if (!have_relation) throw ParseError(file, 0, "missing #relation header");
  if (matrix.vocab.size() != vocab_size) throw ParseError(file, 0, "vocabulary size mismatch");
  return matrix;
}

}  // namespace xke
