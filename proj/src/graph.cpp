#include "xke/graph.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "xke/error.hpp"

namespace xke {

std::int32_t Vocabulary::intern(std::string_view name) {
  if (auto it = ids_.find(name); it != ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::int32_t> Vocabulary::find(std::string_view name) const {
  if (auto it = ids_.find(name); it != ids_.end()) return it->second;
  return std::nullopt;
}

Graph::Graph(Vocabulary entities, Vocabulary relations, std::span<const Triple> triples)
    : entities_(std::move(entities)), relations_(std::move(relations)) {
  const auto n_entities = entities_.size();
  by_relation_.resize(relations_.size());
  std::vector<std::size_t> degree(n_entities, 0);
  triples_.reserve(triples.size());
  for (const Triple& t : triples) {
    if (t.head < 0 || t.tail < 0 || static_cast<std::size_t>(t.head) >= n_entities ||
        static_cast<std::size_t>(t.tail) >= n_entities || t.relation < 0 ||
        static_cast<std::size_t>(t.relation) >= relations_.size()) {
      throw Error("triple references an id outside the vocabulary");
    }
    if (!index_.insert(t).second) continue;
    triples_.push_back(t);
    by_relation_[static_cast<std::size_t>(t.relation)].push_back(t);
    ++degree[static_cast<std::size_t>(t.head)];
    ++degree[static_cast<std::size_t>(t.tail)];
    fingerprint_ += Rng::splitmix(TripleHash{}(t));
  }
  offsets_.assign(n_entities + 1, 0);
  for (std::size_t e = 0; e < n_entities; ++e) offsets_[e + 1] = offsets_[e] + degree[e];
  edges_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const Triple& t : triples_) {
    edges_[cursor[static_cast<std::size_t>(t.head)]++] = {t.relation, Direction::kForward, t.tail};
    edges_[cursor[static_cast<std::size_t>(t.tail)]++] = {t.relation, Direction::kInverse, t.head};
  }
}

EntityId Graph::intern_entity(std::string_view name) { return entities_.intern(name); }

RelationId Graph::intern_relation(std::string_view name) {
  const RelationId id = relations_.intern(name);
  if (static_cast<std::size_t>(id) >= by_relation_.size()) by_relation_.resize(static_cast<std::size_t>(id) + 1);
  return id;
}

std::span<const Triple> Graph::triples_of(RelationId relation) const {
  if (relation < 0 || static_cast<std::size_t>(relation) >= by_relation_.size()) return {};
  return by_relation_[static_cast<std::size_t>(relation)];
}

std::span<const Edge> Graph::neighbors(EntityId entity) const {
  const auto e = static_cast<std::size_t>(entity);
  if (entity < 0 || e + 1 >= offsets_.size()) return {};
  return std::span<const Edge>(edges_).subspan(offsets_[e], offsets_[e + 1] - offsets_[e]);
}

std::string Graph::describe(const Triple& t) const {
  return entities_.name(t.head) + "\t" + relations_.name(t.relation) + "\t" + entities_.name(t.tail);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("file not found: " + path.string());
  // gzopen reads uncompressed files transparently.
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string current;
  char buffer[1 << 14];
  while (gzgets(file, buffer, sizeof(buffer)) != nullptr) {
    current.append(buffer);
    if (!current.empty() && current.back() == '\n') {
      current.pop_back();
      if (!current.empty() && current.back() == '\r') current.pop_back();
      lines.push_back(std::move(current));
      current.clear();
    }
  }
  int err = 0;
  gzerror(file, &err);
  gzclose(file);
  if (err != Z_OK && err != Z_STREAM_END) throw IoError("read error in " + path.string());
  if (!current.empty()) {
    if (current.back() == '\r') current.pop_back();
    lines.push_back(std::move(current));
  }
  return lines;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

// Interns every triple of a TSV file into the given tables.
std::vector<Triple> parse_triples(const std::filesystem::path& path, Vocabulary& entities, Vocabulary& relations,
                                  bool require_nonempty) {
  const auto lines = read_lines(path);
  std::vector<Triple> triples;
  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(path.string(), line_no, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    Triple t;
    t.head = entities.intern(fields[0]);
    t.relation = relations.intern(fields[1]);
    t.tail = entities.intern(fields[2]);
    triples.push_back(t);
  }
  if (require_nonempty && triples.empty()) throw ParseError(path.string(), 0, "no triples in file");
  return triples;
}

void intern_extra(const std::filesystem::path& path, Vocabulary& entities, Vocabulary& relations) {
  const auto lines = read_lines(path);
  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError(path.string(), line_no, "expected 3 or 4 tab-separated fields");
    }
    entities.intern(fields[0]);
    relations.intern(fields[1]);
    entities.intern(fields[2]);
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

Graph load_graph(const std::filesystem::path& triples_path, std::span<const std::filesystem::path> extra_vocab_paths) {
  Vocabulary entities, relations;
  auto triples = parse_triples(triples_path, entities, relations, true);
  for (const auto& extra : extra_vocab_paths) intern_extra(extra, entities, relations);
  return Graph(std::move(entities), std::move(relations), triples);
}

Graph load_graph_like(const std::filesystem::path& triples_path, const Graph& base) {
  Vocabulary entities = base.entities();
  Vocabulary relations = base.relations();
  auto triples = parse_triples(triples_path, entities, relations, false);
  return Graph(std::move(entities), std::move(relations), triples);
}

std::vector<LabeledTriple> load_labeled(const std::filesystem::path& path, Graph& graph) {
  const auto lines = read_lines(path);
  std::vector<LabeledTriple> rows;
  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw ParseError(path.string(), line_no, "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    int label;
    if (fields[3] == "1") {
      label = 1;
    } else if (fields[3] == "-1" || fields[3] == "0") {
      label = 0;
    } else {
      throw ParseError(path.string(), line_no, "unknown label token '" + std::string(fields[3]) + "'");
    }
    Triple t;
    t.head = graph.intern_entity(fields[0]);
    t.relation = graph.intern_relation(fields[1]);
    t.tail = graph.intern_entity(fields[2]);
    rows.push_back({t, label});
  }
  return rows;
}

std::vector<Triple> load_triples(const std::filesystem::path& path, Graph& graph) {
  const auto lines = read_lines(path);
  std::vector<Triple> out;
  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError(path.string(), line_no, "expected 3 or 4 tab-separated fields");
    }
    out.push_back({graph.intern_entity(fields[0]), graph.intern_relation(fields[1]), graph.intern_entity(fields[2])});
  }
  return out;
}

void write_tsv(const Graph& graph, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (const Triple& t : graph.triples()) out << graph.describe(t) << '\n';
}

void write_labeled(const Graph& graph, std::span<const LabeledTriple> rows, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (const auto& row : rows) out << graph.describe(row.triple) << '\t' << (row.label == 1 ? "1" : "-1") << '\n';
}

RelationStats relation_stats(const Graph& graph, RelationId relation) {
  const auto triples = graph.triples_of(relation);
  if (triples.empty()) throw Error("relation has no triples: id " + std::to_string(relation));
  std::unordered_set<EntityId> heads, tails;
  for (const Triple& t : triples) {
    heads.insert(t.head);
    tails.insert(t.tail);
  }
  const auto n = static_cast<double>(triples.size());
  return {n / static_cast<double>(heads.size()), n / static_cast<double>(tails.size())};
}

Triple corrupt_bernoulli(const Graph& graph, const Triple& triple, const RelationStats& stats, Rng& rng) {
  const auto n = graph.num_entities();
  if (n < 2) throw Error("cannot corrupt: graph has fewer than two entities");
  const double p_head = stats.tph / (stats.tph + stats.hpt);
  for (int attempt = 0; attempt < kCorruptionRetries; ++attempt) {
    Triple candidate = triple;
    const bool replace_head = rng.bernoulli(p_head);
    const auto e = static_cast<EntityId>(rng.uniform_index(n));
    if (replace_head) {
      if (e == triple.head) continue;
      candidate.head = e;
    } else {
      if (e == triple.tail) continue;
      candidate.tail = e;
    }
    if (!graph.contains(candidate)) return candidate;
  }
  throw Error("corruption failed after " + std::to_string(kCorruptionRetries) + " retries for " +
              graph.describe(triple));
}

}  // namespace xke
