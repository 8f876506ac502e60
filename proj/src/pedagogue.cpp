#include "xke/pedagogue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "xke/error.hpp"

namespace xke {

using json = nlohmann::json;

std::string to_string(Variant v) { return v == Variant::kTrue ? "true" : "pred"; }

Variant parse_variant(std::string_view text) {
  if (text == "true" || text == "TRUE") return Variant::kTrue;
  if (text == "pred" || text == "PRED") return Variant::kPred;
  throw UserError("unknown XKE variant '" + std::string(text) + "' (expected true or pred)");
}

PredictedGraph build_predicted_graph(const Graph& graph, const TransEModel& model, const PredictedGraphSpec& spec) {
  if (spec.k < 1) throw UserError("k must be >= 1");
  if (!model.has_thresholds()) throw Error("model has no thresholds; select them before building the predicted graph");
  PredictedGraph out;
  out.stats.seeds = spec.seeds.size();
  std::unordered_map<EntityId, std::vector<EntityId>> neighbours;
  auto nearest = [&](EntityId e) -> const std::vector<EntityId>& {
    auto it = neighbours.find(e);
    if (it == neighbours.end()) it = neighbours.emplace(e, knn(model, e, spec.k)).first;
    return it->second;
  };
  std::unordered_set<Triple, TripleHash> classified;
  std::vector<Triple> accepted;
  for (const Triple& seed : spec.seeds) {
    if (model.classify(seed) != 1) continue;
    ++out.stats.positive_seeds;
    const auto heads = nearest(seed.head);
    const auto& tails = nearest(seed.tail);
    for (EntityId h : heads) {
      for (EntityId t : tails) {
        const Triple candidate{h, seed.relation, t};
        if (!classified.insert(candidate).second) continue;
        if (model.classify(candidate) == 1) accepted.push_back(candidate);
      }
    }
  }
  out.stats.candidates = classified.size();
  out.stats.positives = accepted.size();
  out.stats.positive_ratio = classified.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                : static_cast<double>(accepted.size()) /
                                                      static_cast<double>(classified.size());
  out.graph = Graph(graph.entities(), graph.relations(), accepted);
  return out;
}

std::vector<Triple> build_instances(const Graph& truth, std::span<const Triple> positives, int neg_ratio, Rng& rng) {
  if (neg_ratio < 0) throw UserError("negative ratio must be >= 0");
  std::vector<Triple> instances;
  instances.reserve(positives.size() * static_cast<std::size_t>(neg_ratio + 1));
  std::unordered_set<Triple, TripleHash> seen(positives.begin(), positives.end());
  std::unordered_map<RelationId, RelationStats> stats;
  for (const Triple& p : positives) {
    instances.push_back(p);
    auto it = stats.find(p.relation);
    if (it == stats.end()) it = stats.emplace(p.relation, relation_stats(truth, p.relation)).first;
    for (int i = 0; i < neg_ratio; ++i) {
      Triple neg;
      int attempt = 0;
      do {
        if (++attempt > kCorruptionRetries) {
          throw Error("could not draw a fresh negative for " + truth.describe(p));
        }
        neg = corrupt_bernoulli(truth, p, it->second, rng);
      } while (!seen.insert(neg).second);
      instances.push_back(neg);
    }
  }
  return instances;
}

PedagogicalDataset make_dataset(Variant variant, const Graph& feature_graph, const TransEModel& model,
                                RelationId relation, std::span<const Triple> instances, const SfeParams& params,
                                SubgraphCache* cache) {
  PedagogicalDataset ds;
  ds.source = variant;
  ds.matrix = extract_matrix(feature_graph, relation, instances, params, nullptr, cache);
  ds.labels.reserve(instances.size());
  for (const Triple& t : instances) ds.labels.push_back(model.classify(t));
  return ds;
}

PedagogicalDataset make_dataset(Variant variant, const Graph& feature_graph, const Graph& truth,
                                const TransEModel& model, RelationId relation, std::span<const Triple> positives,
                                int neg_ratio, const SfeParams& params, Rng& rng) {
  const auto instances = build_instances(truth, positives, neg_ratio, rng);
  return make_dataset(variant, feature_graph, model, relation, instances, params);
}

double Explainer::score(std::span<const std::int32_t> active) const {
  return logreg::predict_proba(weights, bias, active);
}

std::size_t Explainer::rule_count() const {
  return static_cast<std::size_t>(
      std::count_if(weights.begin(), weights.end(), [](double w) { return std::abs(w) > kRuleWeightEpsilon; }));
}

std::size_t Explainer::positive_rule_count() const {
  return static_cast<std::size_t>(
      std::count_if(weights.begin(), weights.end(), [](double w) { return w > kRuleWeightEpsilon; }));
}

Explainer constant_explainer(RelationId relation, double positive_rate) {
  const double p = std::clamp(positive_rate, 1e-6, 1.0 - 1e-6);
  Explainer e;
  e.relation = relation;
  e.bias = std::log(p / (1.0 - p));
  e.constant = true;
  return e;
}

Explainer train_explainer(const PedagogicalDataset& dataset, const logreg::FitConfig& config) {
  const auto& rows = dataset.matrix.rows;
  if (rows.empty()) throw Error("cannot train an explainer on an empty dataset");
  if (dataset.labels.size() != rows.size()) throw Error("label column does not match the feature rows");
  const auto positives = static_cast<std::size_t>(std::count(dataset.labels.begin(), dataset.labels.end(), 1));
  if (positives == 0 || positives == rows.size()) {
    // Smoothed rate keeps the bias finite.
    const double rate = (static_cast<double>(positives) + 0.5) / (static_cast<double>(rows.size()) + 1.0);
    Explainer e = constant_explainer(dataset.matrix.relation, rate);
    e.vocab = dataset.matrix.vocab;
    e.weights.assign(e.vocab.size(), 0.0);
    return e;
  }
  logreg::SparseDesign design(dataset.matrix.vocab.size());
  for (std::size_t i = 0; i < rows.size(); ++i) design.add_row(rows[i].features, dataset.labels[i]);
  auto fitted = logreg::fit(design, config);
  Explainer e;
  e.relation = dataset.matrix.relation;
  e.vocab = dataset.matrix.vocab;
  e.weights = std::move(fitted.model.weights);
  e.bias = fitted.model.bias;
  e.converged = fitted.converged;
  return e;
}

Explanation explain(const Explainer& explainer, const Triple& triple, SubgraphCache& features,
                    const TransEModel& model) {
  Explanation out;
  out.triple = triple;
  out.bias = explainer.bias;
  out.black_box_label = model.classify(triple);
  std::vector<std::int32_t> active;
  for (const PathType& p : extract_features(triple, features)) {
    if (auto idx = explainer.vocab.find(p)) active.push_back(*idx);
  }
  std::sort(active.begin(), active.end());
  out.n_features = active.size();
  out.score = explainer.score(active);
  std::vector<std::int32_t> rules;
  for (std::int32_t j : active) {
    if (std::abs(explainer.weights[static_cast<std::size_t>(j)]) > kRuleWeightEpsilon) rules.push_back(j);
  }
  // Equal weights (e.g. a path and its same-edge detours) rank the shorter path first.
  std::sort(rules.begin(), rules.end(), [&](std::int32_t a, std::int32_t b) {
    const double wa = std::abs(explainer.weights[static_cast<std::size_t>(a)]);
    const double wb = std::abs(explainer.weights[static_cast<std::size_t>(b)]);
    if (wa != wb) return wa > wb;
    return explainer.vocab.path(a) < explainer.vocab.path(b);
  });
  for (std::int32_t j : rules) out.reasons.push_back({explainer.vocab.path(j), explainer.weights[static_cast<std::size_t>(j)]});
  return out;
}

Explanation explain(const Explainer& explainer, const Triple& triple, const Graph& feature_graph,
                    const SfeParams& params, const TransEModel& model) {
  SubgraphCache cache(feature_graph, params);
  return explain(explainer, triple, cache, model);
}

ExplainerSet::ExplainerSet(Variant variant, SfeParams params, double fallback_positive_rate)
    : variant_(variant),
      params_(params),
      fallback_rate_(fallback_positive_rate),
      fallback_(constant_explainer(-1, fallback_positive_rate)) {}

void ExplainerSet::add(Explainer e) {
  if (e.relation < 0) throw Error("explainer without a relation");
  const auto r = static_cast<std::size_t>(e.relation);
  if (r >= slot_.size()) slot_.resize(r + 1, -1);
  if (slot_[r] >= 0) {
    explainers_[static_cast<std::size_t>(slot_[r])] = std::move(e);
    return;
  }
  slot_[r] = static_cast<std::int32_t>(explainers_.size());
  explainers_.push_back(std::move(e));
}

bool ExplainerSet::has(RelationId relation) const {
  return relation >= 0 && static_cast<std::size_t>(relation) < slot_.size() &&
         slot_[static_cast<std::size_t>(relation)] >= 0;
}

const Explainer& ExplainerSet::get(RelationId relation, bool* fallback) const {
  const bool found = has(relation);
  if (fallback != nullptr) *fallback = !found;
  if (!found) return fallback_;
  return explainers_[static_cast<std::size_t>(slot_[static_cast<std::size_t>(relation)])];
}

void ExplainerSet::save(const std::filesystem::path& path, const Graph& graph) const {
  json j;
  j["format"] = "xke-explainers/1";
  j["variant"] = to_string(variant_);
  j["sfe_params"] = params_.to_string();
  j["fallback_positive_rate"] = fallback_rate_;
  j["explainers"] = json::array();
  for (const Explainer& e : explainers_) {
    json vocab = json::array();
    for (const PathType& p : e.vocab.paths()) vocab.push_back(p.to_string(graph.relations()));
    j["explainers"].push_back({{"relation", graph.relations().name(e.relation)},
                               {"bias", e.bias},
                               {"constant", e.constant},
                               {"converged", e.converged},
                               {"vocab", vocab},
                               {"weights", e.weights}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

ExplainerSet ExplainerSet::load(const std::filesystem::path& path, Graph& graph) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open explainer file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UserError("invalid explainer file " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "xke-explainers/1") throw UserError("not an explainer file: " + path.string());
  ExplainerSet set(parse_variant(j.at("variant").get<std::string>()),
                   SfeParams::parse(j.at("sfe_params").get<std::string>()),
                   j.at("fallback_positive_rate").get<double>());
  for (const auto& je : j.at("explainers")) {
    Explainer e;
    e.relation = graph.intern_relation(je.at("relation").get<std::string>());
    e.bias = je.at("bias").get<double>();
    e.constant = je.at("constant").get<bool>();
    e.converged = je.at("converged").get<bool>();
    for (const auto& p : je.at("vocab")) e.vocab.add(PathType::parse(p.get<std::string>(), graph.relations()));
    e.weights = je.at("weights").get<std::vector<double>>();
    if (e.weights.size() != e.vocab.size()) throw UserError("explainer weights do not match its vocabulary");
    set.add(std::move(e));
  }
  return set;
}

std::string format_rule(const PathType& path, const Vocabulary& relations) {
  std::string out;
  for (std::size_t i = 0; i < path.length(); ++i) {
    if (i > 0) out += ", ";
    const PathStep s = path.step(i);
    out += relations.name(s.relation);
    if (s.direction == Direction::kInverse) out += kInverseMark;
  }
  return out;
}

std::string explanation_json_line(const Explanation& e, const Graph& graph) {
  json j;
  j["head"] = graph.entities().name(e.triple.head);
  j["relation"] = graph.relations().name(e.triple.relation);
  j["tail"] = graph.entities().name(e.triple.tail);
  j["black_box_label"] = e.black_box_label;
  j["xke_score"] = e.score;
  j["bias"] = e.bias;
  j["reasons"] = json::array();
  for (const Reason& r : e.reasons) {
    j["reasons"].push_back({{"path", r.path.to_string(graph.relations())}, {"weight", r.weight}});
  }
  return j.dump();
}

namespace {
std::string fixed(double v, int digits) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}
}  // namespace

std::string explanation_table(const Explanation& e, const Graph& graph) {
  std::ostringstream out;
  auto row = [&](const std::string& name, const std::string& value) {
    out << name << std::string(name.size() < 12 ? 12 - name.size() : 1, ' ') << value << '\n';
  };
  row("Head", graph.entities().name(e.triple.head));
  row("Relation", graph.relations().name(e.triple.relation));
  row("Tail", graph.entities().name(e.triple.tail));
  if (e.reasons.empty()) row("Reason #1", "-");
  for (std::size_t i = 0; i < e.reasons.size(); ++i) {
    row("Reason #" + std::to_string(i + 1),
        "(" + fixed(e.reasons[i].weight, 3) + ") " + format_rule(e.reasons[i].path, graph.relations()));
  }
  row("Bias", "(" + fixed(e.bias, 3) + ")");
  row("XKE", fixed(e.score, 6));
  row("Embedding", std::to_string(e.black_box_label));
  return out.str();
}

}  // namespace xke
