#include "xke/transe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "xke/error.hpp"

namespace xke {

using json = nlohmann::json;

std::string to_string(Norm norm) { return norm == Norm::kL1 ? "L1" : "L2"; }

Norm parse_norm(std::string_view text) {
  if (text == "L1" || text == "l1" || text == "1") return Norm::kL1;
  if (text == "L2" || text == "l2" || text == "2") return Norm::kL2;
  throw UserError("unknown norm '" + std::string(text) + "' (expected L1 or L2)");
}

TransEModel::TransEModel(std::size_t n_entities, std::size_t n_relations, int dim, Norm norm)
    : n_entities_(n_entities),
      n_relations_(n_relations),
      dim_(dim),
      norm_(norm),
      entity_vecs_(n_entities * static_cast<std::size_t>(dim), 0.0),
      relation_vecs_(n_relations * static_cast<std::size_t>(dim), 0.0) {}

double TransEModel::score(const Triple& t) const {
  const auto h = entity(t.head);
  const auto r = relation(t.relation);
  const auto e = entity(t.tail);
  double acc = 0.0;
  if (norm_ == Norm::kL1) {
    for (int i = 0; i < dim_; ++i) acc += std::abs(h[i] + r[i] - e[i]);
    return acc;
  }
  for (int i = 0; i < dim_; ++i) {
    const double v = h[i] + r[i] - e[i];
    acc += v * v;
  }
  return std::sqrt(acc);
}

int TransEModel::classify(const Triple& t) const {
  if (t.relation < 0 || static_cast<std::size_t>(t.relation) >= thresholds_.size()) {
    throw Error("no threshold for relation id " + std::to_string(t.relation));
  }
  return score(t) < thresholds_[static_cast<std::size_t>(t.relation)] ? 1 : 0;
}

void TransEModel::normalize_entities() {
  for (std::size_t e = 0; e < n_entities_; ++e) {
    auto row = entity(static_cast<EntityId>(e));
    double sq = 0.0;
    for (double v : row) sq += v * v;
    const double n = std::sqrt(sq);
    if (n > 0.0) {
      for (double& v : row) v /= n;
    }
  }
}

void TransEModel::save(const std::filesystem::path& path) const {
  json j;
  j["format"] = "xke-transe/1";
  j["dim"] = dim_;
  j["norm"] = to_string(norm_);
  j["n_entities"] = n_entities_;
  j["n_relations"] = n_relations_;
  j["entity_vecs"] = entity_vecs_;
  j["relation_vecs"] = relation_vecs_;
  j["thresholds"] = thresholds_;
  j["config"] = {{"dim", config_.dim},
                 {"margin", config_.margin},
                 {"learning_rate", config_.learning_rate},
                 {"norm", to_string(config_.norm)},
                 {"epochs", config_.epochs},
                 {"batch_size", config_.batch_size},
                 {"seed", config_.seed}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
}

TransEModel TransEModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UserError("invalid model file " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "xke-transe/1") throw UserError("not a TransE model file: " + path.string());
  TransEModel m(j.at("n_entities").get<std::size_t>(), j.at("n_relations").get<std::size_t>(), j.at("dim").get<int>(),
                parse_norm(j.at("norm").get<std::string>()));
  m.entity_vecs_ = j.at("entity_vecs").get<std::vector<double>>();
  m.relation_vecs_ = j.at("relation_vecs").get<std::vector<double>>();
  m.thresholds_ = j.at("thresholds").get<std::vector<double>>();
  if (m.entity_vecs_.size() != m.n_entities_ * static_cast<std::size_t>(m.dim_) ||
      m.relation_vecs_.size() != m.n_relations_ * static_cast<std::size_t>(m.dim_)) {
    throw UserError("model file has inconsistent table sizes: " + path.string());
  }
  const auto& c = j.at("config");
  m.config_.dim = c.at("dim").get<int>();
  m.config_.margin = c.at("margin").get<double>();
  m.config_.learning_rate = c.at("learning_rate").get<double>();
  m.config_.norm = parse_norm(c.at("norm").get<std::string>());
  m.config_.epochs = c.at("epochs").get<int>();
  m.config_.batch_size = c.at("batch_size").get<int>();
  m.config_.seed = c.at("seed").get<std::uint64_t>();
  return m;
}

TransEModel init_model(const Graph& graph, const TrainConfig& config) {
  if (config.dim < 1) throw UserError("embedding dimension must be >= 1");
  TransEModel model(graph.num_entities(), graph.num_relations(), config.dim, config.norm);
  model.set_config(config);
  Rng rng = Rng(config.seed).substream("init");
  const double bound = 6.0 / std::sqrt(static_cast<double>(config.dim));
  for (double& v : model.entity_data()) v = rng.uniform(-bound, bound);
  for (double& v : model.relation_data()) v = rng.uniform(-bound, bound);
  // Relation rows are normalized once here, as in the original TransE recipe.
  const auto d = static_cast<std::size_t>(config.dim);
  auto& rel = model.relation_data();
  for (std::size_t r = 0; r < graph.num_relations(); ++r) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) sq += rel[r * d + k] * rel[r * d + k];
    const double n = std::sqrt(sq);
    if (n > 0.0) {
      for (std::size_t k = 0; k < d; ++k) rel[r * d + k] /= n;
    }
  }
  model.normalize_entities();
  return model;
}

namespace {

// d||v|| / dv for the model's norm.
void norm_gradient(Norm norm, std::span<const double> v, std::span<double> out) {
  if (norm == Norm::kL1) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0 ? 1.0 : (v[i] < 0 ? -1.0 : 0.0);
    return;
  }
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double n = std::sqrt(sq);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = n > 0 ? v[i] / n : 0.0;
}

void translation(const TransEModel& m, const Triple& t, std::span<double> out) {
  const auto h = m.entity(t.head);
  const auto r = m.relation(t.relation);
  const auto e = m.entity(t.tail);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = h[i] + r[i] - e[i];
}

// Accumulates sign * g into the row's gradient.
void accumulate(std::vector<ParameterGradient>& grads, bool is_entity, std::int32_t id, std::span<const double> g,
                double sign) {
  auto it = std::find_if(grads.begin(), grads.end(),
                         [&](const ParameterGradient& p) { return p.is_entity == is_entity && p.id == id; });
  if (it == grads.end()) {
    grads.push_back({is_entity, id, std::vector<double>(g.size(), 0.0)});
    it = grads.end() - 1;
  }
  for (std::size_t i = 0; i < g.size(); ++i) it->grad[i] += sign * g[i];
}

}  // namespace

double hinge_loss(const TransEModel& model, const Triple& positive, const Triple& negative, double margin) {
  return std::max(0.0, margin + model.score(positive) - model.score(negative));
}

std::vector<ParameterGradient> hinge_gradient(const TransEModel& model, const Triple& positive, const Triple& negative,
                                              double margin) {
  std::vector<ParameterGradient> grads;
  if (hinge_loss(model, positive, negative, margin) <= 0.0) return grads;
  const auto d = static_cast<std::size_t>(model.dim());
  std::vector<double> v(d), g(d);
  translation(model, positive, v);
  norm_gradient(model.norm(), v, g);
  accumulate(grads, true, positive.head, g, 1.0);
  accumulate(grads, false, positive.relation, g, 1.0);
  accumulate(grads, true, positive.tail, g, -1.0);
  translation(model, negative, v);
  norm_gradient(model.norm(), v, g);
  accumulate(grads, true, negative.head, g, -1.0);
  accumulate(grads, false, negative.relation, g, -1.0);
  accumulate(grads, true, negative.tail, g, 1.0);
  return grads;
}

TrainResult train(const Graph& graph, const TrainConfig& config) {
  if (graph.empty()) throw UserError("cannot train on an empty graph");
  if (config.margin <= 0) throw UserError("margin must be > 0");
  if (config.learning_rate <= 0) throw UserError("learning rate must be > 0");
  if (config.epochs < 0 || config.epochs > 1000) throw UserError("epochs must be in [0, 1000]");
  if (config.batch_size < 1) throw UserError("batch size must be >= 1");

  TrainResult result{init_model(graph, config), {}};
  TransEModel& model = result.model;
  const Rng root(config.seed);
  Rng order_rng = root.substream("train");
  Rng corrupt_rng = root.substream("corrupt");

  std::vector<RelationStats> stats(graph.num_relations());
  for (std::size_t r = 0; r < stats.size(); ++r) {
    if (!graph.triples_of(static_cast<RelationId>(r)).empty()) {
      stats[r] = relation_stats(graph, static_cast<RelationId>(r));
    }
  }

  const auto triples = graph.triples();
  std::vector<std::size_t> order(triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto d = static_cast<std::size_t>(config.dim);
  std::vector<double> entity_grad(model.entity_data().size(), 0.0);
  std::vector<double> relation_grad(model.relation_data().size(), 0.0);
  std::vector<char> entity_touched(model.num_entities(), 0), relation_touched(model.num_relations(), 0);
  std::vector<EntityId> touched_entities;
  std::vector<RelationId> touched_relations;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      for (std::size_t i = start; i < end; ++i) {
        const Triple& pos = triples[order[i]];
        const Triple neg = corrupt_bernoulli(graph, pos, stats[static_cast<std::size_t>(pos.relation)], corrupt_rng);
        epoch_loss += hinge_loss(model, pos, neg, config.margin);
        for (const auto& pg : hinge_gradient(model, pos, neg, config.margin)) {
          const auto row = static_cast<std::size_t>(pg.id);
          double* dst = pg.is_entity ? &entity_grad[row * d] : &relation_grad[row * d];
          for (std::size_t k = 0; k < d; ++k) dst[k] += pg.grad[k];
          if (pg.is_entity && !entity_touched[row]) {
            entity_touched[row] = 1;
            touched_entities.push_back(pg.id);
          } else if (!pg.is_entity && !relation_touched[row]) {
            relation_touched[row] = 1;
            touched_relations.push_back(pg.id);
          }
        }
      }
      for (EntityId e : touched_entities) {
        auto row = model.entity(e);
        double* g = &entity_grad[static_cast<std::size_t>(e) * d];
        for (std::size_t k = 0; k < d; ++k) {
          row[k] -= config.learning_rate * g[k];
          g[k] = 0.0;
        }
        entity_touched[static_cast<std::size_t>(e)] = 0;
      }
      for (RelationId r : touched_relations) {
        auto row = model.relation(r);
        double* g = &relation_grad[static_cast<std::size_t>(r) * d];
        for (std::size_t k = 0; k < d; ++k) {
          row[k] -= config.learning_rate * g[k];
          g[k] = 0.0;
        }
        relation_touched[static_cast<std::size_t>(r)] = 0;
      }
      touched_entities.clear();
      touched_relations.clear();
    }
    const double mean_loss = epoch_loss / static_cast<double>(order.size());
    const auto finite = [](std::span<const double> v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!std::isfinite(mean_loss) || !finite(model.entity_data()) || !finite(model.relation_data())) {
      throw Error("training diverged at epoch " + std::to_string(epoch));
    }
    model.normalize_entities();
    result.epoch_loss.push_back(mean_loss);
  }
  return result;
}

std::pair<double, double> best_threshold(std::vector<std::pair<double, int>> scored) {
  if (scored.empty()) throw Error("cannot pick a threshold from zero examples");
  for (const auto& s : scored) {
    if (!std::isfinite(s.first)) throw Error("cannot pick a threshold from a non-finite score");
  }
  std::sort(scored.begin(), scored.end());
  const auto n = scored.size();
  std::size_t negatives = 0;
  for (const auto& s : scored) negatives += s.second == 0 ? 1 : 0;

  // Candidate below every score: everything classified 0.
  std::size_t correct = negatives;
  double best_theta = scored.front().first - kThresholdEpsilon;
  std::size_t best_correct = correct;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scored[j].first == scored[i].first) {
      correct += scored[j].second == 1 ? 1 : 0;
      correct -= scored[j].second == 0 ? 1 : 0;
      ++j;
    }
    const double theta = j < n ? 0.5 * (scored[i].first + scored[j].first) : scored[i].first + kThresholdEpsilon;
    if (correct > best_correct) {
      best_correct = correct;
      best_theta = theta;
    }
    i = j;
  }
  return {best_theta, static_cast<double>(best_correct) / static_cast<double>(n)};
}

ThresholdResult select_thresholds(const TransEModel& model, std::span<const LabeledTriple> valid) {
  if (valid.empty()) throw UserError("validation set is empty");
  std::vector<std::vector<std::pair<double, int>>> per_relation(model.num_relations());
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(valid.size());
  for (const auto& ex : valid) {
    const Triple& t = ex.triple;
    if (t.relation < 0 || static_cast<std::size_t>(t.relation) >= model.num_relations() || t.head < 0 ||
        static_cast<std::size_t>(t.head) >= model.num_entities() || t.tail < 0 ||
        static_cast<std::size_t>(t.tail) >= model.num_entities()) {
      throw Error("validation triple outside the model's id range");
    }
    const double s = model.score(t);
    per_relation[static_cast<std::size_t>(t.relation)].emplace_back(s, ex.label);
    pooled.emplace_back(s, ex.label);
  }
  ThresholdResult result;
  result.global_threshold = best_threshold(pooled).first;
  result.thresholds.assign(model.num_relations(), result.global_threshold);
  result.relation_accuracy.assign(model.num_relations(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < per_relation.size(); ++r) {
    if (per_relation[r].empty()) continue;
    const auto [theta, acc] = best_threshold(std::move(per_relation[r]));
    result.thresholds[r] = theta;
    result.relation_accuracy[r] = acc;
  }
  return result;
}

double classification_accuracy(const TransEModel& model, std::span<const LabeledTriple> examples) {
  if (examples.empty()) throw Error("accuracy of an empty example set");
  std::size_t correct = 0;
  for (const auto& ex : examples) correct += model.classify(ex.triple) == ex.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<EntityId> knn(const TransEModel& model, EntityId entity, int k) {
  const auto n = model.num_entities();
  if (k < 1) throw UserError("k must be >= 1");
  if (static_cast<std::size_t>(k) > n) throw UserError("k exceeds the number of entities");
  std::vector<EntityId> result{entity};
  if (k == 1) return result;
  const auto self = model.entity(entity);
  std::vector<std::pair<double, EntityId>> dist;
  dist.reserve(n - 1);
  for (std::size_t e = 0; e < n; ++e) {
    if (static_cast<EntityId>(e) == entity) continue;
    const auto other = model.entity(static_cast<EntityId>(e));
    double sq = 0.0;
    for (std::size_t i = 0; i < self.size(); ++i) {
      const double diff = self[i] - other[i];
      sq += diff * diff;
    }
    dist.emplace_back(sq, static_cast<EntityId>(e));
  }
  const auto take = static_cast<std::size_t>(k - 1);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
  for (std::size_t i = 0; i < take; ++i) result.push_back(dist[i].second);
  return result;
}

GridSearchResult grid_search(const Graph& graph, std::span<const LabeledTriple> valid,
                             std::span<const TrainConfig> grid) {
  if (grid.empty()) throw UserError("grid search needs at least one configuration");
  GridSearchResult best;
  bool found = false;
  std::string last_error;
  for (const TrainConfig& config : grid) {
    try {
      auto trained = train(graph, config);
      auto thresholds = select_thresholds(trained.model, valid);
      trained.model.set_thresholds(std::move(thresholds.thresholds));
      const double acc = classification_accuracy(trained.model, valid);
      best.accuracies.push_back(acc);
      if (!found || acc > best.validation_accuracy) {
        found = true;
        best.model = std::move(trained.model);
        best.config = config;
        best.validation_accuracy = acc;
      }
    } catch (const Error& e) {
      last_error = e.what();
      best.accuracies.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  if (!found) throw Error("every grid configuration failed; last error: " + last_error);
  return best;
}

std::vector<TrainConfig> default_grid(const TrainConfig& base) {
  std::vector<TrainConfig> grid;
  for (int dim : {20, 50, 100}) {
    for (double margin : {1.0, 5.0}) {
      for (double lr : {0.01, 0.001}) {
        for (Norm norm : {Norm::kL1, Norm::kL2}) {
          TrainConfig c = base;
          c.dim = dim;
          c.margin = margin;
          c.learning_rate = lr;
          c.norm = norm;
          grid.push_back(c);
        }
      }
    }
  }
  return grid;
}

}  // namespace xke
