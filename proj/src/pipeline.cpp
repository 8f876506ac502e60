#include "xke/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "xke/error.hpp"

namespace xke {

using json = nlohmann::json;

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) {
    try {
      out.push_back(parse(item));
    } catch (const std::logic_error&) {
      throw UserError("bad value '" + item + "' for key '" + key + "'");
    }
  }
  if (out.empty()) throw UserError("empty value for key '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw UserError("bad boolean '" + v + "' for key '" + key + "'");
}

template <typename T, typename Parse>
T parse_one(const std::string& key, const std::string& value, Parse parse) {
  auto values = parse_list<T>(key, value, parse);
  if (values.size() != 1) throw UserError("key '" + key + "' takes a single value");
  return values.front();
}

// `head <= body1 body2 ... | noise`
synth::RuleSpec parse_rule(const std::string& text) {
  const auto arrow = text.find("<=");
  if (arrow == std::string::npos) throw UserError("rule '" + text + "' lacks '<='");
  synth::RuleSpec rule;
  rule.head = trim(text.substr(0, arrow));
  std::string rest = text.substr(arrow + 2);
  if (const auto bar = rest.find('|'); bar != std::string::npos) {
    try {
      rule.noise = std::stod(trim(rest.substr(bar + 1)));
    } catch (const std::logic_error&) {
      throw UserError("bad noise in rule '" + text + "'");
    }
    rest = rest.substr(0, bar);
  }
  std::istringstream in(rest);
  std::string token;
  while (in >> token) rule.body.push_back(token);
  if (rule.head.empty() || rule.body.empty()) throw UserError("rule '" + text + "' is incomplete");
  return rule;
}

// Runs fn(index, worker) for index in [0, n) on up to `threads` workers.
// Results must be written to per-index slots for determinism.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, int)>& fn) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i, w);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("file not found: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UserError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

TransEModel load_model_for(const PipelineConfig& config, const Graph& graph) {
  TransEModel model = TransEModel::load(paths::model(config));
  if (model.num_entities() != graph.num_entities() || model.num_relations() != graph.num_relations()) {
    throw UserError("model " + paths::model(config).string() + " does not match the dataset vocabulary");
  }
  if (!model.has_thresholds()) throw UserError("model has no thresholds");
  return model;
}

Graph load_feature_graph(const PipelineConfig& config, const Graph& truth, Variant variant) {
  if (variant == Variant::kTrue) return truth;
  return load_graph_like(paths::pred_graph(config), truth);
}

std::string tag_of(Variant v) { return to_string(v); }

// Training positives of one relation, optionally capped by a seeded sample.
std::vector<Triple> positives_for(const PipelineConfig& config, const Graph& graph, RelationId r) {
  const auto all = graph.triples_of(r);
  std::vector<Triple> positives(all.begin(), all.end());
  if (config.max_positives > 0 && positives.size() > config.max_positives) {
    Rng rng = Rng(Rng::mix(config.seed, "sample")).substream(static_cast<std::uint64_t>(r));
    rng.shuffle(positives);
    positives.resize(config.max_positives);
  }
  return positives;
}

struct RelationFiles {
  std::string relation;
  std::string features;
  std::string labels;
};

// Extracts features for every relation into features_dir(tag). `label_of`
// supplies the label of instance i of a relation given its triple.
std::size_t write_feature_sets(const PipelineConfig& config, const Graph& truth, const Graph& feature_graph,
                               const std::string& tag,
                               const std::function<int(const Triple&, bool is_positive)>& label_of) {
  std::vector<RelationId> relations;
  for (std::size_t r = 0; r < truth.num_relations(); ++r) {
    if (!truth.triples_of(static_cast<RelationId>(r)).empty()) relations.push_back(static_cast<RelationId>(r));
  }
  const auto dir = paths::features_dir(config, tag);
  std::filesystem::create_directories(dir);
  std::vector<RelationFiles> files(relations.size());
  std::vector<std::unique_ptr<SubgraphCache>> caches;
  for (int w = 0; w < std::max(1, config.threads); ++w) {
    caches.push_back(std::make_unique<SubgraphCache>(feature_graph, config.sfe));
  }
  parallel_for(relations.size(), config.threads, [&](std::size_t i, int worker) {
    const RelationId r = relations[i];
    const auto positives = positives_for(config, truth, r);
    Rng rng = Rng(Rng::mix(config.seed, "corrupt")).substream(static_cast<std::uint64_t>(r));
    const auto instances = build_instances(truth, positives, config.neg_ratio, rng);
    const FeatureMatrix matrix =
        extract_matrix(feature_graph, r, instances, config.sfe, nullptr, caches[static_cast<std::size_t>(worker)].get());
    const std::string stem = "rel_" + std::to_string(r);
    write_feature_matrix(matrix, feature_graph, dir / (stem + ".tsv"));
    auto labels = open_out(dir / (stem + ".labels"));
    const std::size_t per_positive = static_cast<std::size_t>(config.neg_ratio) + 1;
    for (std::size_t row = 0; row < instances.size(); ++row) {
      labels << label_of(instances[row], row % per_positive == 0) << '\n';
    }
    files[i] = {truth.relations().name(r), stem + ".tsv", stem + ".labels"};
  });
  json manifest;
  manifest["tag"] = tag;
  manifest["sfe_params"] = config.sfe.to_string();
  manifest["relations"] = json::array();
  for (const auto& f : files) {
    manifest["relations"].push_back({{"relation", f.relation}, {"features", f.features}, {"labels", f.labels}});
  }
  open_out(dir / "manifest.json") << manifest.dump(1) << '\n';
  return relations.size();
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  std::vector<int> labels;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line == "1") {
      labels.push_back(1);
    } else if (line == "0") {
      labels.push_back(0);
    } else if (!line.empty()) {
      throw ParseError(path.string(), line_no, "label must be 0 or 1");
    }
  }
  return labels;
}

ExplainerSet fit_feature_sets(const PipelineConfig& config, Graph& graph, const std::string& tag, Variant variant) {
  const auto dir = paths::features_dir(config, tag);
  const json manifest = read_json(dir / "manifest.json");
  std::vector<PedagogicalDataset> datasets;
  std::size_t positives = 0, total = 0;
  for (const auto& entry : manifest.at("relations")) {
    PedagogicalDataset ds;
    ds.source = variant;
    ds.matrix = read_feature_matrix(dir / entry.at("features").get<std::string>(), graph);
    ds.labels = read_labels(dir / entry.at("labels").get<std::string>());
    if (ds.labels.size() != ds.matrix.rows.size()) {
      throw UserError("label file does not match feature rows for relation " + entry.at("relation").get<std::string>());
    }
    positives += static_cast<std::size_t>(std::count(ds.labels.begin(), ds.labels.end(), 1));
    total += ds.labels.size();
    datasets.push_back(std::move(ds));
  }
  const double rate = total > 0 ? static_cast<double>(positives) / static_cast<double>(total) : 0.5;
  const SfeParams params = SfeParams::parse(manifest.at("sfe_params").get<std::string>());
  std::vector<Explainer> fitted(datasets.size());
  parallel_for(datasets.size(), config.threads,
               [&](std::size_t i, int) { fitted[i] = train_explainer(datasets[i], config.fit); });
  ExplainerSet set(variant, params, rate);
  for (auto& e : fitted) set.add(std::move(e));
  return set;
}

json report_extras_pred(const PipelineConfig& config) {
  const auto path = paths::pred_graph_stats(config);
  return read_json(path);
}

metrics::MetricsReport write_metrics(const PipelineConfig& config, const std::string& tag, const Graph& graph,
                                     std::span<const metrics::EvalRecord> records,
                                     const std::function<void(metrics::MetricsReport&)>& decorate,
                                     const std::string& title) {
  auto micro = metrics::build_report(records);
  decorate(micro);
  std::vector<std::pair<std::string, metrics::MetricsReport>> per_relation;
  std::map<RelationId, std::vector<metrics::EvalRecord>> grouped;
  for (const auto& r : records) grouped[r.triple.relation].push_back(r);
  for (const auto& [rel, recs] : grouped) per_relation.emplace_back(graph.relations().name(rel), metrics::build_report(recs));
  const auto base = paths::metrics(config, tag);
  open_out(base.string() + ".json") << metrics::report_json(micro, per_relation, title);
  open_out(base.string() + ".txt") << metrics::report_table(micro, title);
  return micro;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto to_int = [](const std::string& s) { return std::stoi(s); };
  auto to_double = [](const std::string& s) { return std::stod(s); };
  auto to_size = [](const std::string& s) {
    if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
    return static_cast<std::size_t>(std::stoull(s));
  };
  if (key == "train") {
    train_path = value;
  } else if (key == "valid") {
    valid_path = value;
  } else if (key == "test") {
    test_path = value;
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "seed") {
    seed = parse_one<std::uint64_t>(key, value, [](const std::string& s) { return std::stoull(s); });
    derive_seeds();
  } else if (key == "threads") {
    threads = parse_one<int>(key, value, to_int);
  } else if (key == "dim") {
    dims = parse_list<int>(key, value, to_int);
    train.dim = dims.front();
  } else if (key == "margin") {
    margins = parse_list<double>(key, value, to_double);
    train.margin = margins.front();
  } else if (key == "learning_rate") {
    learning_rates = parse_list<double>(key, value, to_double);
    train.learning_rate = learning_rates.front();
  } else if (key == "norm") {
    norms = parse_list<Norm>(key, value, [](const std::string& s) { return parse_norm(s); });
    train.norm = norms.front();
  } else if (key == "epochs") {
    train.epochs = parse_one<int>(key, value, to_int);
  } else if (key == "batch_size") {
    train.batch_size = parse_one<int>(key, value, to_int);
  } else if (key == "grid") {
    use_default_grid = value == "default" ? true : parse_bool(key, value);
  } else if (key == "sfe.depth") {
    sfe.depth = parse_one<int>(key, value, to_int);
  } else if (key == "sfe.walks") {
    sfe.walks = parse_one<int>(key, value, to_int);
  } else if (key == "sfe.max_path_length") {
    sfe.max_path_length = parse_one<std::size_t>(key, value, to_size);
  } else if (key == "sfe.mode") {
    sfe.mode = parse_walk_mode(value);
  } else if (key == "sfe.degree_budget") {
    sfe.degree_budget = parse_one<std::size_t>(key, value, to_size);
  } else if (key == "sfe.exclude_direct_edge") {
    sfe.exclude_direct_edge = parse_bool(key, value);
  } else if (key == "variant") {
    variant = parse_variant(value);
  } else if (key == "k") {
    k = parse_one<int>(key, value, to_int);
  } else if (key == "neg_ratio") {
    neg_ratio = parse_one<int>(key, value, to_int);
  } else if (key == "max_positives") {
    max_positives = parse_one<std::size_t>(key, value, to_size);
  } else if (key == "penalty") {
    fit.penalty = logreg::parse_penalty(value);
  } else if (key == "lambda") {
    fit.strength = parse_one<double>(key, value, to_double);
  } else if (key == "tolerance") {
    fit.tolerance = parse_one<double>(key, value, to_double);
  } else if (key == "max_iterations") {
    fit.max_iterations = parse_one<int>(key, value, to_int);
  } else if (key == "class_weight_negative") {
    fit.weight_negative = parse_one<double>(key, value, to_double);
  } else if (key == "class_weight_positive") {
    fit.weight_positive = parse_one<double>(key, value, to_double);
  } else if (key == "synth.entities") {
    synth.n_entities = parse_one<std::size_t>(key, value, to_size);
  } else if (key == "synth.density") {
    synth.density = parse_one<double>(key, value, to_double);
  } else if (key == "synth.layout") {
    synth.layout = synth::parse_layout(value);
  } else if (key == "synth.base_relations") {
    synth.base_relations = split_list(value);
  } else if (key == "synth.rules") {
    synth.rules.clear();
    for (const auto& rule : split_list(value, ';')) synth.rules.push_back(parse_rule(rule));
  } else {
    throw UserError("unknown config key '" + key + "'");
  }
  if (threads < 1) throw UserError("threads must be >= 1");
  if (k < 1) throw UserError("k must be >= 1");
  if (neg_ratio < 0) throw UserError("neg_ratio must be >= 0");
}

void PipelineConfig::derive_seeds() {
  train.seed = Rng::mix(seed, "train");
  sfe.seed = Rng::mix(seed, "sfe");
  synth.seed = Rng::mix(seed, "synth");
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  PipelineConfig config;
  config.derive_seeds();
  std::ifstream in(path);
  if (!in) throw IoError("config file not found: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected key = value");
    try {
      config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const UserError& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  // Relative data paths are taken relative to the config file.
  const auto base = path.parent_path();
  for (auto* p : {&config.train_path, &config.valid_path, &config.test_path, &config.out_dir}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return config;
}

std::vector<TrainConfig> PipelineConfig::train_grid() const {
  if (use_default_grid) return default_grid(train);
  const std::vector<int> ds = dims.empty() ? std::vector<int>{train.dim} : dims;
  const std::vector<double> ms = margins.empty() ? std::vector<double>{train.margin} : margins;
  const std::vector<double> ls = learning_rates.empty() ? std::vector<double>{train.learning_rate} : learning_rates;
  const std::vector<Norm> ns = norms.empty() ? std::vector<Norm>{train.norm} : norms;
  std::vector<TrainConfig> grid;
  for (int d : ds) {
    for (double m : ms) {
      for (double l : ls) {
        for (Norm n : ns) {
          TrainConfig c = train;
          c.dim = d;
          c.margin = m;
          c.learning_rate = l;
          c.norm = n;
          grid.push_back(c);
        }
      }
    }
  }
  return grid;
}

Dataset load_dataset(const PipelineConfig& config, bool need_test) {
  if (config.train_path.empty()) throw UserError("config does not set 'train'");
  if (config.valid_path.empty()) throw UserError("config does not set 'valid'");
  if (need_test && config.test_path.empty()) throw UserError("config does not set 'test'");
  std::vector<std::filesystem::path> extra{config.valid_path};
  if (!config.test_path.empty()) extra.push_back(config.test_path);
  Dataset d;
  d.graph = load_graph(config.train_path, extra);
  d.valid = load_labeled(config.valid_path, d.graph);
  if (!config.test_path.empty()) d.test = load_labeled(config.test_path, d.graph);
  return d;
}

namespace paths {
std::filesystem::path model(const PipelineConfig& c) { return c.out_dir / "model.json"; }
std::filesystem::path pred_graph(const PipelineConfig& c) {
  return c.out_dir / ("pred_graph_k" + std::to_string(c.k) + ".tsv");
}
std::filesystem::path pred_graph_stats(const PipelineConfig& c) {
  return c.out_dir / ("pred_graph_k" + std::to_string(c.k) + ".stats.json");
}
std::filesystem::path features_dir(const PipelineConfig& c, const std::string& tag) {
  return c.out_dir / "features" / (tag == "pred" ? "pred_k" + std::to_string(c.k) : tag);
}
std::filesystem::path explainers(const PipelineConfig& c, const std::string& tag) {
  return c.out_dir / ("explainers_" + (tag == "pred" ? "pred_k" + std::to_string(c.k) : tag) + ".json");
}
std::filesystem::path explanations(const PipelineConfig& c, const std::string& tag) {
  return c.out_dir / ("explanations_" + (tag == "pred" ? "pred_k" + std::to_string(c.k) : tag));
}
std::filesystem::path metrics(const PipelineConfig& c, const std::string& tag) {
  return c.out_dir / ("metrics_" + (tag == "pred" ? "pred_k" + std::to_string(c.k) : tag));
}
}  // namespace paths

EmbeddingSummary cmd_train_embedding(const PipelineConfig& config) {
  const Dataset data = load_dataset(config, false);
  const auto grid = config.train_grid();
  const auto result = grid_search(data.graph, data.valid, grid);
  result.model.save(paths::model(config));
  EmbeddingSummary summary{result.config, result.validation_accuracy, std::nullopt};
  if (!data.test.empty()) summary.test_accuracy = classification_accuracy(result.model, data.test);
  json j;
  j["validation_accuracy"] = summary.validation_accuracy;
  j["test_accuracy"] = summary.test_accuracy ? json(*summary.test_accuracy) : json(nullptr);
  j["grid_accuracies"] = json::array();
  for (double a : result.accuracies) j["grid_accuracies"].push_back(nan_to_null(a));
  j["chosen"] = {{"dim", result.config.dim},
                 {"margin", result.config.margin},
                 {"learning_rate", result.config.learning_rate},
                 {"norm", to_string(result.config.norm)},
                 {"epochs", result.config.epochs}};
  open_out(config.out_dir / "embedding.json") << j.dump(1) << '\n';
  return summary;
}

PredictedGraphStats cmd_build_pred_graph(const PipelineConfig& config) {
  const Dataset data = load_dataset(config, false);
  const TransEModel model = load_model_for(config, data.graph);
  PredictedGraphSpec spec;
  spec.seeds.assign(data.graph.triples().begin(), data.graph.triples().end());
  spec.k = config.k;
  const PredictedGraph pred = build_predicted_graph(data.graph, model, spec);
  write_tsv(pred.graph, paths::pred_graph(config));
  json j;
  j["k"] = config.k;
  j["seeds"] = pred.stats.seeds;
  j["positive_seeds"] = pred.stats.positive_seeds;
  j["candidates"] = pred.stats.candidates;
  j["positives"] = pred.stats.positives;
  j["positive_ratio"] = nan_to_null(pred.stats.positive_ratio);
  open_out(paths::pred_graph_stats(config)) << j.dump(1) << '\n';
  return pred.stats;
}

std::size_t cmd_extract_features(const PipelineConfig& config) {
  const Dataset data = load_dataset(config, false);
  const TransEModel model = load_model_for(config, data.graph);
  const Graph feature_graph = load_feature_graph(config, data.graph, config.variant);
  return write_feature_sets(config, data.graph, feature_graph, tag_of(config.variant),
                            [&](const Triple& t, bool) { return model.classify(t); });
}

std::size_t cmd_train_explainer(const PipelineConfig& config) {
  Dataset data = load_dataset(config, false);
  const ExplainerSet set = fit_feature_sets(config, data.graph, tag_of(config.variant), config.variant);
  set.save(paths::explainers(config, tag_of(config.variant)), data.graph);
  return set.explainers().size();
}

std::vector<metrics::EvalRecord> evaluate_records(const ExplainerSet& explainers, const Graph& feature_graph,
                                                  const TransEModel& model, std::span<const LabeledTriple> examples) {
  SubgraphCache cache(feature_graph, explainers.params());
  std::vector<metrics::EvalRecord> records;
  records.reserve(examples.size());
  for (const auto& ex : examples) {
    const Explainer& explainer = explainers.get(ex.triple.relation);
    const Explanation e = explain(explainer, ex.triple, cache, model);
    metrics::EvalRecord r;
    r.triple = ex.triple;
    r.gold_label = ex.label;
    r.black_box_label = e.black_box_label;
    r.explainer_label = e.explainer_label();
    r.n_features = e.n_features;
    r.n_rules = e.reasons.size();
    for (const Reason& reason : e.reasons) {
      if (reason.weight > 0) ++r.n_positive_rules;
      r.rule_lengths.push_back(reason.path.length());
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<Explanation> cmd_explain(const PipelineConfig& config, const std::filesystem::path& triples_path) {
  Dataset data = load_dataset(config, false);
  const TransEModel model = load_model_for(config, data.graph);
  const ExplainerSet explainers = ExplainerSet::load(paths::explainers(config, tag_of(config.variant)), data.graph);
  const auto triples = load_triples(triples_path, data.graph);
  for (const Triple& t : triples) {
    if (static_cast<std::size_t>(t.head) >= model.num_entities() ||
        static_cast<std::size_t>(t.tail) >= model.num_entities() ||
        static_cast<std::size_t>(t.relation) >= model.num_relations()) {
      throw UserError("triple not covered by the embedding vocabulary: " + data.graph.describe(t));
    }
  }
  const Graph feature_graph = load_feature_graph(config, data.graph, explainers.variant());
  SubgraphCache cache(feature_graph, explainers.params());
  std::vector<Explanation> out;
  const auto base = paths::explanations(config, tag_of(config.variant));
  auto jsonl = open_out(base.string() + ".jsonl");
  auto text = open_out(base.string() + ".txt");
  for (const Triple& t : triples) {
    bool fallback = false;
    const Explainer& explainer = explainers.get(t.relation, &fallback);
    if (fallback) {
      std::cerr << "warning: no explainer for relation '" << data.graph.relations().name(t.relation)
                << "'; using the bias-only fallback\n";
    }
    Explanation e = explain(explainer, t, cache, model);
    jsonl << explanation_json_line(e, data.graph) << '\n';
    text << explanation_table(e, data.graph) << '\n';
    out.push_back(std::move(e));
  }
  return out;
}

metrics::MetricsReport cmd_evaluate(const PipelineConfig& config) {
  Dataset data = load_dataset(config, true);
  const TransEModel model = load_model_for(config, data.graph);
  const std::string tag = tag_of(config.variant);
  const ExplainerSet explainers = ExplainerSet::load(paths::explainers(config, tag), data.graph);
  const Graph feature_graph = load_feature_graph(config, data.graph, explainers.variant());
  if (data.test.empty()) throw UserError("test set is empty");
  const auto records = evaluate_records(explainers, feature_graph, model, data.test);
  const double embedding_accuracy = classification_accuracy(model, data.test);
  std::optional<double> ratio;
  double positives = static_cast<double>(feature_graph.triples().size());
  if (explainers.variant() == Variant::kPred) {
    const json stats = report_extras_pred(config);
    if (!stats.at("positive_ratio").is_null()) ratio = stats.at("positive_ratio").get<double>();
    positives = stats.at("positives").get<double>();
  }
  const std::string title =
      explainers.variant() == Variant::kTrue ? "XKE-TRUE" : "XKE-PRED (k=" + std::to_string(config.k) + ")";
  return write_metrics(
      config, tag, data.graph, records,
      [&](metrics::MetricsReport& m) {
        m.embedding_accuracy = embedding_accuracy;
        m.graph_positives = positives;
        m.positives_over_predicted_ratio = ratio;
      },
      title);
}

metrics::MetricsReport cmd_baseline_sfe(const PipelineConfig& config) {
  Dataset data = load_dataset(config, true);
  write_feature_sets(config, data.graph, data.graph, "baseline",
                     [](const Triple&, bool is_positive) { return is_positive ? 1 : 0; });
  const ExplainerSet explainers = fit_feature_sets(config, data.graph, "baseline", Variant::kTrue);
  explainers.save(paths::explainers(config, "baseline"), data.graph);
  if (data.test.empty()) throw UserError("test set is empty");
  // Gold labels stand in for the black box: there is none in this baseline.
  SubgraphCache cache(data.graph, explainers.params());
  std::vector<metrics::EvalRecord> records;
  for (const auto& ex : data.test) {
    const Explainer& explainer = explainers.get(ex.triple.relation);
    std::vector<std::int32_t> active;
    for (const PathType& p : extract_features(ex.triple, cache)) {
      if (auto idx = explainer.vocab.find(p)) active.push_back(*idx);
    }
    std::sort(active.begin(), active.end());
    metrics::EvalRecord r;
    r.triple = ex.triple;
    r.gold_label = ex.label;
    r.black_box_label = ex.label;
    r.explainer_label = explainer.score(active) >= 0.5 ? 1 : 0;
    r.n_features = active.size();
    for (std::int32_t j : active) {
      const double w = explainer.weights[static_cast<std::size_t>(j)];
      if (std::abs(w) > kRuleWeightEpsilon) {
        ++r.n_rules;
        if (w > 0) ++r.n_positive_rules;
        r.rule_lengths.push_back(explainer.vocab.path(j).length());
      }
    }
    records.push_back(std::move(r));
  }
  return write_metrics(
      config, "baseline", data.graph, records,
      [&](metrics::MetricsReport& m) { m.graph_positives = static_cast<double>(data.graph.triples().size()); },
      "SFE + logistic regression on gold labels");
}

void cmd_synth(const PipelineConfig& config) {
  const auto kb = synth::generate(config.synth);
  synth::write_splits(kb, config.out_dir);
}

metrics::MetricsReport run_pipeline(const PipelineConfig& config) {
  cmd_train_embedding(config);
  if (config.variant == Variant::kPred) cmd_build_pred_graph(config);
  cmd_extract_features(config);
  cmd_train_explainer(config);
  return cmd_evaluate(config);
}

}  // namespace xke
