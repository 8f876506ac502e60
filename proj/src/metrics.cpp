#include "xke/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "xke/error.hpp"

namespace xke::metrics {

namespace {

int reference_label(const EvalRecord& r, Reference against) {
  return against == Reference::kBlackBox ? r.black_box_label : r.gold_label;
}

bool matches(const EvalRecord& r, Reference against) { return r.explainer_label == reference_label(r, against); }

}  // namespace

double agreement(std::span<const EvalRecord> records, Reference against) {
  if (records.empty()) throw Error("metric over an empty record set");
  std::size_t hits = 0;
  for (const auto& r : records) hits += matches(r, against) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double fidelity(std::span<const EvalRecord> records) { return agreement(records, Reference::kBlackBox); }
double accuracy(std::span<const EvalRecord> records) { return agreement(records, Reference::kGold); }

std::optional<double> filtered(Reference against, std::span<const EvalRecord> records) {
  std::size_t n = 0, hits = 0;
  for (const auto& r : records) {
    if (r.n_features == 0) continue;
    ++n;
    hits += matches(r, against) ? 1 : 0;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(n);
}

std::optional<double> weighted(Reference against, std::span<const EvalRecord> records) {
  double total = 0.0, hits = 0.0;
  for (const auto& r : records) {
    total += static_cast<double>(r.n_features);
    if (matches(r, against)) hits += static_cast<double>(r.n_features);
  }
  if (total == 0.0) return std::nullopt;
  return hits / total;
}

double f1(std::span<const EvalRecord> records, Reference against) {
  if (records.empty()) throw Error("metric over an empty record set");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& r : records) {
    const int ref = reference_label(r, against);
    if (r.explainer_label == 1 && ref == 1) ++tp;
    if (r.explainer_label == 1 && ref == 0) ++fp;
    if (r.explainer_label == 0 && ref == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

Interpretability interpretability_stats(std::span<const EvalRecord> records) {
  std::size_t explained = 0, rules = 0, rule_count = 0, total_length = 0;
  for (const auto& r : records) {
    if (r.n_rules > 0) {
      ++explained;
      rules += r.n_rules;
    }
    for (std::size_t len : r.rule_lengths) {
      ++rule_count;
      total_length += len;
    }
  }
  Interpretability out;
  if (explained > 0) out.mean_rules = static_cast<double>(rules) / static_cast<double>(explained);
  if (rule_count > 0) out.mean_rule_length = static_cast<double>(total_length) / static_cast<double>(rule_count);
  return out;
}

MetricsReport build_report(std::span<const EvalRecord> records) {
  MetricsReport m;
  m.n_records = records.size();
  if (records.empty()) throw Error("cannot report on an empty record set");
  std::size_t featured = 0, features = 0, positive_explained = 0, positive_rules = 0;
  for (const auto& r : records) {
    features += r.n_features;
    featured += r.n_features > 0 ? 1 : 0;
    // Same denominator as mean_rules: explanations with at least one rule.
    if (r.n_rules > 0) {
      ++positive_explained;
      positive_rules += r.n_positive_rules;
    }
  }
  const auto n = static_cast<double>(records.size());
  m.features_per_example = static_cast<double>(features) / n;
  if (featured > 0) m.features_per_featured_example = static_cast<double>(features) / static_cast<double>(featured);
  m.pct_examples_with_features = static_cast<double>(featured) / n;
  const auto interp = interpretability_stats(records);
  m.mean_rules = interp.mean_rules;
  m.mean_rule_length = interp.mean_rule_length;
  if (positive_explained > 0) {
    m.mean_positive_rules = static_cast<double>(positive_rules) / static_cast<double>(positive_explained);
  }
  m.fidelity = fidelity(records);
  m.fidelity_filtered = filtered(Reference::kBlackBox, records);
  m.fidelity_weighted = weighted(Reference::kBlackBox, records);
  m.accuracy = accuracy(records);
  m.accuracy_filtered = filtered(Reference::kGold, records);
  m.accuracy_weighted = weighted(Reference::kGold, records);
  m.f1_fidelity = f1(records, Reference::kBlackBox);
  m.f1_accuracy = f1(records, Reference::kGold);
  return m;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json to_json(const MetricsReport& m) {
  return {{"n_records", m.n_records},
          {"embedding_accuracy", opt(m.embedding_accuracy)},
          {"graph_positives", opt(m.graph_positives)},
          {"positives_over_predicted_ratio", opt(m.positives_over_predicted_ratio)},
          {"features_per_example", m.features_per_example},
          {"features_per_featured_example", opt(m.features_per_featured_example)},
          {"pct_examples_with_features", m.pct_examples_with_features},
          {"mean_rules", opt(m.mean_rules)},
          {"mean_positive_rules", opt(m.mean_positive_rules)},
          {"mean_rule_length", opt(m.mean_rule_length)},
          {"fidelity", m.fidelity},
          {"fidelity_filtered", opt(m.fidelity_filtered)},
          {"fidelity_weighted", opt(m.fidelity_weighted)},
          {"accuracy", m.accuracy},
          {"accuracy_filtered", opt(m.accuracy_filtered)},
          {"accuracy_weighted", opt(m.accuracy_weighted)},
          {"f1_fidelity", m.f1_fidelity},
          {"f1_accuracy", m.f1_accuracy}};
}

std::string format_value(const std::optional<double>& v, bool percent, int digits = 2) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, percent ? *v * 100.0 : *v);
  return buf;
}

}  // namespace

std::string report_json(const MetricsReport& micro, const std::vector<std::pair<std::string, MetricsReport>>& per_relation,
                        const std::string& title) {
  nlohmann::json j;
  j["title"] = title;
  j["micro"] = to_json(micro);
  nlohmann::json rel = nlohmann::json::object();
  for (const auto& [name, report] : per_relation) rel[name] = to_json(report);
  j["per_relation"] = rel;
  return j.dump(1) + "\n";
}

const std::vector<std::string>& table_row_names() {
  static const std::vector<std::string> names = {
      "Embedding Accuracy",
      "# Positive triples in G (XKE-TRUE) or G^ (XKE-PRED)",
      "G^ positive over predicted ratio",
      "# Features per example",
      "# Features per example (examples with # features > 0)",
      "% Examples with # features > 0",
      "Explanation Mean # Rules (for explanations with size > 0)",
      "Explanation Mean # Positive-Weight Rules",
      "Explanation Mean Rule Length",
      "Fidelity",
      "Fidelity (filtered for examples with # features > 0)",
      "Fidelity (weighted by the # features)",
      "Accuracy",
      "Accuracy (filtered for examples with # features > 0)",
      "Accuracy (weighted by the # features)",
      "F1 (Fidelity)",
      "F1 (Accuracy)",
  };
  return names;
}

std::string report_table(const MetricsReport& m, const std::string& title) {
  const std::vector<std::string> values = {
      format_value(m.embedding_accuracy, true),
      format_value(m.graph_positives, false, 0),
      format_value(m.positives_over_predicted_ratio, false, 3),
      format_value(m.features_per_example, false),
      format_value(m.features_per_featured_example, false),
      format_value(m.pct_examples_with_features, true),
      format_value(m.mean_rules, false),
      format_value(m.mean_positive_rules, false),
      format_value(m.mean_rule_length, false),
      format_value(m.fidelity, true),
      format_value(m.fidelity_filtered, true),
      format_value(m.fidelity_weighted, true),
      format_value(m.accuracy, true),
      format_value(m.accuracy_filtered, true),
      format_value(m.accuracy_weighted, true),
      format_value(m.f1_fidelity, true),
      format_value(m.f1_accuracy, true),
  };
  const auto& names = table_row_names();
  std::size_t width = title.size();
  for (const auto& n : names) width = std::max(width, n.size());
  std::ostringstream out;
  out << title << std::string(width - title.size() + 2, ' ') << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << names[i] << std::string(width - names[i].size() + 2, ' ') << values[i] << '\n';
  }
  return out.str();
}

}  // namespace xke::metrics
