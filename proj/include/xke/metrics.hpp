#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xke/graph.hpp"

namespace xke::metrics {

struct EvalRecord {
  Triple triple;
  int gold_label = 0;
  int black_box_label = 0;
  int explainer_label = 0;
  std::size_t n_features = 0;
  std::size_t n_rules = 0;           // active features with nonzero weight
  std::size_t n_positive_rules = 0;  // active features with positive weight
  std::vector<std::size_t> rule_lengths;
};

// Which label the explainer is compared against: the black box (fidelity)
// or the gold label (accuracy).
enum class Reference { kBlackBox, kGold };

double fidelity(std::span<const EvalRecord> records);
double accuracy(std::span<const EvalRecord> records);
double agreement(std::span<const EvalRecord> records, Reference against);

// Agreement restricted to records with n_features > 0; nullopt if none.
std::optional<double> filtered(Reference against, std::span<const EvalRecord> records);

// sum(n_features * match) / sum(n_features); nullopt if every n_features is 0.
std::optional<double> weighted(Reference against, std::span<const EvalRecord> records);

// F1 of the explainer's positive class against the reference labels.
double f1(std::span<const EvalRecord> records, Reference against);

struct Interpretability {
  std::optional<double> mean_rules;        // over records with n_rules > 0
  std::optional<double> mean_rule_length;  // over all rules
};

Interpretability interpretability_stats(std::span<const EvalRecord> records);

struct MetricsReport {
  std::size_t n_records = 0;
  std::optional<double> embedding_accuracy;
  std::optional<double> graph_positives;  // |G| or |G^|
  std::optional<double> positives_over_predicted_ratio;
  double features_per_example = 0.0;                    // over all records
  std::optional<double> features_per_featured_example;  // over records with features
  double pct_examples_with_features = 0.0;
  std::optional<double> mean_rules;
  std::optional<double> mean_positive_rules;  // over records with rules, like mean_rules
  std::optional<double> mean_rule_length;
  double fidelity = 0.0;
  std::optional<double> fidelity_filtered;
  std::optional<double> fidelity_weighted;
  double accuracy = 0.0;
  std::optional<double> accuracy_filtered;
  std::optional<double> accuracy_weighted;
  double f1_fidelity = 0.0;
  double f1_accuracy = 0.0;
};

// Micro-averaged report over all records. Rates are fractions in [0, 1].
MetricsReport build_report(std::span<const EvalRecord> records);

std::string report_json(const MetricsReport& micro, const std::vector<std::pair<std::string, MetricsReport>>& per_relation,
                        const std::string& title);

// Aligned text table with one row per metric,
// percentages with 2 decimals and "-" for undefined values.
std::string report_table(const MetricsReport& report, const std::string& title);

// Row labels emitted by report_table, in order.
const std::vector<std::string>& table_row_names();

}  // namespace xke::metrics
