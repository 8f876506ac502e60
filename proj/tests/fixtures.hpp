#pragma once

#include <vector>

#include "xke/metrics.hpp"

namespace xke::testing {

// Twelve hand-labelled evaluation records. Expected values, counted by hand:
//   fidelity 8/12, accuracy 7/12
//   filtered fidelity 5/8, filtered accuracy 6/8 (8 records have features)
//   weighted fidelity 17/24, weighted accuracy 19/24 (24 features in total)
//   F1 fidelity: TP 4, FP 2, FN 2 -> 2/3
//   F1 accuracy: TP 4, FP 2, FN 3 -> 8/13
//   mean rules 14/7 over 7 explained records, mean rule length 33/14
//   features per example 24/12, per featured example 24/8, featured share 8/12
inline std::vector<metrics::EvalRecord> metric_fixture() {
  struct Row {
    int gold, black_box, explainer;
    std::size_t features;
    std::vector<std::size_t> rule_lengths;
  };
  const std::vector<Row> rows = {
      {1, 1, 1, 3, {2, 3}},  {1, 1, 0, 0, {}},  {0, 0, 0, 2, {1}},     {0, 1, 1, 1, {4}},
      {1, 0, 0, 0, {}},      {0, 0, 1, 4, {2, 2, 3}}, {1, 1, 1, 0, {}}, {0, 0, 0, 5, {}},
      {1, 0, 1, 2, {1, 2}},  {0, 1, 0, 1, {3}}, {1, 1, 1, 6, {1, 2, 3, 4}}, {1, 0, 0, 0, {}},
  };
  std::vector<metrics::EvalRecord> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    metrics::EvalRecord r;
    r.triple = {static_cast<EntityId>(i), 0, static_cast<EntityId>(i + 1)};
    r.gold_label = rows[i].gold;
    r.black_box_label = rows[i].black_box;
    r.explainer_label = rows[i].explainer;
    r.n_features = rows[i].features;
    r.n_rules = rows[i].rule_lengths.size();
    r.n_positive_rules = r.n_rules / 2;
    r.rule_lengths = rows[i].rule_lengths;
    out.push_back(r);
  }
  return out;
}

}  // namespace xke::testing
