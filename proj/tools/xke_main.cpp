#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "xke/error.hpp"
#include "xke/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::optional<int> k;
  std::optional<int> threads;
  std::string triples;
};

xke::PipelineConfig resolve(const Flags& f) {
  xke::PipelineConfig config;
  if (!f.config.empty()) {
    config = xke::PipelineConfig::load(f.config);
  } else {
    config.derive_seeds();
  }
  if (!f.out.empty()) config.out_dir = f.out;
  if (f.seed) config.set("seed", std::to_string(*f.seed));
  if (!f.variant.empty()) config.set("variant", f.variant);
  if (f.k) config.set("k", std::to_string(*f.k));
  if (f.threads) config.set("threads", std::to_string(*f.threads));
  return config;
}

void print_report(const xke::metrics::MetricsReport& m, const std::string& title) {
  std::cout << xke::metrics::report_table(m, title);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainable knowledge graph embedding pipeline"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Pipeline config file");
    sub->add_option("--out", flags.out, "Output directory (overrides config)");
    sub->add_option("--seed", flags.seed, "Root seed (overrides config)");
    sub->add_option("--variant", flags.variant, "Explainer variant")->check(CLI::IsMember({"true", "pred"}));
    sub->add_option("--k", flags.k, "Neighbours per entity for the predicted graph");
    sub->add_option("--threads", flags.threads, "Worker threads");
  };

  auto* train = app.add_subcommand("train-embedding", "Train TransE and pick per-relation thresholds");
  auto* grid = app.add_subcommand("grid-search", "train-embedding over the built-in hyperparameter grid");
  auto* pred = app.add_subcommand("build-pred-graph", "Build the graph of predicted positives");
  auto* features = app.add_subcommand("extract-features", "Extract path features for every relation");
  auto* fit = app.add_subcommand("train-explainer", "Fit one logistic regression explainer per relation");
  auto* explain = app.add_subcommand("explain", "Explain the triples of a TSV file");
  auto* evaluate = app.add_subcommand("evaluate", "Score explainers on the test split");
  auto* baseline = app.add_subcommand("baseline-sfe", "SFE + logistic regression on gold labels");
  auto* synth = app.add_subcommand("synth", "Write a synthetic KB with planted rules");
  auto* run = app.add_subcommand("run", "All stages from train-embedding to evaluate");
  for (auto* sub : {train, grid, pred, features, fit, explain, evaluate, baseline, synth, run}) add_common(sub);
  explain->add_option("--triples", flags.triples, "Triples to explain (3 or 4 tab-separated columns)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    xke::PipelineConfig config = resolve(flags);
    if (train->parsed() || grid->parsed()) {
      if (grid->parsed()) config.use_default_grid = true;
      const auto s = xke::cmd_train_embedding(config);
      std::printf("validation accuracy: %.4f\n", s.validation_accuracy);
      if (s.test_accuracy) std::printf("test accuracy: %.4f\n", *s.test_accuracy);
      std::printf("chosen: dim=%d margin=%g learning_rate=%g norm=%s\n", s.config.dim, s.config.margin,
                  s.config.learning_rate, xke::to_string(s.config.norm).c_str());
    } else if (pred->parsed()) {
      const auto s = xke::cmd_build_pred_graph(config);
      std::printf("seeds: %zu positive seeds: %zu candidates: %zu |G^|: %zu ratio: %.4f\n", s.seeds,
                  s.positive_seeds, s.candidates, s.positives, s.positive_ratio);
    } else if (features->parsed()) {
      std::printf("relations: %zu\n", xke::cmd_extract_features(config));
    } else if (fit->parsed()) {
      std::printf("explainers: %zu\n", xke::cmd_train_explainer(config));
    } else if (explain->parsed()) {
      const auto explanations = xke::cmd_explain(config, flags.triples);
      std::printf("explained: %zu (see %s.txt)\n", explanations.size(),
                  xke::paths::explanations(config, xke::to_string(config.variant)).string().c_str());
    } else if (evaluate->parsed()) {
      print_report(xke::cmd_evaluate(config), "XKE-" + xke::to_string(config.variant));
    } else if (baseline->parsed()) {
      print_report(xke::cmd_baseline_sfe(config), "SFE baseline");
    } else if (synth->parsed()) {
      xke::cmd_synth(config);
      std::printf("wrote %s\n", config.out_dir.string().c_str());
    } else if (run->parsed()) {
      print_report(xke::run_pipeline(config), "XKE-" + xke::to_string(config.variant));
    }
  } catch (const xke::UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
