#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace xke::logreg {

// Binary design matrix in compressed-row form: row i's active columns are
// indices[offsets[i] .. offsets[i+1]).
class SparseDesign {
 public:
  explicit SparseDesign(std::size_t n_cols = 0) : n_cols_(n_cols) {}

  // Indices must be strictly increasing and < n_cols; label in {0, 1}.
  void add_row(std::span<const std::int32_t> indices, int label);

  std::size_t n_rows() const { return labels_.size(); }
  std::size_t n_cols() const { return n_cols_; }
  std::span<const std::int32_t> row(std::size_t i) const {
    return std::span<const std::int32_t>(indices_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
  }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const std::uint8_t> labels() const { return labels_; }

 private:
  std::size_t n_cols_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::int32_t> indices_;
  std::vector<std::uint8_t> labels_;
};

enum class Penalty { kNone, kL1, kL2 };

std::string to_string(Penalty p);
Penalty parse_penalty(std::string_view text);

// Objective: (1/n) sum_i c_{y_i} * logloss_i + strength * R(w), with
// R = sum |w_j| for L1 and (1/2) sum w_j^2 for L2. The bias is never penalized.
struct FitConfig {
  Penalty penalty = Penalty::kL1;
  double strength = 0.1;
  double tolerance = 1e-9;
  int max_iterations = 20000;
  double weight_negative = 1.0;
  double weight_positive = 1.0;
};

struct Model {
  std::vector<double> weights;
  double bias = 0.0;
};

struct FitResult {
  Model model;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // objective after each accepted step
};

// Numerically stable logistic function.
double sigmoid(double z);

double predict_proba(const Model& model, std::span<const std::int32_t> row);
double predict_proba(std::span<const double> weights, double bias, std::span<const std::int32_t> row);

double objective(const SparseDesign& design, const FitConfig& config, const Model& model);

// Gradient of the smooth part (mean loss plus L2 term when configured) with
// respect to the weights; the last element is the bias derivative.
std::vector<double> smooth_gradient(const SparseDesign& design, const FitConfig& config, const Model& model);

// Gradient of the full objective; for L1, sign(w_j) is used, so the point
// must be off the axes.
std::vector<double> gradient(const SparseDesign& design, const FitConfig& config, const Model& model);

// Proximal gradient (L1) or gradient descent (L2, none) with backtracking line
// search. Deterministic; the objective never increases between iterations.
FitResult fit(const SparseDesign& design, const FitConfig& config);

// Largest relative error between gradient() and central finite differences
// of objective(); relative to max(|analytic|, |numeric|, 1e-4).
double grad_check(const SparseDesign& design, const FitConfig& config, const Model& point, double step = 1e-6);

}  // namespace xke::logreg
