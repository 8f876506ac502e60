#include "xke/logreg.hpp"

#include <algorithm>
#include <cmath>

#include "xke/error.hpp"

namespace xke::logreg {

void SparseDesign::add_row(std::span<const std::int32_t> indices, int label) {
  if (label != 0 && label != 1) throw Error("label must be 0 or 1");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= n_cols_) throw Error("feature index out of range");
    if (i > 0 && indices[i] <= indices[i - 1]) throw Error("row indices must be strictly increasing");
  }
  indices_.insert(indices_.end(), indices.begin(), indices.end());
  offsets_.push_back(indices_.size());
  labels_.push_back(static_cast<std::uint8_t>(label));
}

std::string to_string(Penalty p) {
  switch (p) {
    case Penalty::kNone:
      return "none";
    case Penalty::kL1:
      return "L1";
    case Penalty::kL2:
      return "L2";
  }
  return "none";
}

Penalty parse_penalty(std::string_view text) {
  if (text == "none") return Penalty::kNone;
  if (text == "L1" || text == "l1") return Penalty::kL1;
  if (text == "L2" || text == "l2") return Penalty::kL2;
  throw UserError("unknown penalty '" + std::string(text) + "'");
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double predict_proba(std::span<const double> weights, double bias, std::span<const std::int32_t> row) {
  double z = bias;
  for (std::int32_t j : row) z += weights[static_cast<std::size_t>(j)];
  return sigmoid(z);
}

double predict_proba(const Model& model, std::span<const std::int32_t> row) {
  return predict_proba(model.weights, model.bias, row);
}

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double class_weight(const FitConfig& c, int label) { return label == 1 ? c.weight_positive : c.weight_negative; }

double linear(const SparseDesign& d, std::size_t i, const Model& m) {
  double z = m.bias;
  for (std::int32_t j : d.row(i)) z += m.weights[static_cast<std::size_t>(j)];
  return z;
}

double smooth_objective(const SparseDesign& d, const FitConfig& c, const Model& m) {
  double loss = 0.0;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    const double z = linear(d, i, m);
    loss += class_weight(c, d.label(i)) * (softplus(z) - (d.label(i) == 1 ? z : 0.0));
  }
  loss /= static_cast<double>(d.n_rows());
  if (c.penalty == Penalty::kL2) {
    double sq = 0.0;
    for (double w : m.weights) sq += w * w;
    loss += 0.5 * c.strength * sq;
  }
  return loss;
}

double l1_term(const FitConfig& c, const Model& m) {
  if (c.penalty != Penalty::kL1) return 0.0;
  double s = 0.0;
  for (double w : m.weights) s += std::abs(w);
  return c.strength * s;
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace

double objective(const SparseDesign& design, const FitConfig& config, const Model& model) {
  return smooth_objective(design, config, model) + l1_term(config, model);
}

std::vector<double> smooth_gradient(const SparseDesign& design, const FitConfig& config, const Model& model) {
  const std::size_t p = design.n_cols();
  std::vector<double> g(p + 1, 0.0);
  const double inv_n = 1.0 / static_cast<double>(design.n_rows());
  for (std::size_t i = 0; i < design.n_rows(); ++i) {
    const double z = linear(design, i, model);
    const double r = class_weight(config, design.label(i)) * (sigmoid(z) - design.label(i)) * inv_n;
    for (std::int32_t j : design.row(i)) g[static_cast<std::size_t>(j)] += r;
    g[p] += r;
  }
  if (config.penalty == Penalty::kL2) {
    for (std::size_t j = 0; j < p; ++j) g[j] += config.strength * model.weights[j];
  }
  return g;
}

std::vector<double> gradient(const SparseDesign& design, const FitConfig& config, const Model& model) {
  auto g = smooth_gradient(design, config, model);
  if (config.penalty == Penalty::kL1) {
    for (std::size_t j = 0; j < design.n_cols(); ++j) {
      const double w = model.weights[j];
      g[j] += config.strength * (w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0));
    }
  }
  return g;
}

FitResult fit(const SparseDesign& design, const FitConfig& config) {
  if (design.n_rows() == 0) throw Error("cannot fit logistic regression on zero rows");
  if (config.tolerance <= 0) throw UserError("tolerance must be > 0");
  if (config.strength < 0) throw UserError("regularization strength must be >= 0");
  const std::size_t p = design.n_cols();
  const bool l1 = config.penalty == Penalty::kL1;

  FitResult result;
  Model& x = result.model;
  x.weights.assign(p, 0.0);
  double f = smooth_objective(design, config, x);
  double total = f + l1_term(config, x);
  if (!std::isfinite(total)) throw Error("non-finite logistic objective");
  double step = 1.0;
  Model trial;
  for (int it = 1; it <= config.max_iterations; ++it) {
    result.iterations = it;
    const auto g = smooth_gradient(design, config, x);
    double f_trial = 0.0;
    double move_inf = 0.0;
    for (int attempts = 0;; ++attempts) {
      trial.weights.resize(p);
      for (std::size_t j = 0; j < p; ++j) {
        const double v = x.weights[j] - step * g[j];
        trial.weights[j] = l1 ? soft_threshold(v, step * config.strength) : v;
      }
      trial.bias = x.bias - step * g[p];
      // Sufficient decrease for the quadratic upper model at this step size.
      double lin = 0.0, sq = 0.0;
      move_inf = 0.0;
      for (std::size_t j = 0; j <= p; ++j) {
        const double d = (j < p ? trial.weights[j] - x.weights[j] : trial.bias - x.bias);
        lin += g[j] * d;
        sq += d * d;
        move_inf = std::max(move_inf, std::abs(d));
      }
      f_trial = smooth_objective(design, config, trial);
      if (f_trial <= f + lin + sq / (2.0 * step) + 1e-15 * std::abs(f)) break;
      step *= 0.5;
      if (attempts > 60) throw Error("line search failed in logistic regression");
    }
    const double total_trial = f_trial + l1_term(config, trial);
    if (!std::isfinite(total_trial)) throw Error("non-finite logistic objective");
    const double change = total - total_trial;
    const double mapping_norm = move_inf / step;
    if (total_trial <= total) {
      std::swap(x, trial);
      f = f_trial;
      total = total_trial;
    }
    result.objective_trace.push_back(total);
    if (std::abs(change) < config.tolerance || mapping_norm < config.tolerance) {
      result.converged = true;
      break;
    }
    step = std::min(step * 2.0, 1e6);
  }
  result.objective = total;
  return result;
}

double grad_check(const SparseDesign& design, const FitConfig& config, const Model& point, double step) {
  const auto analytic = gradient(design, config, point);
  const std::size_t p = design.n_cols();
  double worst = 0.0;
  Model probe = point;
  for (std::size_t j = 0; j <= p; ++j) {
    double& coord = j < p ? probe.weights[j] : probe.bias;
    const double saved = coord;
    coord = saved + step;
    const double up = objective(design, config, probe);
    coord = saved - step;
    const double down = objective(design, config, probe);
    coord = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-4});
    worst = std::max(worst, std::abs(analytic[j] - numeric) / denom);
  }
  return worst;
}

}  // namespace xke::logreg
