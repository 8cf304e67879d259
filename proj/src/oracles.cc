#include "cw/oracles.h"

namespace cw {

QueryLedger::QueryLedger(std::optional<std::int64_t> budget)
    : budget_(budget) {
  if (budget_ && *budget_ < 0) {
    throw std::invalid_argument("query budget must be non-negative");
  }
}

std::optional<std::int64_t> QueryLedger::remaining() const {
  if (!budget_) return std::nullopt;
  return *budget_ - used_;
}

void QueryLedger::charge() {
  if (exhausted()) throw BudgetExhausted();
  ++used_;
}

TargetOracle::TargetOracle(const Model& model,
                           std::optional<std::int64_t> budget)
    : TargetOracle(std::vector<const Model*>{&model}, budget) {}

TargetOracle::TargetOracle(std::vector<const Model*> ensemble,
                           std::optional<std::int64_t> budget)
    : models_(std::move(ensemble)), ledger_(budget) {
  if (models_.empty()) throw std::invalid_argument("empty target ensemble");
  classes_ = models_.front()->num_classes();
  shape_ = models_.front()->input_shape();
  for (const Model* m : models_) {
    if (m->num_classes() != classes_ || !(m->input_shape() == shape_)) {
      throw std::invalid_argument("ensemble members disagree on shape");
    }
  }
}

Scores TargetOracle::peek(const Tensor& x) const {
  Scores s;
  if (models_.size() == 1) {
    s.probabilities = models_.front()->probabilities(x);
  } else {
    s.probabilities.assign(static_cast<std::size_t>(classes_), 0.0);
    for (const Model* m : models_) {
      std::vector<double> p = m->probabilities(x);
      for (std::size_t k = 0; k < p.size(); ++k) s.probabilities[k] += p[k];
    }
    for (double& p : s.probabilities) p /= double(models_.size());
  }
  s.label = argmax(s.probabilities);
  return s;
}

Scores TargetOracle::query(const Image& x) {
  ledger_.charge();
  return peek(x.tensor());
}

int TargetOracle::query_label(const Image& x) { return query(x).label; }

double TargetOracle::query_loss(const Image& x, int label) {
  if (label < 0 || label >= classes_) {
    throw std::invalid_argument("query_loss: label out of range");
  }
  return cross_entropy_from(query(x).probabilities, label);
}

Perturbation SubstituteOracle::substitute_gradient(const Tensor& x,
                                                   int label) const {
  return model_.loss_gradient(x, label);
}

Perturbation SubstituteOracle::smoothed_gradient(const Tensor& x, int label,
                                                 double s, int m,
                                                 Rng& rng) const {
  if (m < 1) throw std::invalid_argument("smoothed_gradient: m must be >= 1");
  if (!(s >= 0.0)) {
    throw std::invalid_argument("smoothed_gradient: s must be non-negative");
  }
  if (s == 0.0) return substitute_gradient(x, label);
  Tensor sum(x.shape());
  for (int i = 0; i < m; ++i) {
    sum += model_.loss_gradient(x + gaussian_like(x.shape(), s, rng), label);
  }
  sum *= 1.0 / m;
  return sum;
}

}  // namespace cw
