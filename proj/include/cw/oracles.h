#ifndef CW_ORACLES_H_
#define CW_ORACLES_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cw/core.h"
#include "cw/model.h"

namespace cw {

// Raised by a TargetOracle whose ledger has no budget left. Attacks catch it
// and return their best result so far.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("target query budget exhausted") {}
};

class QueryLedger {
 public:
  // nullopt = unlimited.
  explicit QueryLedger(std::optional<std::int64_t> budget = std::nullopt);

  std::int64_t used() const { return used_; }
  std::optional<std::int64_t> budget() const { return budget_; }
  std::optional<std::int64_t> remaining() const;
  bool exhausted() const { return budget_ && used_ >= *budget_; }

  // Throws BudgetExhausted without counting when no budget remains.
  void charge();

 private:
  std::int64_t used_ = 0;
  std::optional<std::int64_t> budget_;
};

struct Scores {
  std::vector<double> probabilities;
  int label = 0;
};

// Counted score access to the attacked model (or the mean of an ensemble).
// Every forward pass costs one query regardless of what is read from it.
// Not thread-safe; give each attack its own oracle over shared models.
class TargetOracle {
 public:
  TargetOracle(const Model& model, std::optional<std::int64_t> budget);
  TargetOracle(std::vector<const Model*> ensemble,
               std::optional<std::int64_t> budget);

  Scores query(const Image& x);
  int query_label(const Image& x);
  double query_loss(const Image& x, int label);

  const QueryLedger& ledger() const { return ledger_; }
  int num_classes() const { return classes_; }
  Shape input_shape() const { return shape_; }

  // Uncounted evaluation, for harness-side auditing only.
  Scores peek(const Tensor& x) const;

 private:
  std::vector<const Model*> models_;
  QueryLedger ledger_;
  int classes_ = 0;
  Shape shape_;
};

// Free gradient access to the attacker's local model.
class SubstituteOracle {
 public:
  explicit SubstituteOracle(const DifferentiableModel& model) : model_(model) {}

  Perturbation substitute_gradient(const Tensor& x, int label) const;
  // Mean of m gradients at x + xi_i, xi_i ~ N(0, s^2 I). s = 0 returns the
  // plain gradient without drawing from rng.
  Perturbation smoothed_gradient(const Tensor& x, int label, double s, int m,
                                 Rng& rng) const;

  const DifferentiableModel& model() const { return model_; }

 private:
  const DifferentiableModel& model_;
};

}  // namespace cw

#endif  // CW_ORACLES_H_
