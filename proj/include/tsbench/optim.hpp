#pragma once
// AdamW with decoupled weight decay, and the 1cycle learning-rate policy.

#include <cstdint>
#include <string>
#include <vector>

#include "tsbench/tensor.hpp"

namespace tsbench {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// A named parameter list; the order defines the optimizer state layout.
struct ParamList {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(std::string name, Tensor t) { items.emplace_back(std::move(name), std::move(t)); }
  void extend(const std::string& prefix, const ParamList& other) {
    for (const auto& [n, t] : other.items) items.emplace_back(prefix + n, t);
  }
  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : items) n += t.numel();
    return n;
  }
  void zero_grad() {
    for (auto& [name, t] : items) const_cast<Tensor&>(t).zero_grad();
  }
};

class AdamW {
 public:
  AdamW(ParamList params, AdamWConfig cfg);

  // One update over all parameters from their .grad buffers. The decay is
  // decoupled: applied straight to the parameter, not through the gradient.
  // Throws UsageError on non-finite gradients; the step is rejected before
  // any parameter changes.
  void step(double lr_override = -1.0);

  void zero_grad() { params_.zero_grad(); }
  std::int64_t step_count() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }
  ParamList& params() { return params_; }

 private:
  ParamList params_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

struct OneCycleConfig {
  double max_lr = 1e-3;
  std::int64_t total_steps = 1;
  double warmup_frac = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;
};

// Cosine-annealed 1cycle schedule: max_lr/div_factor rises to max_lr at the
// warmup end, then anneals to max_lr/final_div_factor at the last step. The
// peak value is attained exactly once.
double onecycle_lr(std::int64_t step, const OneCycleConfig& cfg);

}  // namespace tsbench
