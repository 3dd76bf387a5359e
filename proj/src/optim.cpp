#include "tsbench/optim.hpp"

#include <cmath>
#include <numbers>

#include "tsbench/errors.hpp"

namespace tsbench {

AdamW::AdamW(ParamList params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.items.size());
  v_.reserve(params_.items.size());
  for (const auto& [name, t] : params_.items) {
    m_.emplace_back(t.numel(), 0.0);
    v_.emplace_back(t.numel(), 0.0);
  }
}

void AdamW::step(double lr_override) {
  const double lr = lr_override >= 0.0 ? lr_override : cfg_.lr;
  // Validate every gradient first so a bad batch cannot half-update the model.
  for (auto& [name, t] : params_.items) {
    const auto& g = const_cast<Tensor&>(t).grad();
    for (double v : g)
      if (!std::isfinite(v))
        throw UsageError("adamw: non-finite gradient in parameter '" + name + "'");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params_.items.size(); ++p) {
    Tensor& t = params_.items[p].second;
    double* w = t.data();
    const auto& g = t.grad();
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < g.size(); ++i) {
      // decoupled decay
      w[i] -= lr * cfg_.weight_decay * w[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double onecycle_lr(std::int64_t step, const OneCycleConfig& cfg) {
  if (cfg.total_steps < 1) throw UsageError("onecycle: total_steps must be >= 1");
  if (step < 0 || step >= cfg.total_steps)
    throw UsageError("onecycle: step out of range");
  if (cfg.total_steps == 1) return cfg.max_lr;

  std::int64_t warmup_end = static_cast<std::int64_t>(
      std::floor(cfg.warmup_frac * static_cast<double>(cfg.total_steps)));
  warmup_end = std::max<std::int64_t>(1, std::min(warmup_end, cfg.total_steps - 2));

  const double initial = cfg.max_lr / cfg.div_factor;
  const double final_lr = cfg.max_lr / cfg.final_div_factor;
  if (step <= warmup_end) {
    const double t = static_cast<double>(step) / static_cast<double>(warmup_end);
    return initial + (cfg.max_lr - initial) * 0.5 * (1.0 - std::cos(std::numbers::pi * t));
  }
  const double t = static_cast<double>(step - warmup_end) /
                   static_cast<double>(cfg.total_steps - 1 - warmup_end);
  return final_lr + (cfg.max_lr - final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace tsbench
