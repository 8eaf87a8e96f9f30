#include "flowedit/optim.hpp"

#include <cmath>
#include <numbers>

#include "flowedit/error.hpp"

namespace flowedit {

void Adam::step(ParameterStore& store, double lr) {
  if (m_.empty()) {
    for (const auto& p : store) {
      m_.emplace_back(p->value.rows(), p->value.cols());
      v_.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  require(m_.size() == store.size(), ErrorCode::invalid_argument, "Adam: parameter store layout changed");
  ++t_;
  const double bias1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  std::size_t k = 0;
  for (auto& p : store) {
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    ++k;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double update = (m[i] / bias1) / (std::sqrt(v[i] / bias2) + options_.eps);
      p->value[i] -= lr * (update + options_.weight_decay * p->value[i]);
    }
    require(p->value.all_finite(), ErrorCode::non_finite, "Adam produced non-finite value in '" + p->name + "'");
  }
}

double scheduled_lr(double base_lr, std::size_t iteration, std::size_t total, double warmup_fraction) {
  if (total == 0) return base_lr;
  const auto warmup = static_cast<std::size_t>(std::ceil(warmup_fraction * static_cast<double>(total)));
  if (iteration < warmup) return base_lr * static_cast<double>(iteration + 1) / static_cast<double>(warmup);
  const std::size_t span = total - warmup;
  if (span == 0) return base_lr;
  const double progress = static_cast<double>(iteration - warmup) / static_cast<double>(span);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

double clip_grad_norm(ParameterStore& store, double max_norm) {
  double sq = 0.0;
  for (const auto& p : store)
    for (double g : p->grad.values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& p : store)
      for (double& g : p->grad.values()) g *= factor;
  }
  return norm;
}

}  // namespace flowedit
