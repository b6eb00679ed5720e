#include "persel/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace persel::nd {

double Adam::effective_lr() const {
  if (cfg_.decay_every <= 0) return cfg_.lr;
  const auto k = static_cast<double>(step_ / cfg_.decay_every);
  return cfg_.lr * std::pow(cfg_.decay_rate, k);
}

void Adam::step(ParamStore& params) {
  for (const auto& [name, p] : params)
    if (!p.grad.all_finite()) throw std::runtime_error("non-finite gradient");

  const double alpha = effective_lr();
  step_ += 1;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

  for (auto& [name, p] : params) {
    auto it = moments_.find(name);
    if (it == moments_.end()) {
      it = moments_.emplace(name, Moments{Tensor::zeros(p.value.shape()),
                                          Tensor::zeros(p.value.shape())}).first;
    }
    Moments& mo = it->second;
    for (Index i = 0; i < p.value.numel(); ++i) {
      const double g = p.grad.at(i);
      mo.m.at(i) = cfg_.beta1 * mo.m.at(i) + (1.0 - cfg_.beta1) * g;
      mo.v.at(i) = cfg_.beta2 * mo.v.at(i) + (1.0 - cfg_.beta2) * g * g;
      const double mhat = mo.m.at(i) / bc1;
      const double vhat = mo.v.at(i) / bc2;
      p.value.at(i) -= alpha * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace persel::nd
