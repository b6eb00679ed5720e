#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "persel/tape.hpp"

namespace persel::nd {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // optional stepwise exponential decay: lr * decay_rate^floor(step/decay_every)
  double decay_rate = 1.0;
  std::int64_t decay_every = 0;
};

/// Adam with bias correction. Moment buffers are keyed by parameter name and
/// allocated on first update; the step counter increases by exactly one per
/// step() call. Updates are bit-reproducible for a fixed call order.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  /// Applies one update using the gradients currently held by the params.
  /// Throws "non-finite gradient" and leaves every parameter untouched if
  /// any gradient is not finite.
  void step(ParamStore& params);

  std::int64_t steps_taken() const { return step_; }
  double effective_lr() const;
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };

  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace persel::nd
