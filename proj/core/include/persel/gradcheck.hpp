#pragma once

#include <functional>
#include <string>

#include "persel/tape.hpp"

namespace persel::nd {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central finite-difference check of a scalar-valued function of the
/// parameters in `store`. `build` must mount whatever parameters it uses
/// via tape.param() and return the scalar loss; it is re-invoked for each
/// probe, so it has to be deterministic (fix any dropout masks).
///
/// The per-coordinate error is |analytic - numeric| / max(1, |analytic|,
/// |numeric|). Throws if the function produces a non-finite value or if
/// epsilon is outside [1e-6, 1e-4].
GradCheckReport gradient_check(ParamStore& store, const std::function<Var(Tape&)>& build,
                               double epsilon = 1e-5);

}  // namespace persel::nd
