#include "persel/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace persel::nd {

namespace {

double eval_once(const std::function<Var(Tape&)>& build) {
  Tape tape;
  Var loss = build(tape);
  const Tensor& v = tape.value(loss);
  if (v.numel() != 1) throw std::invalid_argument("gradient_check: loss must be scalar");
  const double x = v.at(0);
  if (!std::isfinite(x)) throw std::runtime_error("gradient_check: non-finite loss");
  return x;
}

}  // namespace

GradCheckReport gradient_check(ParamStore& store, const std::function<Var(Tape&)>& build,
                               double epsilon) {
  if (epsilon < 1e-6 || epsilon > 1e-4)
    throw std::invalid_argument("gradient_check: epsilon must be in [1e-6, 1e-4]");

  store.zero_grads();
  {
    Tape tape;
    Var loss = build(tape);
    if (tape.value(loss).numel() != 1)
      throw std::invalid_argument("gradient_check: loss must be scalar");
    if (!std::isfinite(tape.value(loss).at(0)))
      throw std::runtime_error("gradient_check: non-finite loss");
    tape.backward(loss);
  }

  GradCheckReport report;
  for (auto& [name, p] : store) {
    for (Index i = p.frozen_values; i < p.value.numel(); ++i) {
      const double saved = p.value.at(i);
      p.value.at(i) = saved + epsilon;
      const double fp = eval_once(build);
      p.value.at(i) = saved - epsilon;
      const double fm = eval_once(build);
      p.value.at(i) = saved;

      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double analytic = p.grad.at(i);
      const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace persel::nd
