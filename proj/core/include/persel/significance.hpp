#pragma once

#include "persel/metrics.hpp"

namespace persel::harness {

struct PairedTestResult {
  double t = 0.0;
  double p = 1.0;
  int n = 0;
  double mean_diff = 0.0;
  /// Zero-variance differences make the t statistic undefined; by
  /// convention p is 1.0 when the mean difference is also zero and 0.0
  /// (significant by construction) when it is not.
  bool degenerate = false;
};

/// Two-sided paired t-test over per-example reciprocal ranks. The reports
/// must cover the identical example set in the same order.
PairedTestResult paired_significance(const RankingReport& a, const RankingReport& b);

/// The same test on raw paired differences (used to pool runs).
PairedTestResult paired_ttest(const std::vector<double>& differences);

}  // namespace persel::harness
