#include "persel/significance.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace persel::harness {

PairedTestResult paired_ttest(const std::vector<double>& differences) {
  const int n = static_cast<int>(differences.size());
  if (n < 2) throw std::invalid_argument("paired test needs at least two pairs");
  PairedTestResult res;
  res.n = n;
  double mean = 0.0;
  for (double d : differences) mean += d;
  mean /= n;
  res.mean_diff = mean;
  double var = 0.0;
  for (double d : differences) var += (d - mean) * (d - mean);
  var /= (n - 1);
  if (var == 0.0) {
    res.degenerate = true;
    res.p = mean == 0.0 ? 1.0 : 0.0;
    res.t = mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity() * (mean > 0 ? 1 : -1);
    return res;
  }
  res.t = mean / std::sqrt(var / n);
  boost::math::students_t dist(static_cast<double>(n - 1));
  res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.t)));
  return res;
}

PairedTestResult paired_significance(const RankingReport& a, const RankingReport& b) {
  if (a.per_example.size() != b.per_example.size())
    throw std::invalid_argument("paired_significance: reports cover different example counts");
  std::vector<double> diffs;
  diffs.reserve(a.per_example.size());
  for (std::size_t i = 0; i < a.per_example.size(); ++i) {
    if (a.per_example[i].id != b.per_example[i].id)
      throw std::invalid_argument("paired_significance: example ids misaligned at position " +
                                  std::to_string(i));
    diffs.push_back(1.0 / a.per_example[i].rank - 1.0 / b.per_example[i].rank);
  }
  return paired_ttest(diffs);
}

}  // namespace persel::harness
