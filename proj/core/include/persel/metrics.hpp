#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace persel::harness {

/// 1-based rank of the true candidate under descending scores; ties break
/// toward the lower candidate index.
int rank_of_true(const std::vector<double>& scores, int true_index);

/// Fraction of ranks <= k. Ranks are 1-based; the list must be non-empty.
double hits_at_k(const std::vector<int>& ranks, int k);

/// Mean reciprocal rank.
double mrr(const std::vector<int>& ranks);

struct ExampleResult {
  std::string id;
  int rank = 0;
  double score_true = 0.0;
};

/// Per-example candidate orderings plus the aggregates, with enough
/// metadata to line reports up in tables and significance tests.
struct RankingReport {
  std::vector<ExampleResult> per_example;
  double hits1 = 0.0;
  double hits5 = 0.0;
  double mrr = 0.0;
  int n = 0;
  std::string config_hash;
  std::string corpus_hash;
  std::uint64_t seed = 0;
  std::string family;
  std::string strategy;
  std::string persona_side;
  std::string persona_version;
  bool ablate_context = false;

  void finalize();  // recomputes aggregates from per_example
};

/// TSV with header `example_id\trank\tscore_true\thits1`.
void write_report_tsv(const RankingReport& report, const std::string& path);
/// Aggregate JSON {hits1, hits5, mrr, n, config_hash, ...metadata}.
void write_report_json(const RankingReport& report, const std::string& path);
RankingReport load_report_json(const std::string& path);

}  // namespace persel::harness
