#pragma once

#include <ostream>
#include <vector>

#include "persel/adam.hpp"
#include "persel/matcher.hpp"
#include "persel/metrics.hpp"

namespace persel::harness {

/// Resolved training options. Family defaults: recurrent models take batch
/// 16, rate 0.001 with 0.96 decay every 5000 steps, 10 epochs and static19
/// sampling; the transformer takes batch 12, rate 2e-5, 19 epochs and
/// dynamic1 sampling.
struct TrainOptions {
  std::uint64_t seed = 0;
  int batch_size = 0;     // 0 = family default
  double lr = 0.0;        // 0 = family default
  int max_epochs = 0;     // 0 = family default
  int patience = 3;       // epochs without validation improvement
  double lr_decay_rate = 0.96;
  std::int64_t lr_decay_every = 5000;  // recurrent families only
  bool dropout = true;
  int eval_threads = 1;

  int resolved_batch(matchers::Family f) const {
    return batch_size > 0 ? batch_size : (f == matchers::Family::transformer ? 12 : 16);
  }
  double resolved_lr(matchers::Family f) const {
    return lr > 0 ? lr : (f == matchers::Family::transformer ? 2e-5 : 1e-3);
  }
  int resolved_epochs(matchers::Family f) const {
    return max_epochs > 0 ? max_epochs : (f == matchers::Family::transformer ? 19 : 10);
  }
};

struct TrainResult {
  int best_epoch = -1;
  double best_hits1 = 0.0;
  double best_mrr = 0.0;
  std::int64_t steps = 0;
  bool diverged = false;
  int epochs_run = 0;
};

/// Minimizes the family loss with Adam, validates each epoch, keeps the
/// best model by validation hits@1 (ties break by MRR, then the earlier
/// epoch) and stops early after `patience` epochs without improvement.
/// On divergence (non-finite loss or gradient) the best snapshot so far is
/// restored and the result is flagged. The log stream receives one line
/// per step and per validation pass; with a fixed seed runs are
/// byte-identical.
TrainResult train(matchers::Matcher& matcher, const std::vector<corpus::MatchingExample>& train_set,
                  const std::vector<corpus::MatchingExample>& valid_set, const TrainOptions& options,
                  std::ostream& log);

struct EvalOptions {
  int threads = 1;
  bool fusion_trace = false;
};

struct FusionTraceRow {
  std::string example_id;
  std::string strategy;
  std::vector<double> weights;  // fusion weights for the true candidate
};

/// Ranks every candidate set and aggregates hits@1, hits@5 and MRR.
/// Scoring is pure, so examples are sharded across threads with
/// deterministic, order-preserving aggregation.
RankingReport evaluate(const matchers::Matcher& matcher,
                       const std::vector<corpus::MatchingExample>& examples,
                       const EvalOptions& options = {},
                       std::vector<FusionTraceRow>* fusion_trace = nullptr);

}  // namespace persel::harness
