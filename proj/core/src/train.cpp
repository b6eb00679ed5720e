#include "persel/train.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <thread>

namespace persel::harness {

namespace {

using Snapshot = std::map<std::string, nd::Tensor>;

Snapshot take_snapshot(const nd::ParamStore& params) {
  Snapshot snap;
  for (const auto& [name, p] : params) snap[name] = p.value;
  return snap;
}

void restore_snapshot(nd::ParamStore& params, const Snapshot& snap) {
  for (auto& [name, p] : params) p.value = snap.at(name);
}

std::string fmt(const char* pattern, double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

}  // namespace

RankingReport evaluate(const matchers::Matcher& matcher,
                       const std::vector<corpus::MatchingExample>& examples,
                       const EvalOptions& options, std::vector<FusionTraceRow>* fusion_trace) {
  RankingReport report;
  report.per_example.resize(examples.size());
  std::vector<FusionTraceRow> trace_rows;
  if (fusion_trace) trace_rows.resize(examples.size());

  const bool want_trace = fusion_trace != nullptr || options.fusion_trace;
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const corpus::MatchingExample& ex = examples[i];
      matchers::Matcher::Scored scored = matcher.score(ex, want_trace);
      ExampleResult res;
      res.id = ex.id;
      res.rank = rank_of_true(scored.scores, ex.label);
      res.score_true = scored.scores[static_cast<std::size_t>(ex.label)];
      report.per_example[i] = std::move(res);
      if (fusion_trace) {
        FusionTraceRow row;
        row.example_id = ex.id;
        row.strategy = fusion::to_string(matcher.config().strategy);
        if (static_cast<std::size_t>(ex.label) < scored.fusion_weights.size())
          row.weights = scored.fusion_weights[static_cast<std::size_t>(ex.label)];
        trace_rows[i] = std::move(row);
      }
    }
  };

  const int threads = std::max(1, options.threads);
  if (threads == 1 || examples.size() < 2) {
    score_range(0, examples.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (examples.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = static_cast<std::size_t>(t) * chunk;
      const std::size_t end = std::min(begin + chunk, examples.size());
      if (begin >= end) break;
      pool.emplace_back(score_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  report.family = matchers::to_string(matcher.config().family);
  report.strategy = fusion::to_string(matcher.config().strategy);
  report.config_hash = [&] {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      matchers::fnv1a_hash(matcher.config().canonical_text())));
    return std::string(buf);
  }();
  if (!examples.empty()) {
    report.persona_side = corpus::to_string(examples[0].persona_config.side);
    report.persona_version = corpus::to_string(examples[0].persona_config.version);
    report.ablate_context = examples[0].persona_config.ablate_context;
    report.finalize();
  }
  if (fusion_trace) *fusion_trace = std::move(trace_rows);
  return report;
}

TrainResult train(matchers::Matcher& matcher,
                  const std::vector<corpus::MatchingExample>& train_set,
                  const std::vector<corpus::MatchingExample>& valid_set,
                  const TrainOptions& options, std::ostream& log) {
  const matchers::Family family = matcher.config().family;
  const corpus::SamplingMode mode = family == matchers::Family::transformer
                                        ? corpus::SamplingMode::dynamic1
                                        : corpus::SamplingMode::static19;
  const int batch_size = options.resolved_batch(family);
  const int max_epochs = options.resolved_epochs(family);

  nd::AdamConfig adam_cfg;
  adam_cfg.lr = options.resolved_lr(family);
  if (family != matchers::Family::transformer) {
    adam_cfg.decay_rate = options.lr_decay_rate;
    adam_cfg.decay_every = options.lr_decay_every;
  }
  nd::Adam adam(adam_cfg);

  nd::Rng root(options.seed);
  nd::Rng dropout_rng = root.substream("dropout");

  TrainResult result;
  Snapshot best = take_snapshot(matcher.params());
  int epochs_since_improvement = 0;

  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    result.epochs_run = epoch;
    // deterministic per-epoch shuffle
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    nd::Rng shuffle_rng = root.substream("shuffle").fork(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(static_cast<std::int64_t>(i)))]);
    nd::Rng negatives_rng = root.substream("negatives").fork(static_cast<std::uint64_t>(epoch));

    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch_end = std::min(cursor + static_cast<std::size_t>(batch_size), order.size());
      const double inv_batch = 1.0 / static_cast<double>(batch_end - cursor);
      matcher.params().zero_grads();
      double batch_loss = 0.0;
      for (std::size_t i = cursor; i < batch_end; ++i) {
        const corpus::MatchingExample& ex = train_set[order[i]];
        corpus::TrainInstance inst = corpus::sample_negatives(ex, mode, negatives_rng);
        nd::Tape tape;
        nd::Var loss = matcher.instance_loss(tape, inst, options.dropout ? &dropout_rng : nullptr);
        const double loss_value = tape.value(loss).at(0);
        if (!std::isfinite(loss_value)) {
          log << "epoch " << epoch << " diverged: non-finite loss\n";
          restore_snapshot(matcher.params(), best);
          result.diverged = true;
          return result;
        }
        batch_loss += loss_value * inv_batch;
        tape.backward(tape.scale(loss, inv_batch));
      }
      try {
        adam.step(matcher.params());
      } catch (const std::exception& e) {
        log << "epoch " << epoch << " diverged: " << e.what() << "\n";
        restore_snapshot(matcher.params(), best);
        result.diverged = true;
        return result;
      }
      result.steps = adam.steps_taken();
      log << "epoch " << epoch << " step " << adam.steps_taken() << " loss "
          << fmt("%.6f", batch_loss) << "\n";
      cursor = batch_end;
    }

    if (!valid_set.empty()) {
      EvalOptions eval_opts;
      eval_opts.threads = options.eval_threads;
      RankingReport report = evaluate(matcher, valid_set, eval_opts);
      log << "epoch " << epoch << " valid hits1 " << fmt("%.4f", report.hits1) << " hits5 "
          << fmt("%.4f", report.hits5) << " mrr " << fmt("%.4f", report.mrr) << "\n";
      const bool improved = report.hits1 > result.best_hits1 ||
                            (report.hits1 == result.best_hits1 && report.mrr > result.best_mrr);
      if (result.best_epoch < 0 || improved) {
        result.best_epoch = epoch;
        result.best_hits1 = report.hits1;
        result.best_mrr = report.mrr;
        best = take_snapshot(matcher.params());
        epochs_since_improvement = 0;
      } else {
        ++epochs_since_improvement;
        if (epochs_since_improvement >= options.patience) {
          log << "early stop after epoch " << epoch << "\n";
          break;
        }
      }
    } else {
      // no validation split: the latest parameters are the best known
      result.best_epoch = epoch;
      best = take_snapshot(matcher.params());
    }
  }

  restore_snapshot(matcher.params(), best);
  return result;
}

}  // namespace persel::harness
