#pragma once

#include <string>
#include <vector>

#include "persel/matcher.hpp"
#include "persel/synth.hpp"

namespace persel::testing {

/// Tiny but non-degenerate model config for unit tests.
inline matchers::ModelConfig tiny_config(matchers::Family family, fusion::Strategy strategy) {
  matchers::ModelConfig cfg;
  cfg.family = family;
  cfg.strategy = strategy;
  cfg.encoder.fixed_dim = 6;
  cfg.encoder.trained_dim = 4;
  cfg.encoder.char_dim = 3;
  cfg.encoder.char_widths = {2, 3};
  cfg.encoder.char_filters = 2;
  cfg.encoder.hidden_dim = 3;
  cfg.encoder.ctx_hidden_dim = 3;
  cfg.encoder.dropout = 0.2;
  cfg.transformer.layers = 1;
  cfg.transformer.heads = 2;
  cfg.transformer.model_dim = 8;
  cfg.transformer.ff_dim = 16;
  cfg.transformer.max_seq_len = 64;
  cfg.transformer.dropout = 0.1;
  cfg.mlp_hidden = 8;
  return cfg;
}

/// Small corpus + vocab with deterministic random frozen embeddings.
struct TinyWorld {
  std::vector<corpus::DialogueRecord> records;
  corpus::Vocab vocab;
  std::vector<corpus::MatchingExample> examples;
};

inline TinyWorld tiny_world(std::uint64_t seed = 11,
                            corpus::PersonaConfig pconf = {},
                            int dialogues = 4,
                            corpus::SynthSignal signal = corpus::SynthSignal::both) {
  corpus::SynthSpec spec;
  spec.num_dialogues = dialogues;
  spec.seed = seed;
  spec.signal = signal;
  spec.min_turns = 3;
  spec.max_turns = 5;
  corpus::SynthCorpus synth = corpus::generate_synthetic(spec);

  const std::string fixed = "/tmp/persel_tiny_fixed_" + std::to_string(seed) + ".vec";
  const std::string trained = "/tmp/persel_tiny_trained_" + std::to_string(seed) + ".vec";
  corpus::write_synthetic_embeddings(synth.records, fixed, 6, seed + 1);
  corpus::write_synthetic_embeddings(synth.records, trained, 4, seed + 2);

  TinyWorld world{std::move(synth.records),
                  corpus::build_vocab({}, "", "", 6, 4),
                  {}};
  world.vocab = corpus::build_vocab(world.records, fixed, trained, 6, 4);
  std::remove(fixed.c_str());
  std::remove(trained.c_str());

  corpus::Limits limits;
  limits.max_words_per_utterance = 12;
  auto assembled = corpus::assemble_corpus(world.records, pconf, world.vocab, limits);
  world.examples = std::move(assembled.examples);
  return world;
}

/// Example with a reduced candidate list (keeps the label valid) to make
/// gradient checks affordable.
inline corpus::MatchingExample shrink_candidates(corpus::MatchingExample ex, int keep) {
  std::vector<corpus::TokenizedSentence> cands;
  cands.push_back(ex.candidates[static_cast<std::size_t>(ex.label)]);
  for (int i = 0; static_cast<int>(cands.size()) < keep; ++i) {
    if (i == ex.label) continue;
    cands.push_back(ex.candidates[static_cast<std::size_t>(i)]);
  }
  ex.candidates = std::move(cands);
  ex.label = 0;
  return ex;
}

}  // namespace persel::testing
