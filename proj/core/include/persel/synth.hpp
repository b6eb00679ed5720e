#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "persel/corpus.hpp"

namespace persel::corpus {

/// What makes the true response identifiable in generated dialogues:
/// a keyword shared with the responder's persona, with the last context
/// utterance, or with both.
enum class SynthSignal { persona, context, both };

std::string to_string(SynthSignal s);
SynthSignal synth_signal_from_string(const std::string& s);

struct SynthSpec {
  int num_dialogues = 100;
  int topics = 24;          // >= 20 so that 19 negatives can be off-topic
  SynthSignal signal = SynthSignal::both;
  std::uint64_t seed = 0;
  int min_turns = 4;
  int max_turns = 8;
};

struct SynthCorpus {
  std::vector<DialogueRecord> records;
  std::vector<std::string> topic_words;  // the keyword per topic, for oracles
};

/// Seed-deterministic corpus of keyword-themed dialogues. Per dialogue the
/// two speakers get disjoint topic sets as personas; every turn after the
/// opener carries 20 candidates whose true response mentions the signal
/// keyword while the 19 negatives stay off-topic for that signal.
SynthCorpus generate_synthetic(const SynthSpec& spec);

/// Writes a whitespace embedding file with one deterministic random vector
/// per token of the given corpus (plus nothing else).
void write_synthetic_embeddings(const std::vector<DialogueRecord>& records,
                                const std::string& path, nd::Index dim, std::uint64_t seed);

}  // namespace persel::corpus
