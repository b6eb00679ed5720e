#pragma once

#include <string>
#include <vector>

#include "persel/rng.hpp"
#include "persel/tensor.hpp"
#include "persel/vocab.hpp"

namespace persel::corpus {

struct Turn {
  char speaker = 'A';  // 'A' or 'B'
  std::string text;
};

/// Candidate pool attached to one turn: empty `responses` means the turn
/// carries no response-selection instance.
struct CandidateSet {
  std::vector<std::string> responses;
  int answer_index = -1;
  bool present() const { return !responses.empty(); }
};

struct DialogueRecord {
  std::vector<std::string> persona_a;
  std::vector<std::string> persona_a_revised;
  std::vector<std::string> persona_b;
  std::vector<std::string> persona_b_revised;
  std::vector<Turn> turns;
  std::vector<CandidateSet> candidates;  // aligned with turns
};

enum class PersonaSide { self_side, partner, none };
enum class PersonaVersion { original, revised };

struct PersonaConfig {
  PersonaSide side = PersonaSide::self_side;
  PersonaVersion version = PersonaVersion::original;
  bool ablate_context = false;
};

std::string to_string(PersonaSide s);
std::string to_string(PersonaVersion v);
PersonaSide persona_side_from_string(const std::string& s);
PersonaVersion persona_version_from_string(const std::string& s);

/// Sequence-length caps. Words keep their first `max_chars_per_word`
/// characters, sentences their first N words, contexts their last
/// `max_utterances` turns.
struct Limits {
  int max_chars_per_word = 18;
  int max_words_per_utterance = 20;
  int max_utterances = 15;
  int max_words_per_profile = 15;
  int max_profiles = 5;
  int max_words_per_response = 20;
};

/// One sentence as the models consume it: word ids plus per-word character
/// ids padded to the character cap.
struct TokenizedSentence {
  std::vector<nd::Index> word_ids;
  std::vector<std::vector<nd::Index>> char_ids;  // [n_words][max_chars]
  std::vector<nd::Index> char_lengths;
  nd::Index length() const { return static_cast<nd::Index>(word_ids.size()); }
};

TokenizedSentence tokenize_sentence(const std::string& text, const Vocab& vocab, int max_words,
                                    int max_chars);

/// One ranking instance: a context, the selected persona, 20 candidates and
/// the index of the true response.
struct MatchingExample {
  std::string id;  // "<record_index>:<turn_index>"
  std::vector<TokenizedSentence> context;
  std::vector<TokenizedSentence> persona;
  std::vector<TokenizedSentence> candidates;
  int label = -1;
  PersonaConfig persona_config;
};

// ---------------------------------------------------------------- loading

/// Parses a JSONL corpus (one DialogueRecord per line) and verifies the
/// record invariants: alternating speakers, 3..5 profiles per persona
/// version, candidate sets of exactly 20 with a valid answer index.
/// Errors carry the offending line number.
std::vector<DialogueRecord> load_corpus_jsonl(const std::string& path);

/// Serializes records in the same JSONL schema (deterministic key order).
void save_corpus_jsonl(const std::vector<DialogueRecord>& records, const std::string& path);

struct ParlaiReport {
  std::vector<DialogueRecord> records;
  std::vector<std::string> warnings;  // unparseable lines, with numbers
};

/// Best-effort converter for the numbered tab-separated dialogue text
/// format ("your persona: ...", "partner's persona: ...", then
/// "text<TAB>label<TAB>reward<TAB>cand|cand|..."). An optional second file
/// with the same dialogues supplies the revised personas.
ParlaiReport load_parlai_text(const std::string& path, const std::string& revised_path = "");

// --------------------------------------------------------------- assembly

struct AssemblyResult {
  std::vector<MatchingExample> examples;
  int skipped_turns = 0;    // candidate sets with no prior context
  int dropped_profiles = 0; // profiles that tokenized to nothing
};

/// One example per candidate-bearing turn. Context is every prior turn
/// (last 15 kept), persona is chosen by the config, and ablate_context
/// empties the context while keeping the persona.
AssemblyResult assemble_examples(const DialogueRecord& record, const PersonaConfig& config,
                                 const Vocab& vocab, const Limits& limits, int record_index);

AssemblyResult assemble_corpus(const std::vector<DialogueRecord>& records,
                               const PersonaConfig& config, const Vocab& vocab,
                               const Limits& limits);

// ------------------------------------------------------------- negatives

enum class SamplingMode { static19, dynamic1 };

/// Training view of an example. static19 keeps the whole candidate set
/// behind a softmax label; dynamic1 pairs the true response with one
/// uniformly drawn negative (redraw each epoch by forking the stream).
struct TrainInstance {
  const MatchingExample* example = nullptr;
  SamplingMode mode = SamplingMode::static19;
  int positive = -1;
  int negative = -1;  // dynamic1 only
};

TrainInstance sample_negatives(const MatchingExample& example, SamplingMode mode, nd::Rng& rng);

}  // namespace persel::corpus
