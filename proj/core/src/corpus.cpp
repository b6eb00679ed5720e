#include "persel/corpus.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "persel/tokenize.hpp"

namespace persel::corpus {

using nlohmann::json;

std::string to_string(PersonaSide s) {
  switch (s) {
    case PersonaSide::self_side: return "self";
    case PersonaSide::partner: return "partner";
    case PersonaSide::none: return "none";
  }
  return "?";
}

std::string to_string(PersonaVersion v) {
  return v == PersonaVersion::original ? "original" : "revised";
}

PersonaSide persona_side_from_string(const std::string& s) {
  if (s == "self") return PersonaSide::self_side;
  if (s == "partner") return PersonaSide::partner;
  if (s == "none") return PersonaSide::none;
  throw std::invalid_argument("persona side must be one of {self, partner, none}, got '" + s + "'");
}

PersonaVersion persona_version_from_string(const std::string& s) {
  if (s == "original") return PersonaVersion::original;
  if (s == "revised") return PersonaVersion::revised;
  throw std::invalid_argument("persona version must be one of {original, revised}, got '" + s + "'");
}

namespace {

std::vector<std::string> string_list(const json& j, const char* key, std::size_t line_no) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw std::runtime_error("line " + std::to_string(line_no) + ": missing array field '" + key + "'");
  std::vector<std::string> out;
  for (const auto& item : j.at(key)) out.push_back(item.get<std::string>());
  return out;
}

void validate_record(const DialogueRecord& rec, std::size_t line_no) {
  auto fail = [line_no](const std::string& msg) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": " + msg);
  };
  for (const auto& [name, persona] :
       {std::pair{"persona_a", &rec.persona_a}, {"persona_a_revised", &rec.persona_a_revised},
        {"persona_b", &rec.persona_b}, {"persona_b_revised", &rec.persona_b_revised}}) {
    if (persona->size() < 3 || persona->size() > 5)
      fail(std::string(name) + " must hold 3 to 5 profiles, got " + std::to_string(persona->size()));
  }
  if (rec.turns.empty()) fail("record has no turns");
  for (std::size_t i = 0; i < rec.turns.size(); ++i) {
    const char sp = rec.turns[i].speaker;
    if (sp != 'A' && sp != 'B') fail("turn " + std::to_string(i) + ": speaker must be A or B");
    if (i > 0 && sp == rec.turns[i - 1].speaker)
      fail("turn " + std::to_string(i) + ": speakers must alternate");
  }
  if (rec.candidates.size() != rec.turns.size())
    fail("candidates list must align with turns (" + std::to_string(rec.candidates.size()) +
         " vs " + std::to_string(rec.turns.size()) + ")");
  for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
    const CandidateSet& cs = rec.candidates[i];
    if (!cs.present()) continue;
    if (cs.responses.size() != 20)
      fail("turn " + std::to_string(i) + ": candidate set must hold exactly 20 responses, got " +
           std::to_string(cs.responses.size()));
    if (cs.answer_index < 0 || cs.answer_index >= static_cast<int>(cs.responses.size()))
      fail("turn " + std::to_string(i) + ": candidate set lacks a true response (answer_index " +
           std::to_string(cs.answer_index) + ")");
  }
}

}  // namespace

std::vector<DialogueRecord> load_corpus_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<DialogueRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    DialogueRecord rec;
    rec.persona_a = string_list(j, "persona_a", line_no);
    rec.persona_a_revised = string_list(j, "persona_a_revised", line_no);
    rec.persona_b = string_list(j, "persona_b", line_no);
    rec.persona_b_revised = string_list(j, "persona_b_revised", line_no);
    if (!j.contains("turns") || !j.at("turns").is_array())
      throw std::runtime_error("line " + std::to_string(line_no) + ": missing array field 'turns'");
    for (const auto& t : j.at("turns")) {
      Turn turn;
      const std::string sp = t.at("speaker").get<std::string>();
      turn.speaker = sp.empty() ? '?' : sp[0];
      turn.text = t.at("text").get<std::string>();
      rec.turns.push_back(std::move(turn));
    }
    if (!j.contains("candidates") || !j.contains("answer_index"))
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": missing 'candidates' or 'answer_index'");
    const auto& cands = j.at("candidates");
    const auto& answers = j.at("answer_index");
    if (!cands.is_array() || !answers.is_array() || cands.size() != answers.size())
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": 'candidates' and 'answer_index' must be aligned arrays");
    for (std::size_t i = 0; i < cands.size(); ++i) {
      CandidateSet cs;
      for (const auto& r : cands[i]) cs.responses.push_back(r.get<std::string>());
      cs.answer_index = answers[i].get<int>();
      rec.candidates.push_back(std::move(cs));
    }
    validate_record(rec, line_no);
    records.push_back(std::move(rec));
  }
  return records;
}

void save_corpus_jsonl(const std::vector<DialogueRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const DialogueRecord& rec : records) {
    json j;
    j["persona_a"] = rec.persona_a;
    j["persona_a_revised"] = rec.persona_a_revised;
    j["persona_b"] = rec.persona_b;
    j["persona_b_revised"] = rec.persona_b_revised;
    json turns = json::array();
    for (const Turn& t : rec.turns)
      turns.push_back({{"speaker", std::string(1, t.speaker)}, {"text", t.text}});
    j["turns"] = std::move(turns);
    json cands = json::array();
    json answers = json::array();
    for (const CandidateSet& cs : rec.candidates) {
      cands.push_back(cs.responses);
      answers.push_back(cs.answer_index);
    }
    j["candidates"] = std::move(cands);
    j["answer_index"] = std::move(answers);
    out << j.dump() << "\n";
  }
}

TokenizedSentence tokenize_sentence(const std::string& text, const Vocab& vocab, int max_words,
                                    int max_chars) {
  TokenizedSentence s;
  std::vector<std::string> words = tokenize(text);
  if (static_cast<int>(words.size()) > max_words) words.resize(static_cast<std::size_t>(max_words));
  for (const std::string& w : words) {
    s.word_ids.push_back(vocab.word_id(w));
    std::vector<nd::Index> chars(static_cast<std::size_t>(max_chars), Vocab::kCharPad);
    const int len = std::min<int>(max_chars, static_cast<int>(w.size()));
    for (int k = 0; k < len; ++k) chars[static_cast<std::size_t>(k)] = vocab.char_id(w[static_cast<std::size_t>(k)]);
    s.char_ids.push_back(std::move(chars));
    s.char_lengths.push_back(len);
  }
  return s;
}

AssemblyResult assemble_examples(const DialogueRecord& record, const PersonaConfig& config,
                                 const Vocab& vocab, const Limits& limits, int record_index) {
  AssemblyResult result;
  for (std::size_t i = 0; i < record.turns.size(); ++i) {
    const CandidateSet& cs = record.candidates[i];
    if (!cs.present()) continue;
    if (i == 0) {
      ++result.skipped_turns;  // a response slot needs at least one prior turn
      continue;
    }
    MatchingExample ex;
    ex.id = std::to_string(record_index) + ":" + std::to_string(i);
    ex.persona_config = config;
    ex.label = cs.answer_index;

    if (!config.ablate_context) {
      const std::size_t first =
          i > static_cast<std::size_t>(limits.max_utterances) ? i - static_cast<std::size_t>(limits.max_utterances) : 0;
      for (std::size_t t = first; t < i; ++t) {
        TokenizedSentence sent = tokenize_sentence(record.turns[t].text, vocab,
                                                   limits.max_words_per_utterance,
                                                   limits.max_chars_per_word);
        if (sent.length() == 0) continue;  // empty utterances contribute nothing
        ex.context.push_back(std::move(sent));
      }
    }

    if (config.side != PersonaSide::none) {
      const char responder = record.turns[i].speaker;
      const bool want_a = (config.side == PersonaSide::self_side) == (responder == 'A');
      const std::vector<std::string>* profiles = nullptr;
      if (config.version == PersonaVersion::original)
        profiles = want_a ? &record.persona_a : &record.persona_b;
      else
        profiles = want_a ? &record.persona_a_revised : &record.persona_b_revised;
      for (const std::string& profile : *profiles) {
        if (static_cast<int>(ex.persona.size()) >= limits.max_profiles) break;
        TokenizedSentence sent = tokenize_sentence(profile, vocab, limits.max_words_per_profile,
                                                   limits.max_chars_per_word);
        if (sent.length() == 0) {
          ++result.dropped_profiles;  // empty profiles are masked out of fusion
          continue;
        }
        ex.persona.push_back(std::move(sent));
      }
    }

    for (const std::string& r : cs.responses)
      ex.candidates.push_back(tokenize_sentence(r, vocab, limits.max_words_per_response,
                                                limits.max_chars_per_word));
    result.examples.push_back(std::move(ex));
  }
  return result;
}

AssemblyResult assemble_corpus(const std::vector<DialogueRecord>& records,
                               const PersonaConfig& config, const Vocab& vocab,
                               const Limits& limits) {
  AssemblyResult all;
  for (std::size_t r = 0; r < records.size(); ++r) {
    AssemblyResult one = assemble_examples(records[r], config, vocab, limits, static_cast<int>(r));
    all.skipped_turns += one.skipped_turns;
    all.dropped_profiles += one.dropped_profiles;
    for (auto& ex : one.examples) all.examples.push_back(std::move(ex));
  }
  return all;
}

TrainInstance sample_negatives(const MatchingExample& example, SamplingMode mode, nd::Rng& rng) {
  TrainInstance inst;
  inst.example = &example;
  inst.mode = mode;
  inst.positive = example.label;
  if (mode == SamplingMode::dynamic1) {
    const auto n = static_cast<std::int64_t>(example.candidates.size());
    if (n < 2) throw std::invalid_argument("sample_negatives: need at least two candidates");
    std::int64_t neg = rng.below(n - 1);
    if (neg >= example.label) ++neg;  // skip the true response
    inst.negative = static_cast<int>(neg);
  }
  return inst;
}

}  // namespace persel::corpus
