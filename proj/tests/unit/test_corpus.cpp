#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "persel/corpus.hpp"
#include "persel/synth.hpp"
#include "persel/tokenize.hpp"

using namespace persel::corpus;
namespace nd = persel::nd;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/persel_test_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::vector<std::string> candidates20(const std::string& truth, int truth_at) {
  std::vector<std::string> out;
  for (int i = 0; i < 20; ++i)
    out.push_back(i == truth_at ? truth : "filler response number " + std::to_string(i) + " .");
  return out;
}

DialogueRecord two_turn_record() {
  DialogueRecord rec;
  rec.persona_a = {"i ride horses .", "i drink tea .", "i fix clocks ."};
  rec.persona_a_revised = {"horses are my animals .", "tea is my drink .", "clocks obey me ."};
  rec.persona_b = {"i grow tomatoes .", "i sing loudly .", "i nap often ."};
  rec.persona_b_revised = {"tomatoes fear me .", "my singing is loud .", "naps are great ."};
  rec.turns = {{'A', "hello there friend ."}, {'B', "hello to you as well ."}};
  rec.candidates.push_back({});
  rec.candidates.push_back({candidates20("hello to you as well .", 4), 4});
  return rec;
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits edge punctuation") {
  auto toks = tokenize("Hello, World! don't (stop)");
  const std::vector<std::string> want{"hello", ",", "world", "!", "don't", "(", "stop", ")"};
  CHECK(toks == want);
}

TEST_CASE("jsonl round trip preserves a two-turn record") {
  DialogueRecord rec = two_turn_record();
  const std::string path = write_temp("roundtrip.jsonl", "");
  save_corpus_jsonl({rec}, path);
  auto loaded = load_corpus_jsonl(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].turns.size() == 2);
  CHECK(loaded[0].turns[1].text == rec.turns[1].text);
  CHECK(loaded[0].persona_a == rec.persona_a);
  CHECK(loaded[0].candidates[1].answer_index == 4);
  std::remove(path.c_str());
}

TEST_CASE("a full-length dialogue with five-profile personas loads intact") {
  // 14 alternating turns, 5 original + 5 revised profiles per speaker
  DialogueRecord rec;
  for (int i = 0; i < 5; ++i) {
    rec.persona_a.push_back("profile a number " + std::to_string(i) + " .");
    rec.persona_a_revised.push_back("rewritten a number " + std::to_string(i) + " .");
    rec.persona_b.push_back("profile b number " + std::to_string(i) + " .");
    rec.persona_b_revised.push_back("rewritten b number " + std::to_string(i) + " .");
  }
  for (int i = 0; i < 14; ++i) {
    rec.turns.push_back({i % 2 == 0 ? 'A' : 'B', "utterance number " + std::to_string(i) + " ."});
    if (i == 0) {
      rec.candidates.push_back({});
    } else {
      rec.candidates.push_back({candidates20(rec.turns.back().text, i % 20), i % 20});
    }
  }
  const std::string path = write_temp("long.jsonl", "");
  save_corpus_jsonl({rec}, path);
  auto loaded = load_corpus_jsonl(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].turns.size() == 14);
  CHECK(loaded[0].persona_a.size() == 5);
  CHECK(loaded[0].persona_b.size() == 5);
  CHECK(loaded[0].persona_a_revised.size() == 5);
  std::remove(path.c_str());
}

TEST_CASE("parse failures carry the line number") {
  const std::string path = write_temp("bad.jsonl", "{\"persona_a\": [}\n");
  CHECK_THROWS_WITH_AS(load_corpus_jsonl(path), doctest::Contains("line 1"), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("invariant violations are rejected with context") {
  DialogueRecord rec = two_turn_record();

  SUBCASE("non-alternating speakers") {
    rec.turns.push_back({'B', "i spoke twice ."});
    rec.candidates.push_back({});
  }
  SUBCASE("too few profiles") { rec.persona_b.pop_back(); }
  SUBCASE("candidate set without a true response") { rec.candidates[1].answer_index = -1; }
  SUBCASE("wrong candidate count") { rec.candidates[1].responses.pop_back(); }

  const std::string path = write_temp("invalid.jsonl", "");
  save_corpus_jsonl({rec}, path);
  CHECK_THROWS_AS(load_corpus_jsonl(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("assembled example count equals candidate-bearing turns") {
  SynthSpec spec;
  spec.num_dialogues = 12;
  spec.seed = 5;
  SynthCorpus corpus = generate_synthetic(spec);
  Vocab vocab = build_vocab(corpus.records, "", "", 4, 4);
  int with_candidates = 0;
  for (const auto& rec : corpus.records)
    for (std::size_t i = 1; i < rec.candidates.size(); ++i)
      if (rec.candidates[i].present()) ++with_candidates;
  auto res = assemble_corpus(corpus.records, {}, vocab, Limits{});
  CHECK(static_cast<int>(res.examples.size()) == with_candidates);
  CHECK(res.skipped_turns == 0);
}

TEST_CASE("assembly selects personas by speaker and honors ablation") {
  DialogueRecord rec = two_turn_record();
  Vocab vocab = build_vocab({rec}, "", "", 4, 4);
  Limits limits;

  // first reply turn: context is exactly the opener
  auto self_b = assemble_examples(rec, {PersonaSide::self_side, PersonaVersion::original, false},
                                  vocab, limits, 0);
  REQUIRE(self_b.examples.size() == 1);
  const MatchingExample& ex = self_b.examples[0];
  CHECK(ex.context.size() == 1);
  CHECK(ex.label == 4);
  CHECK(ex.id == "0:1");

  // turn 1 is spoken by B: self -> persona_b, partner -> persona_a
  const nd::Index tomato = vocab.word_id("tomatoes");
  const nd::Index horses = vocab.word_id("horses");
  REQUIRE(ex.persona.size() == 3);
  CHECK(ex.persona[1].word_ids[1] == vocab.word_id("sing"));
  bool has_tomato = false;
  for (const auto& p : ex.persona)
    for (nd::Index id : p.word_ids) has_tomato = has_tomato || id == tomato;
  CHECK(has_tomato);

  auto partner = assemble_examples(rec, {PersonaSide::partner, PersonaVersion::original, false},
                                   vocab, limits, 0);
  bool has_horses = false;
  for (const auto& p : partner.examples[0].persona)
    for (nd::Index id : p.word_ids) has_horses = has_horses || id == horses;
  CHECK(has_horses);

  // self and partner persona sets are disjoint at the same turn
  std::set<nd::Index> self_words, partner_words;
  for (const auto& p : self_b.examples[0].persona)
    for (nd::Index id : p.word_ids) self_words.insert(id);
  for (const auto& p : partner.examples[0].persona)
    for (nd::Index id : p.word_ids) partner_words.insert(id);
  for (nd::Index id : self_words)
    if (id >= Vocab::kFirstWord && vocab.word(id) != "." && vocab.word(id) != "i")
      CHECK(partner_words.count(id) == 0);

  auto none = assemble_examples(rec, {PersonaSide::none, PersonaVersion::original, false}, vocab,
                                limits, 0);
  CHECK(none.examples[0].persona.empty());

  auto ablated = assemble_examples(rec, {PersonaSide::self_side, PersonaVersion::original, true},
                                   vocab, limits, 0);
  CHECK(ablated.examples[0].context.empty());
  CHECK(!ablated.examples[0].persona.empty());
}

TEST_CASE("context keeps the last 15 utterances and words keep their prefix") {
  DialogueRecord rec = two_turn_record();
  rec.turns.clear();
  rec.candidates.clear();
  for (int i = 0; i < 20; ++i) {
    rec.turns.push_back({i % 2 == 0 ? 'A' : 'B', "marker" + std::to_string(i) + " spoken here ."});
    rec.candidates.push_back({});
  }
  rec.turns.push_back({'A', "final turn ."});
  rec.candidates.push_back({candidates20("final turn .", 0), 0});

  Vocab vocab = build_vocab({rec}, "", "", 4, 4);
  auto res = assemble_examples(rec, {}, vocab, Limits{}, 0);
  REQUIRE(res.examples.size() == 1);
  const auto& ctx = res.examples[0].context;
  CHECK(ctx.size() == 15);
  // the oldest retained utterance is turn 5 (last 15 of 20 prior turns)
  CHECK(ctx.front().word_ids[0] == vocab.word_id("marker5"));
  CHECK(ctx.back().word_ids[0] == vocab.word_id("marker19"));

  // word-level truncation keeps the first 20 words
  std::string longu = "w0";
  for (int i = 1; i < 30; ++i) longu += " w" + std::to_string(i);
  TokenizedSentence sent = tokenize_sentence(longu, vocab, 20, 18);
  CHECK(sent.length() == 20);
}

TEST_CASE("re-assembling an already-limited record is idempotent") {
  SynthSpec spec;
  spec.num_dialogues = 3;
  spec.seed = 77;
  SynthCorpus corpus = generate_synthetic(spec);
  Vocab vocab = build_vocab(corpus.records, "", "", 4, 4);
  auto once = assemble_corpus(corpus.records, {}, vocab, Limits{});
  auto twice = assemble_corpus(corpus.records, {}, vocab, Limits{});
  REQUIRE(once.examples.size() == twice.examples.size());
  for (std::size_t i = 0; i < once.examples.size(); ++i) {
    CHECK(once.examples[i].id == twice.examples[i].id);
    REQUIRE(once.examples[i].context.size() == twice.examples[i].context.size());
    for (std::size_t u = 0; u < once.examples[i].context.size(); ++u)
      CHECK(once.examples[i].context[u].word_ids == twice.examples[i].context[u].word_ids);
  }
}

TEST_CASE("static19 keeps every candidate behind one label") {
  DialogueRecord rec = two_turn_record();
  Vocab vocab = build_vocab({rec}, "", "", 4, 4);
  auto res = assemble_examples(rec, {}, vocab, Limits{}, 0);
  nd::Rng rng(1);
  TrainInstance inst = sample_negatives(res.examples[0], SamplingMode::static19, rng);
  CHECK(inst.positive == 4);
  CHECK(inst.negative == -1);
  CHECK(inst.example->candidates.size() == 20);
}

TEST_CASE("dynamic1 redraws negatives across epochs") {
  DialogueRecord rec = two_turn_record();
  Vocab vocab = build_vocab({rec}, "", "", 4, 4);
  auto res = assemble_examples(rec, {}, vocab, Limits{}, 0);
  const MatchingExample& ex = res.examples[0];

  nd::Rng root(42);
  // identical seeds give identical draws
  {
    nd::Rng a = root.substream("negatives").fork(3);
    nd::Rng b = root.substream("negatives").fork(3);
    for (int i = 0; i < 50; ++i) {
      TrainInstance ia = sample_negatives(ex, SamplingMode::dynamic1, a);
      TrainInstance ib = sample_negatives(ex, SamplingMode::dynamic1, b);
      CHECK(ia.negative == ib.negative);
      CHECK(ia.negative != ex.label);
    }
  }
  // across two epochs the draw differs with probability 18/19
  int differ = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    nd::Rng e1 = root.substream("negatives").fork(static_cast<std::uint64_t>(2 * t));
    nd::Rng e2 = root.substream("negatives").fork(static_cast<std::uint64_t>(2 * t + 1));
    TrainInstance i1 = sample_negatives(ex, SamplingMode::dynamic1, e1);
    TrainInstance i2 = sample_negatives(ex, SamplingMode::dynamic1, e2);
    if (i1.negative != i2.negative) ++differ;
  }
  const double frac = static_cast<double>(differ) / trials;
  CHECK(std::abs(frac - 18.0 / 19.0) < 0.01);
}

TEST_CASE("vocab maps known tokens and falls back to the zero out-of-vocab row") {
  DialogueRecord rec = two_turn_record();
  const std::string fixed = write_temp("fixed.vec", "tea 1 0 0\nhorses 0 1 0\n");
  const std::string trained = write_temp("trained.vec", "tea 0.5 0.5\n");
  Vocab vocab = build_vocab({rec}, fixed, trained, 3, 2);

  const nd::Index tea = vocab.word_id("tea");
  CHECK(vocab.fixed().at(tea, 0) == 1.0);
  CHECK(vocab.trained().at(tea, 0) == 0.5);
  // in corpus but absent from the files: zero vectors
  const nd::Index naps = vocab.word_id("naps");
  CHECK(naps >= Vocab::kFirstWord);
  for (nd::Index j = 0; j < 3; ++j) CHECK(vocab.fixed().at(naps, j) == 0.0);
  // unknown token maps to the reserved out-of-vocab id
  CHECK(vocab.word_id("zzzunknown") == Vocab::kOov);
  CHECK(vocab.word_id("<pad>") == Vocab::kPad);
  std::remove(fixed.c_str());
  std::remove(trained.c_str());
}

TEST_CASE("embedding rows of the wrong width name the file and token") {
  DialogueRecord rec = two_turn_record();
  const std::string fixed = write_temp("badfixed.vec", "tea 1 0\n");
  CHECK_THROWS_WITH_AS(build_vocab({rec}, fixed, "", 3, 2), doctest::Contains("tea"),
                       std::runtime_error);
  std::remove(fixed.c_str());
}

TEST_CASE("vocab on a toy corpus matches the hand-enumerated type list") {
  DialogueRecord rec;
  rec.persona_a = {"a b .", "c a .", "b c ."};
  rec.persona_a_revised = rec.persona_a;
  rec.persona_b = {"d e .", "e d .", "d d ."};
  rec.persona_b_revised = rec.persona_b;
  rec.turns = {{'A', "a d"}, {'B', "e b"}};
  rec.candidates = {{}, {candidates20("e b", 0), 0}};
  Vocab vocab = build_vocab({rec}, "", "", 2, 2);
  // specials + sorted types: ., a, b, c, d, e and the filler-candidate words
  std::set<std::string> have(vocab.word_list().begin() + Vocab::kFirstWord,
                             vocab.word_list().end());
  for (const std::string& w : {".", "a", "b", "c", "d", "e", "filler", "response", "number"})
    CHECK(have.count(w) == 1);
}

TEST_CASE("synthetic corpora are seed-deterministic") {
  SynthSpec spec;
  spec.num_dialogues = 6;
  spec.seed = 123;
  SynthCorpus a = generate_synthetic(spec);
  SynthCorpus b = generate_synthetic(spec);
  const std::string pa = write_temp("synth_a.jsonl", "");
  const std::string pb = write_temp("synth_b.jsonl", "");
  save_corpus_jsonl(a.records, pa);
  save_corpus_jsonl(b.records, pb);
  std::ifstream fa(pa), fb(pb);
  std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(!sa.empty());
  std::remove(pa.c_str());
  std::remove(pb.c_str());
}

TEST_CASE("persona-signal corpora are solved exactly by a keyword matcher") {
  SynthSpec spec;
  spec.num_dialogues = 25;
  spec.signal = SynthSignal::persona;
  spec.seed = 9;
  SynthCorpus corpus = generate_synthetic(spec);
  const std::set<std::string> topic_set(corpus.topic_words.begin(), corpus.topic_words.end());

  int total = 0, correct = 0;
  for (const auto& rec : corpus.records) {
    for (std::size_t i = 0; i < rec.turns.size(); ++i) {
      if (!rec.candidates[i].present()) continue;
      const bool speaker_a = rec.turns[i].speaker == 'A';
      std::set<std::string> own_topics;
      for (const std::string& prof : (speaker_a ? rec.persona_a : rec.persona_b))
        for (const std::string& tok : tokenize(prof))
          if (topic_set.count(tok)) own_topics.insert(tok);
      int best = -1;
      for (std::size_t c = 0; c < rec.candidates[i].responses.size(); ++c) {
        for (const std::string& tok : tokenize(rec.candidates[i].responses[c]))
          if (own_topics.count(tok)) { best = static_cast<int>(c); break; }
        if (best >= 0) break;
      }
      ++total;
      if (best == rec.candidates[i].answer_index) ++correct;
    }
  }
  CHECK(total > 50);
  CHECK(correct == total);  // hits@1 = 1.0 by construction
}

TEST_CASE("context-signal corpora give persona scoring no edge over chance") {
  SynthSpec spec;
  spec.num_dialogues = 60;
  spec.signal = SynthSignal::context;
  spec.seed = 10;
  SynthCorpus corpus = generate_synthetic(spec);
  const std::set<std::string> topic_set(corpus.topic_words.begin(), corpus.topic_words.end());

  // persona-only scorer: count candidate keywords inside own profiles;
  // ties rank by index, exactly like the evaluation tie-break
  int total = 0, correct = 0;
  for (const auto& rec : corpus.records) {
    for (std::size_t i = 0; i < rec.turns.size(); ++i) {
      if (!rec.candidates[i].present()) continue;
      const bool speaker_a = rec.turns[i].speaker == 'A';
      std::set<std::string> own_topics;
      for (const std::string& prof : (speaker_a ? rec.persona_a : rec.persona_b))
        for (const std::string& tok : tokenize(prof))
          if (topic_set.count(tok)) own_topics.insert(tok);
      int best = 0;
      int best_score = -1;
      for (std::size_t c = 0; c < rec.candidates[i].responses.size(); ++c) {
        int score = 0;
        for (const std::string& tok : tokenize(rec.candidates[i].responses[c]))
          if (own_topics.count(tok)) ++score;
        if (score > best_score) { best_score = score; best = static_cast<int>(c); }
      }
      ++total;
      if (best == rec.candidates[i].answer_index) ++correct;
    }
  }
  const double hits = static_cast<double>(correct) / total;
  CHECK(total > 150);
  CHECK(hits < 0.11);  // chance is 1/20
}

TEST_CASE("topic floor is enforced") {
  SynthSpec spec;
  spec.topics = 19;
  CHECK_THROWS(generate_synthetic(spec));
}

TEST_CASE("parlai text converts best-effort with warnings") {
  const std::string content =
      "1 your persona: i like red .\n"
      "2 your persona: i own a boat .\n"
      "3 your persona: i eat rice .\n"
      "4 partner's persona: i like blue .\n"
      "5 partner's persona: i own a kite .\n"
      "6 partner's persona: i eat beans .\n"
      "garbage line without number\n"
      "7 hi how are you ?\ti am fine thanks .\t\tc0|c1|c2|c3|c4|c5|c6|c7|c8|c9|c10|c11|c12|c13|c14|c15|c16|c17|i am fine thanks .|c19\n";
  const std::string path = write_temp("parlai.txt", content);
  ParlaiReport rep = load_parlai_text(path);
  REQUIRE(rep.records.size() == 1);
  CHECK(rep.warnings.size() == 1);
  const DialogueRecord& rec = rep.records[0];
  CHECK(rec.persona_b.size() == 3);   // "your persona" belongs to the replier
  CHECK(rec.persona_a.size() == 3);
  REQUIRE(rec.turns.size() == 2);
  CHECK(rec.turns[0].speaker == 'A');
  CHECK(rec.turns[1].speaker == 'B');
  CHECK(rec.candidates[1].present());
  CHECK(rec.candidates[1].answer_index == 18);
  std::remove(path.c_str());
}
