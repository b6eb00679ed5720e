#include "persel/synth.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "persel/tokenize.hpp"

namespace persel::corpus {

namespace {

const char* kTopicWords[] = {
    "archery",  "baking",    "chess",    "cycling",  "dancing",  "fishing",
    "gardening", "hiking",   "juggling", "kayaking", "knitting", "painting",
    "pottery",  "reading",   "running",  "sailing",  "singing",  "skating",
    "skiing",   "surfing",   "swimming", "tennis",   "violin",   "writing",
    "yoga",     "astronomy", "bowling",  "boxing",   "camping",  "climbing",
    "coding",   "cooking",   "drumming", "fencing",  "golfing",  "origami",
    "sewing",   "sketching", "sculpting", "puzzles",  "birdwatching", "carving",
    "quilting", "brewing",   "foraging", "beekeeping", "weaving", "whittling"};
constexpr int kTopicWordCount = static_cast<int>(sizeof(kTopicWords) / sizeof(kTopicWords[0]));

std::string profile_text(const std::string& kw, std::int64_t variant, bool revised) {
  if (!revised) {
    switch (variant % 4) {
      case 0: return "i love " + kw + " .";
      case 1: return "my favorite hobby is " + kw + " .";
      case 2: return "i do " + kw + " every week .";
      default: return "i am really into " + kw + " .";
    }
  }
  switch (variant % 4) {
    case 0: return kw + " is a thing i spend time on .";
    case 1: return "people say i never stop talking about " + kw + " .";
    case 2: return "most weekends are about " + kw + " for me .";
    default: return "you could call me a " + kw + " person .";
  }
}

std::string response_text(const std::string& kw, std::int64_t variant) {
  switch (variant % 4) {
    case 0: return "i really enjoy " + kw + " .";
    case 1: return "oh i spent all day on " + kw + " .";
    case 2: return "for me it is " + kw + " as always .";
    default: return "honestly " + kw + " keeps me busy .";
  }
}

std::string response_with_cue(const std::string& kw, const std::string& cue,
                              std::int64_t variant) {
  switch (variant % 3) {
    case 0: return "i really enjoy " + kw + " . do you like " + cue + " ?";
    case 1: return "oh i spent all day on " + kw + " . how is " + cue + " going ?";
    default: return "honestly " + kw + " keeps me busy . what about " + cue + " ?";
  }
}

std::string opener_text(std::int64_t variant) {
  switch (variant % 3) {
    case 0: return "hello how are you doing today ?";
    case 1: return "hi there nice to meet you .";
    default: return "hey what is new with you ?";
  }
}

std::string opener_with_cue(const std::string& cue, std::int64_t variant) {
  switch (variant % 3) {
    case 0: return "hello there . do you like " + cue + " ?";
    case 1: return "hi nice to meet you . how is " + cue + " going ?";
    default: return "hey what is new ? still doing " + cue + " ?";
  }
}

std::vector<int> sample_distinct(nd::Rng& rng, int count, int bound,
                                 const std::set<int>& exclude) {
  std::vector<int> out;
  std::set<int> taken = exclude;
  while (static_cast<int>(out.size()) < count) {
    const int t = static_cast<int>(rng.below(bound));
    if (taken.count(t)) continue;
    taken.insert(t);
    out.push_back(t);
  }
  return out;
}

}  // namespace

std::string to_string(SynthSignal s) {
  switch (s) {
    case SynthSignal::persona: return "persona";
    case SynthSignal::context: return "context";
    case SynthSignal::both: return "both";
  }
  return "?";
}

SynthSignal synth_signal_from_string(const std::string& s) {
  if (s == "persona") return SynthSignal::persona;
  if (s == "context") return SynthSignal::context;
  if (s == "both") return SynthSignal::both;
  throw std::invalid_argument("signal must be one of {persona, context, both}, got '" + s + "'");
}

SynthCorpus generate_synthetic(const SynthSpec& spec) {
  if (spec.topics < 20)
    throw std::invalid_argument("generate_synthetic: need at least 20 topics for 19 off-topic negatives");
  if (spec.topics > kTopicWordCount)
    throw std::invalid_argument("generate_synthetic: at most " + std::to_string(kTopicWordCount) +
                                " topics available");
  if (spec.min_turns < 2 || spec.max_turns < spec.min_turns)
    throw std::invalid_argument("generate_synthetic: bad turn bounds");

  SynthCorpus corpus;
  for (int t = 0; t < spec.topics; ++t) corpus.topic_words.emplace_back(kTopicWords[t]);
  const auto& topics = corpus.topic_words;

  nd::Rng root(spec.seed);
  for (int d = 0; d < spec.num_dialogues; ++d) {
    nd::Rng rng = root.substream("dialogue").fork(static_cast<std::uint64_t>(d));
    DialogueRecord rec;

    const int n_a = 3 + static_cast<int>(rng.below(3));
    const int n_b = 3 + static_cast<int>(rng.below(3));
    std::vector<int> topics_a = sample_distinct(rng, n_a, spec.topics, {});
    std::set<int> taken(topics_a.begin(), topics_a.end());
    std::vector<int> topics_b = sample_distinct(rng, n_b, spec.topics, taken);
    const std::set<int> persona_union = [&] {
      std::set<int> u(topics_a.begin(), topics_a.end());
      u.insert(topics_b.begin(), topics_b.end());
      return u;
    }();

    for (int t : topics_a) {
      rec.persona_a.push_back(profile_text(topics[static_cast<std::size_t>(t)], rng.below(1000), false));
      rec.persona_a_revised.push_back(profile_text(topics[static_cast<std::size_t>(t)], rng.below(1000), true));
    }
    for (int t : topics_b) {
      rec.persona_b.push_back(profile_text(topics[static_cast<std::size_t>(t)], rng.below(1000), false));
      rec.persona_b_revised.push_back(profile_text(topics[static_cast<std::size_t>(t)], rng.below(1000), true));
    }

    const int n_turns = spec.min_turns + static_cast<int>(rng.below(spec.max_turns - spec.min_turns + 1));

    // pick each turn's keyword first so a turn can cue its successor
    std::vector<int> keyword(static_cast<std::size_t>(n_turns), -1);
    for (int i = 1; i < n_turns; ++i) {
      const bool speaker_a = (i % 2) == 0;
      const std::vector<int>& own = speaker_a ? topics_a : topics_b;
      if (spec.signal == SynthSignal::context) {
        // keywords live outside both personas so profiles carry no signal
        int k;
        do {
          k = static_cast<int>(rng.below(spec.topics));
        } while (persona_union.count(k));
        keyword[static_cast<std::size_t>(i)] = k;
      } else {
        keyword[static_cast<std::size_t>(i)] = own[static_cast<std::size_t>(rng.below(static_cast<std::int64_t>(own.size())))];
      }
    }

    const bool cue_next = spec.signal != SynthSignal::persona;
    for (int i = 0; i < n_turns; ++i) {
      Turn turn;
      turn.speaker = (i % 2) == 0 ? 'A' : 'B';
      const std::int64_t variant = rng.below(1000);
      const int kw = keyword[static_cast<std::size_t>(i)];
      const int next_kw = (cue_next && i + 1 < n_turns) ? keyword[static_cast<std::size_t>(i + 1)] : -1;
      if (i == 0) {
        turn.text = next_kw >= 0 ? opener_with_cue(topics[static_cast<std::size_t>(next_kw)], variant)
                                 : opener_text(variant);
      } else {
        turn.text = next_kw >= 0
                        ? response_with_cue(topics[static_cast<std::size_t>(kw)],
                                            topics[static_cast<std::size_t>(next_kw)], variant)
                        : response_text(topics[static_cast<std::size_t>(kw)], variant);
      }
      rec.turns.push_back(std::move(turn));
    }

    for (int i = 0; i < n_turns; ++i) {
      CandidateSet cs;
      if (i == 0) {
        rec.candidates.push_back(std::move(cs));
        continue;
      }
      const bool speaker_a = (i % 2) == 0;
      const std::vector<int>& own = speaker_a ? topics_a : topics_b;
      const std::set<int> own_set(own.begin(), own.end());
      const int kw = keyword[static_cast<std::size_t>(i)];

      std::vector<int> pool;  // topics negatives may mention
      for (int t = 0; t < spec.topics; ++t) {
        if (t == kw) continue;
        if (spec.signal == SynthSignal::context) {
          if (persona_union.count(t)) continue;
        } else {
          if (own_set.count(t)) continue;
        }
        pool.push_back(t);
      }
      if (pool.empty()) throw std::logic_error("generate_synthetic: empty negative pool");

      cs.answer_index = static_cast<int>(rng.below(20));
      for (int c = 0; c < 20; ++c) {
        if (c == cs.answer_index) {
          cs.responses.push_back(rec.turns[static_cast<std::size_t>(i)].text);
        } else {
          const int neg = pool[static_cast<std::size_t>(rng.below(static_cast<std::int64_t>(pool.size())))];
          cs.responses.push_back(response_text(topics[static_cast<std::size_t>(neg)], rng.below(1000)));
        }
      }
      rec.candidates.push_back(std::move(cs));
    }
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

void write_synthetic_embeddings(const std::vector<DialogueRecord>& records,
                                const std::string& path, nd::Index dim, std::uint64_t seed) {
  std::set<std::string> types;
  auto scan = [&](const std::string& text) {
    for (const std::string& tok : tokenize(text)) types.insert(tok);
  };
  for (const DialogueRecord& rec : records) {
    for (const auto* persona :
         {&rec.persona_a, &rec.persona_a_revised, &rec.persona_b, &rec.persona_b_revised})
      for (const std::string& p : *persona) scan(p);
    for (const Turn& t : rec.turns) scan(t.text);
    for (const CandidateSet& cs : rec.candidates)
      for (const std::string& r : cs.responses) scan(r);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding file: " + path);
  out.precision(8);
  nd::Rng root(seed);
  for (const std::string& tok : types) {
    nd::Rng rng = root.substream(tok);
    out << tok;
    for (nd::Index j = 0; j < dim; ++j) out << " " << rng.uniform(-0.5, 0.5);
    out << "\n";
  }
}

}  // namespace persel::corpus
