#include <fstream>
#include <sstream>
#include <stdexcept>

#include "persel/corpus.hpp"

namespace persel::corpus {

namespace {

struct RawLine {
  int number = 0;
  std::string rest;
};

bool split_numbered(const std::string& line, RawLine& out) {
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0 || i >= line.size() || line[i] != ' ') return false;
  out.number = std::stoi(line.substr(0, i));
  out.rest = line.substr(i + 1);
  return true;
}

std::vector<std::string> split_tabs(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == '\t') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<std::string> split_pipe(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == '|') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

constexpr const char* kYourPersona = "your persona: ";
constexpr const char* kPartnerPersona = "partner's persona: ";

struct Episode {
  std::vector<std::string> your_persona;
  std::vector<std::string> partner_persona;
  // each exchange: partner utterance, our reply, candidate pool
  struct Exchange {
    std::string text;
    std::string label;
    std::vector<std::string> candidates;
  };
  std::vector<Exchange> exchanges;
};

std::vector<Episode> parse_episodes(const std::string& path, std::vector<std::string>& warnings) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dialogue text file: " + path);
  std::vector<Episode> episodes;
  Episode current;
  bool has_content = false;
  int prev_number = 0;
  std::string line;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (has_content) episodes.push_back(std::move(current));
    current = Episode{};
    has_content = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    RawLine raw;
    if (!split_numbered(line, raw)) {
      warnings.push_back(path + ":" + std::to_string(line_no) + ": not a numbered line, skipped");
      continue;
    }
    if (raw.number <= prev_number && raw.number == 1) flush();
    prev_number = raw.number;
    has_content = true;

    if (raw.rest.rfind(kYourPersona, 0) == 0) {
      current.your_persona.push_back(raw.rest.substr(std::string(kYourPersona).size()));
      continue;
    }
    if (raw.rest.rfind(kPartnerPersona, 0) == 0) {
      current.partner_persona.push_back(raw.rest.substr(std::string(kPartnerPersona).size()));
      continue;
    }
    std::vector<std::string> fields = split_tabs(raw.rest);
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
      warnings.push_back(path + ":" + std::to_string(line_no) + ": expected text<TAB>label, skipped");
      continue;
    }
    Episode::Exchange ex;
    ex.text = fields[0];
    ex.label = fields[1];
    if (fields.size() >= 4 && !fields[3].empty()) ex.candidates = split_pipe(fields[3]);
    current.exchanges.push_back(std::move(ex));
  }
  flush();
  return episodes;
}

}  // namespace

ParlaiReport load_parlai_text(const std::string& path, const std::string& revised_path) {
  ParlaiReport report;
  std::vector<Episode> episodes = parse_episodes(path, report.warnings);
  std::vector<Episode> revised;
  if (!revised_path.empty()) revised = parse_episodes(revised_path, report.warnings);

  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    if (ep.your_persona.size() < 3 || ep.partner_persona.size() < 3) {
      report.warnings.push_back("episode " + std::to_string(e + 1) +
                                ": fewer than 3 profiles on a side, skipped");
      continue;
    }
    DialogueRecord rec;
    // the partner speaks first in each exchange; "your persona" describes
    // the speaker who utters the labeled replies
    auto clip = [](std::vector<std::string> v) {
      if (v.size() > 5) v.resize(5);
      return v;
    };
    rec.persona_a = clip(ep.partner_persona);
    rec.persona_b = clip(ep.your_persona);
    if (e < revised.size() && revised[e].partner_persona.size() >= 3 &&
        revised[e].your_persona.size() >= 3) {
      rec.persona_a_revised = clip(revised[e].partner_persona);
      rec.persona_b_revised = clip(revised[e].your_persona);
    } else {
      rec.persona_a_revised = rec.persona_a;
      rec.persona_b_revised = rec.persona_b;
    }

    bool usable = true;
    for (const auto& ex : ep.exchanges) {
      rec.turns.push_back({'A', ex.text});
      rec.candidates.push_back({});
      CandidateSet cs;
      if (!ex.candidates.empty()) {
        cs.responses = ex.candidates;
        for (std::size_t c = 0; c < cs.responses.size(); ++c)
          if (cs.responses[c] == ex.label) cs.answer_index = static_cast<int>(c);
        if (cs.answer_index < 0 || cs.responses.size() != 20) {
          report.warnings.push_back("episode " + std::to_string(e + 1) +
                                    ": candidate pool unusable (size " +
                                    std::to_string(cs.responses.size()) + ", label " +
                                    (cs.answer_index < 0 ? "missing" : "found") + "), dropped");
          cs = CandidateSet{};
        }
      }
      rec.turns.push_back({'B', ex.label});
      rec.candidates.push_back(std::move(cs));
    }
    if (usable && !rec.turns.empty()) report.records.push_back(std::move(rec));
  }
  return report;
}

}  // namespace persel::corpus
