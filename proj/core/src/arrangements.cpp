#include "persel/arrangements.hpp"

#include <stdexcept>

namespace persel::matchers {

using corpus::Vocab;
using nd::Index;

namespace {

Index span_total(const std::vector<std::vector<Index>>& spans) {
  Index n = 0;
  for (const auto& s : spans) n += static_cast<Index>(s.size());
  return n;
}

std::vector<std::vector<Index>> persona_spans(const corpus::MatchingExample& ex) {
  std::vector<std::vector<Index>> out;
  for (const auto& p : ex.persona) out.push_back(p.word_ids);
  return out;
}

std::vector<std::vector<Index>> context_spans(const corpus::MatchingExample& ex) {
  std::vector<std::vector<Index>> out;
  for (const auto& u : ex.context) out.push_back(u.word_ids);
  return out;
}

void append_span(TokenStream& s, const std::vector<Index>& ids, Index segment, Index subtype,
                 bool with_subtypes) {
  for (Index id : ids) {
    s.token_ids.push_back(id);
    s.segment_ids.push_back(segment);
    if (with_subtypes) s.subtype_ids.push_back(subtype);
  }
}

void append_special(TokenStream& s, Index token, Index segment, Index subtype,
                    bool with_subtypes) {
  s.token_ids.push_back(token);
  s.segment_ids.push_back(segment);
  if (with_subtypes) s.subtype_ids.push_back(subtype);
}

}  // namespace

void truncate_for_transformer(std::vector<std::vector<Index>>& persona,
                              std::vector<std::vector<Index>>& context,
                              std::vector<Index>& response, Index budget, Index n_specials) {
  const Index response_floor = response.empty() ? 0 : 1;
  if (budget < n_specials + response_floor) throw std::invalid_argument("budget too small");

  auto total = [&] { return n_specials + span_total(persona) + span_total(context) +
                            static_cast<Index>(response.size()); };

  // oldest context utterances go first
  while (total() > budget && !context.empty()) context.erase(context.begin());
  // then persona profile tails, last profile first
  while (total() > budget && !persona.empty()) {
    if (persona.back().empty()) {
      persona.pop_back();
    } else {
      persona.back().pop_back();
    }
  }
  // finally the response tail, never below one token
  while (total() > budget && static_cast<Index>(response.size()) > 1) response.pop_back();
  if (total() > budget) throw std::invalid_argument("budget too small");
}

TokenStream arrange_match_stream(const corpus::MatchingExample& example, int candidate,
                                 Index budget) {
  std::vector<std::vector<Index>> persona;  // unused in this stream
  auto context = context_spans(example);
  std::vector<Index> response = example.candidates[static_cast<std::size_t>(candidate)].word_ids;
  truncate_for_transformer(persona, context, response, budget, 3);

  TokenStream s;
  append_special(s, Vocab::kCls, 0, kSubtypeContext, false);
  for (const auto& u : context) append_span(s, u, 0, kSubtypeContext, false);
  append_special(s, Vocab::kSep, 0, kSubtypeResponse, false);
  append_span(s, response, 1, kSubtypeResponse, false);
  append_special(s, Vocab::kSep, 1, kSubtypeResponse, false);
  return s;
}

TokenStream arrange_persona_stream(const corpus::MatchingExample& example, int candidate,
                                   fusion::Strategy strategy, Index budget) {
  auto persona = persona_spans(example);
  std::vector<std::vector<Index>> context;
  std::vector<Index> response;
  Index n_specials = 2;  // [CLS] ... [SEP]
  if (strategy == fusion::Strategy::ca) {
    context = context_spans(example);
    n_specials = 3;
  } else if (strategy == fusion::Strategy::ra) {
    response = example.candidates[static_cast<std::size_t>(candidate)].word_ids;
    n_specials = 3;
  }
  truncate_for_transformer(persona, context, response, budget, n_specials);

  TokenStream s;
  append_special(s, Vocab::kCls, 0, kSubtypePersona, false);
  for (const auto& p : persona) append_span(s, p, 0, kSubtypePersona, false);
  append_special(s, Vocab::kSep, 0, kSubtypePersona, false);
  if (strategy == fusion::Strategy::ca) {
    for (const auto& u : context) append_span(s, u, 1, kSubtypeContext, false);
    append_special(s, Vocab::kSep, 1, kSubtypeContext, false);
  } else if (strategy == fusion::Strategy::ra) {
    append_span(s, response, 1, kSubtypeResponse, false);
    append_special(s, Vocab::kSep, 1, kSubtypeResponse, false);
  }
  return s;
}

TokenStream arrange_joint_stream(const corpus::MatchingExample& example, int candidate,
                                 Index budget) {
  auto persona = persona_spans(example);
  auto context = context_spans(example);
  std::vector<Index> response = example.candidates[static_cast<std::size_t>(candidate)].word_ids;
  truncate_for_transformer(persona, context, response, budget, 3);

  // specials carry the subtype of the span that follows; the leading
  // classifier token takes the first span's
  const Index cls_subtype = !persona.empty() ? kSubtypePersona
                            : !context.empty() ? kSubtypeContext
                                               : kSubtypeResponse;
  TokenStream s;
  append_special(s, Vocab::kCls, 0, cls_subtype, true);
  for (const auto& p : persona) append_span(s, p, 0, kSubtypePersona, true);
  for (const auto& u : context) append_span(s, u, 0, kSubtypeContext, true);
  append_special(s, Vocab::kSep, 0, kSubtypeResponse, true);
  append_span(s, response, 1, kSubtypeResponse, true);
  append_special(s, Vocab::kSep, 1, kSubtypeResponse, true);
  return s;
}

}  // namespace persel::matchers
