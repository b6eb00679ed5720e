#pragma once

#include <vector>

#include "persel/corpus.hpp"
#include "persel/fusion.hpp"

namespace persel::matchers {

/// One transformer input stream: token ids with aligned segment (A/B) and
/// subtype (persona/context/response) ids. Subtypes are only populated for
/// the joint arrangement.
struct TokenStream {
  std::vector<nd::Index> token_ids;
  std::vector<nd::Index> segment_ids;
  std::vector<nd::Index> subtype_ids;  // empty when subtypes are unused
  nd::Index length() const { return static_cast<nd::Index>(token_ids.size()); }
};

constexpr nd::Index kSubtypePersona = 0;
constexpr nd::Index kSubtypeContext = 1;
constexpr nd::Index kSubtypeResponse = 2;

/// Fits (persona, context, response) word spans into `budget` tokens by
/// dropping the oldest context utterances first, then trimming persona
/// profile tails, then the response tail. Specials are always preserved;
/// throws "budget too small" when even the frame cannot fit.
void truncate_for_transformer(std::vector<std::vector<nd::Index>>& persona,
                              std::vector<std::vector<nd::Index>>& context,
                              std::vector<nd::Index>& response, nd::Index budget,
                              nd::Index n_specials);

/// [CLS] context [SEP] response [SEP] — the context-response matching
/// pipeline shared by the dual arrangements.
TokenStream arrange_match_stream(const corpus::MatchingExample& example, int candidate,
                                 nd::Index budget);

/// The persona pipeline of the dual arrangements: persona alone (NA),
/// persona+context (CA) or persona+response (RA).
TokenStream arrange_persona_stream(const corpus::MatchingExample& example, int candidate,
                                   fusion::Strategy strategy, nd::Index budget);

/// The single-stream arrangement: [CLS] persona context [SEP] response
/// [SEP] with subtype ids; specials take the subtype of the span that
/// follows them (the trailing separator keeps the response's).
TokenStream arrange_joint_stream(const corpus::MatchingExample& example, int candidate,
                                 nd::Index budget);

}  // namespace persel::matchers
