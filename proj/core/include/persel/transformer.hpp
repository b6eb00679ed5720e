#pragma once

#include "persel/arrangements.hpp"
#include "persel/matcher.hpp"

namespace persel::matchers {

/// Transformer-encoder matcher realizing the four input arrangements. The
/// dual arrangements (NA/CA/RA) run two streams through one shared encoder
/// and concatenate the classifier embeddings; the joint arrangement (CRA)
/// runs a single stream with additive subtype embeddings. A single-layer
/// head with a sigmoid turns the feature into a match probability.
class TransformerMatcher : public Matcher {
 public:
  TransformerMatcher(ModelConfig config, corpus::Vocab vocab, std::uint64_t init_seed);

  Scored score(const corpus::MatchingExample& example, bool want_fusion) const override;
  nd::Var instance_loss(nd::Tape& tape, const corpus::TrainInstance& instance,
                        nd::Rng* dropout_rng) const override;

  /// All-position encoding of one stream; position 0 is the classifier
  /// embedding. `valid` masks padded key positions (empty = all valid).
  nd::Var encode_stream(nd::Tape& tape, const TokenStream& stream,
                        const std::vector<std::uint8_t>& valid = {},
                        nd::Rng* dropout_rng = nullptr) const;

  /// Pre-sigmoid match logit for one candidate.
  nd::Var match_logit(nd::Tape& tape, const corpus::MatchingExample& example, int candidate,
                      nd::Rng* dropout_rng) const;

 private:
  struct Block {
    nd::LinearParams wq, wk, wv, wo;
    nd::Param* ln1_gain = nullptr;
    nd::Param* ln1_bias = nullptr;
    nd::LinearParams ff1, ff2;
    nd::Param* ln2_gain = nullptr;
    nd::Param* ln2_bias = nullptr;
  };

  nd::Rng init_rng_;
  nd::Param* token_table_ = nullptr;
  nd::Param* position_table_ = nullptr;
  nd::Param* segment_table_ = nullptr;
  nd::Param* subtype_table_ = nullptr;
  nd::Param* emb_ln_gain_ = nullptr;
  nd::Param* emb_ln_bias_ = nullptr;
  std::vector<Block> blocks_;
  nd::LinearParams head_;
};

}  // namespace persel::matchers
