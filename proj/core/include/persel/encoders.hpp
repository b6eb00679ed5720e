#pragma once

#include <span>
#include <vector>

#include "persel/corpus.hpp"
#include "persel/layers.hpp"
#include "persel/tape.hpp"

namespace persel::encoders {

struct EncoderConfig {
  nd::Index fixed_dim = 300;
  nd::Index trained_dim = 100;
  nd::Index char_dim = 8;
  std::vector<nd::Index> char_widths{3, 4, 5};
  nd::Index char_filters = 50;
  nd::Index hidden_dim = 200;      // shared sentence BiLSTM
  nd::Index ctx_hidden_dim = 200;  // second-level context BiLSTM
  double dropout = 0.2;

  nd::Index char_out_dim() const {
    return static_cast<nd::Index>(char_widths.size()) * char_filters;
  }
  nd::Index word_dim() const { return fixed_dim + trained_dim + char_out_dim(); }
  nd::Index sentence_agr_dim() const { return 4 * hidden_dim; }
  nd::Index context_agr_dim() const { return 4 * ctx_hidden_dim; }
};

/// Word representation (frozen pretrained + frozen corpus-estimated +
/// trainable character convolution), one shared sentence BiLSTM for
/// utterances, profiles and responses, and the second-level context BiLSTM.
class TextEncoders {
 public:
  TextEncoders(nd::ParamStore& store, const EncoderConfig& cfg, const corpus::Vocab& vocab,
               nd::Rng& rng);

  /// Per-token vectors [length, word_dim]; padding id 0 embeds to zero in
  /// every part.
  nd::Var embed_words(nd::Tape& tape, const corpus::TokenizedSentence& sentence) const;

  struct EncodedSentence {
    nd::Var hiddens;  // [length, 2*hidden]
    nd::Var pooled;   // [4*hidden] = [max ; last]
    nd::Index length = 0;
  };

  /// One shared parameter set regardless of the sentence's role.
  EncodedSentence encode_sentence(nd::Tape& tape, const corpus::TokenizedSentence& sentence,
                                  nd::Rng* dropout_rng = nullptr) const;

  /// Encodes token vectors already assembled (the interaction module feeds
  /// composed representations through the same pooling path).
  nd::Var pool_sentence(nd::Tape& tape, nd::Var hiddens, nd::Index length) const;

  /// Second-level BiLSTM over utterance aggregates in chronological order,
  /// pooled to the context embedding. Empty input is an error unless the
  /// example is context-ablated, in which case the embedding is zero.
  nd::Var encode_context(nd::Tape& tape, std::span<const nd::Var> utterance_aggregates,
                         bool ablated, nd::Rng* dropout_rng = nullptr) const;

  const EncoderConfig& config() const { return cfg_; }
  const corpus::Vocab& vocab() const { return *vocab_; }

 private:
  EncoderConfig cfg_;
  const corpus::Vocab* vocab_;
  nd::CharConvParams char_conv_;
  nd::BiLstmParams sentence_lstm_;
  nd::BiLstmParams context_lstm_;
};

}  // namespace persel::encoders
