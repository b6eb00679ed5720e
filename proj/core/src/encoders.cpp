#include "persel/encoders.hpp"

#include <stdexcept>

namespace persel::encoders {

using nd::Index;
using nd::Tape;
using nd::Var;

TextEncoders::TextEncoders(nd::ParamStore& store, const EncoderConfig& cfg,
                           const corpus::Vocab& vocab, nd::Rng& rng)
    : cfg_(cfg), vocab_(&vocab) {
  if (vocab.fixed_dim() != cfg.fixed_dim || vocab.trained_dim() != cfg.trained_dim)
    throw std::invalid_argument("encoder config does not match vocab embedding widths");
  char_conv_ = nd::make_char_conv(store, "enc.char", vocab.char_count(), cfg.char_dim,
                                  cfg.char_widths, cfg.char_filters, rng);
  sentence_lstm_ = nd::make_bilstm(store, "enc.sent", cfg.word_dim(), cfg.hidden_dim, rng);
  context_lstm_ = nd::make_bilstm(store, "enc.ctx", cfg.sentence_agr_dim(), cfg.ctx_hidden_dim, rng);
}

Var TextEncoders::embed_words(Tape& tape, const corpus::TokenizedSentence& sentence) const {
  const Index len = sentence.length();
  if (len < 1) throw std::invalid_argument("empty sequence");
  for (Index id : sentence.word_ids)
    if (id < 0 || id >= vocab_->word_count())
      throw std::out_of_range("embed_words: token id out of vocab range");

  Var fixed_part = tape.embedding_fixed(vocab_->fixed(), sentence.word_ids);
  Var trained_part = tape.embedding_fixed(vocab_->trained(), sentence.word_ids);

  std::vector<Var> conv_rows;
  conv_rows.reserve(static_cast<std::size_t>(len));
  Var zero_conv;
  for (Index i = 0; i < len; ++i) {
    if (sentence.word_ids[static_cast<std::size_t>(i)] == corpus::Vocab::kPad) {
      // padding tokens embed to zero in every part
      if (!zero_conv.valid()) zero_conv = tape.zeros({char_conv_.out_dim()});
      conv_rows.push_back(zero_conv);
    } else {
      conv_rows.push_back(nd::char_conv_embed(tape, char_conv_,
                                              sentence.char_ids[static_cast<std::size_t>(i)],
                                              sentence.char_lengths[static_cast<std::size_t>(i)]));
    }
  }
  Var conv_part = tape.vstack(conv_rows);
  std::vector<Var> parts{fixed_part, trained_part, conv_part};
  return tape.hcat(parts);
}

TextEncoders::EncodedSentence TextEncoders::encode_sentence(Tape& tape,
                                                            const corpus::TokenizedSentence& s,
                                                            nd::Rng* dropout_rng) const {
  EncodedSentence out;
  out.length = s.length();
  Var emb = embed_words(tape, s);
  if (dropout_rng) emb = tape.dropout(emb, cfg_.dropout, *dropout_rng, true);
  out.hiddens = nd::bilstm_encode(tape, emb, out.length, sentence_lstm_);
  if (dropout_rng) out.hiddens = tape.dropout(out.hiddens, cfg_.dropout, *dropout_rng, true);
  out.pooled = nd::pool_max_last(tape, out.hiddens, out.length);
  return out;
}

Var TextEncoders::pool_sentence(Tape& tape, Var hiddens, Index length) const {
  return nd::pool_max_last(tape, hiddens, length);
}

Var TextEncoders::encode_context(Tape& tape, std::span<const Var> utterance_aggregates,
                                 bool ablated, nd::Rng* dropout_rng) const {
  if (utterance_aggregates.empty()) {
    if (!ablated) throw std::invalid_argument("empty context");
    return tape.zeros({cfg_.context_agr_dim()});
  }
  Var stacked = tape.vstack(utterance_aggregates);
  Var hiddens = nd::bilstm_encode(tape, stacked,
                                  static_cast<Index>(utterance_aggregates.size()), context_lstm_);
  if (dropout_rng) hiddens = tape.dropout(hiddens, cfg_.dropout, *dropout_rng, true);
  return nd::pool_max_last(tape, hiddens, static_cast<Index>(utterance_aggregates.size()));
}

}  // namespace persel::encoders
