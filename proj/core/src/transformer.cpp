#include "persel/transformer.hpp"

#include <cmath>
#include <stdexcept>

namespace persel::matchers {

using nd::Index;
using nd::Tape;
using nd::Var;

TransformerMatcher::TransformerMatcher(ModelConfig config, corpus::Vocab vocab,
                                       std::uint64_t init_seed)
    : Matcher(std::move(config), std::move(vocab)),
      init_rng_(nd::Rng(init_seed).substream("init")) {
  const TransformerConfig& tc = config_.transformer;
  if (tc.model_dim % tc.heads != 0)
    throw std::invalid_argument("transformer: model_dim must be divisible by heads");
  const Index d = tc.model_dim;

  nd::Tensor tok = nd::glorot(vocab_.word_count(), d, init_rng_);
  for (Index j = 0; j < d; ++j) tok.at(0, j) = 0.0;  // padding row
  token_table_ = &params_.add("tf.tokens", std::move(tok));
  token_table_->frozen_values = d;
  position_table_ = &params_.add("tf.positions", nd::glorot(tc.max_seq_len, d, init_rng_));
  segment_table_ = &params_.add("tf.segments", nd::glorot(2, d, init_rng_));
  // subtypes start at zero: the untouched model matches the no-subtype one
  subtype_table_ = &params_.add("tf.subtypes", nd::Tensor({3, d}));
  emb_ln_gain_ = &params_.add("tf.emb_ln.gain", nd::Tensor::full({d}, 1.0));
  emb_ln_bias_ = &params_.add("tf.emb_ln.bias", nd::Tensor({d}));

  for (Index l = 0; l < tc.layers; ++l) {
    const std::string p = "tf.layer" + std::to_string(l);
    Block b;
    b.wq = nd::make_linear(params_, p + ".wq", d, d, init_rng_);
    b.wk = nd::make_linear(params_, p + ".wk", d, d, init_rng_);
    b.wv = nd::make_linear(params_, p + ".wv", d, d, init_rng_);
    b.wo = nd::make_linear(params_, p + ".wo", d, d, init_rng_);
    b.ln1_gain = &params_.add(p + ".ln1.gain", nd::Tensor::full({d}, 1.0));
    b.ln1_bias = &params_.add(p + ".ln1.bias", nd::Tensor({d}));
    b.ff1 = nd::make_linear(params_, p + ".ff1", d, tc.ff_dim, init_rng_);
    b.ff2 = nd::make_linear(params_, p + ".ff2", tc.ff_dim, d, init_rng_);
    b.ln2_gain = &params_.add(p + ".ln2.gain", nd::Tensor::full({d}, 1.0));
    b.ln2_bias = &params_.add(p + ".ln2.bias", nd::Tensor({d}));
    blocks_.push_back(b);
  }

  const Index feat = config_.strategy == fusion::Strategy::cra ? d : 2 * d;
  head_ = nd::make_linear(params_, "tf.head", feat, 1, init_rng_);
}

Var TransformerMatcher::encode_stream(Tape& tape, const TokenStream& stream,
                                      const std::vector<std::uint8_t>& valid,
                                      nd::Rng* dropout_rng) const {
  const TransformerConfig& tc = config_.transformer;
  const Index len = stream.length();
  if (len < 1) throw std::invalid_argument("transformer: empty stream");
  if (len > tc.max_seq_len) throw std::invalid_argument("transformer: stream exceeds max length");
  if (!valid.empty() && static_cast<Index>(valid.size()) != len)
    throw std::invalid_argument("transformer: mask length mismatch");

  std::vector<Index> positions(static_cast<std::size_t>(len));
  for (Index i = 0; i < len; ++i) positions[static_cast<std::size_t>(i)] = i;

  Var x = tape.embedding(*token_table_, stream.token_ids);
  x = tape.add(x, tape.embedding(*position_table_, positions));
  x = tape.add(x, tape.embedding(*segment_table_, stream.segment_ids));
  if (tc.subtype_embeddings && !stream.subtype_ids.empty())
    x = tape.add(x, tape.embedding(*subtype_table_, stream.subtype_ids));
  x = tape.layer_norm(x, tape.param(*emb_ln_gain_), tape.param(*emb_ln_bias_));
  if (dropout_rng) x = tape.dropout(x, tc.dropout, *dropout_rng, true);

  const std::vector<std::uint8_t> key_valid =
      valid.empty() ? std::vector<std::uint8_t>(static_cast<std::size_t>(len), 1) : valid;
  const Index heads = tc.heads;
  const Index dh = tc.model_dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  for (const Block& b : blocks_) {
    Var q = nd::linear(tape, x, b.wq);
    Var k = nd::linear(tape, x, b.wk);
    Var v = nd::linear(tape, x, b.wv);
    std::vector<Var> head_outs;
    for (Index h = 0; h < heads; ++h) {
      Var qh = tape.slice_cols(q, h * dh, dh);
      Var kh = tape.slice_cols(k, h * dh, dh);
      Var vh = tape.slice_cols(v, h * dh, dh);
      Var scores = tape.scale(tape.matmul_nt(qh, kh), scale);
      Var attn = tape.masked_softmax_rows(scores, key_valid);
      head_outs.push_back(tape.matmul(attn, vh));
    }
    Var attn_out = nd::linear(tape, tape.hcat(head_outs), b.wo);
    if (dropout_rng) attn_out = tape.dropout(attn_out, tc.dropout, *dropout_rng, true);
    x = tape.layer_norm(tape.add(x, attn_out), tape.param(*b.ln1_gain), tape.param(*b.ln1_bias));
    Var ff = nd::linear(tape, tape.gelu(nd::linear(tape, x, b.ff1)), b.ff2);
    if (dropout_rng) ff = tape.dropout(ff, tc.dropout, *dropout_rng, true);
    x = tape.layer_norm(tape.add(x, ff), tape.param(*b.ln2_gain), tape.param(*b.ln2_bias));
  }
  return x;
}

Var TransformerMatcher::match_logit(Tape& tape, const corpus::MatchingExample& example,
                                    int candidate, nd::Rng* dropout_rng) const {
  const Index budget = config_.transformer.max_seq_len;
  Var feature;
  if (config_.strategy == fusion::Strategy::cra) {
    TokenStream joint = arrange_joint_stream(example, candidate, budget);
    Var enc = encode_stream(tape, joint, {}, dropout_rng);
    feature = tape.row(enc, 0);
  } else {
    TokenStream match = arrange_match_stream(example, candidate, budget);
    TokenStream persona = arrange_persona_stream(example, candidate, config_.strategy, budget);
    Var cls_match = tape.row(encode_stream(tape, match, {}, dropout_rng), 0);
    Var cls_persona = tape.row(encode_stream(tape, persona, {}, dropout_rng), 0);
    std::vector<Var> parts{cls_match, cls_persona};
    feature = tape.concat(parts);
  }
  return tape.reshape(nd::linear(tape, feature, head_), {1});
}

Matcher::Scored TransformerMatcher::score(const corpus::MatchingExample& example,
                                          bool /*want_fusion*/) const {
  Scored out;
  for (std::size_t c = 0; c < example.candidates.size(); ++c) {
    Tape tape;
    Var logit = match_logit(tape, example, static_cast<int>(c), nullptr);
    const double z = tape.value(logit).at(0);
    out.scores.push_back(1.0 / (1.0 + std::exp(-z)));
  }
  return out;
}

Var TransformerMatcher::instance_loss(Tape& tape, const corpus::TrainInstance& instance,
                                      nd::Rng* dropout_rng) const {
  if (instance.mode != corpus::SamplingMode::dynamic1)
    throw std::invalid_argument("the transformer family trains with dynamic1 sampling");
  Var pos = tape.sigmoid_bce(match_logit(tape, *instance.example, instance.positive, dropout_rng), 1.0);
  Var neg = tape.sigmoid_bce(match_logit(tape, *instance.example, instance.negative, dropout_rng), 0.0);
  return tape.scale(tape.add(pos, neg), 0.5);
}

}  // namespace persel::matchers
