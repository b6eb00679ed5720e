#include <stdexcept>

#include "persel/matcher.hpp"

namespace persel::matchers {

using nd::Index;
using nd::Tape;
using nd::Var;

RecurrentMatcher::RecurrentMatcher(ModelConfig config, corpus::Vocab vocab,
                                   std::uint64_t init_seed)
    : Matcher(std::move(config), std::move(vocab)),
      is_imn_(config_.family == Family::imn),
      init_rng_(nd::Rng(init_seed).substream("init")),
      encoders_(params_, config_.encoder, vocab_, init_rng_) {
  if (config_.family == Family::transformer)
    throw std::invalid_argument("recurrent matcher built with transformer config");
  const Index h = config_.encoder.hidden_dim;
  if (is_imn_) {
    // composition over [x; aligned; x-aligned; x*aligned] token vectors
    composition_ = nd::make_bilstm(params_, "imn.comp", 8 * h, h, init_rng_);
  }
  const Index p_dim = config_.encoder.sentence_agr_dim();
  const Index c_dim = config_.encoder.context_agr_dim();
  const Index r_dim = p_dim;
  fusion_ = fusion::make_fusion(params_, "fusion", config_.strategy, p_dim, c_dim, r_dim,
                                init_rng_);
  const Index feat = c_dim + p_dim + r_dim;
  mlp_hidden_ = nd::make_linear(params_, "mlp.hidden", feat, config_.mlp_hidden, init_rng_);
  mlp_out_ = nd::make_linear(params_, "mlp.out", config_.mlp_hidden, 1, init_rng_);
}

namespace {

Var enhance(Tape& tape, Var x, Var aligned) {
  std::vector<Var> parts{x, aligned, tape.sub(x, aligned), tape.mul(x, aligned)};
  return tape.hcat(parts);
}

}  // namespace

Interaction imn_interact(Tape& tape, Var context_tokens, Var response_tokens) {
  const Index l_c = tape.value(context_tokens).dim(0);
  const Index l_r = tape.value(response_tokens).dim(0);
  if (l_c < 1 || l_r < 1) throw std::invalid_argument("imn_interact: empty side");

  Var scores = tape.matmul_nt(context_tokens, response_tokens);  // e_ik = c_i . r_k
  const std::vector<std::uint8_t> resp_valid(static_cast<std::size_t>(l_r), 1);
  const std::vector<std::uint8_t> ctx_valid(static_cast<std::size_t>(l_c), 1);
  Var ctx_aligned = tape.matmul(tape.masked_softmax_rows(scores, resp_valid), response_tokens);
  Var resp_aligned =
      tape.matmul(tape.masked_softmax_rows(tape.transpose(scores), ctx_valid), context_tokens);

  Interaction out;
  out.context_enhanced = enhance(tape, context_tokens, ctx_aligned);
  out.response_enhanced = enhance(tape, response_tokens, resp_aligned);
  return out;
}

std::vector<Var> RecurrentMatcher::candidate_logits(
    Tape& tape, const corpus::MatchingExample& example, nd::Rng* dropout_rng,
    std::vector<std::vector<double>>* fusion_out) const {
  const bool ablated = example.persona_config.ablate_context;

  // profiles never pass through the interaction module
  std::vector<Var> profile_aggs;
  for (const auto& profile : example.persona)
    profile_aggs.push_back(encoders_.encode_sentence(tape, profile, dropout_rng).pooled);
  Var profile_matrix;
  std::vector<std::uint8_t> profile_mask(example.persona.size(), 1);
  if (!profile_aggs.empty()) profile_matrix = tape.vstack(profile_aggs);

  // sentence encodings of the context (shared across candidates)
  std::vector<encoders::TextEncoders::EncodedSentence> utterances;
  for (const auto& u : example.context)
    utterances.push_back(encoders_.encode_sentence(tape, u, dropout_rng));

  // HRE: context tower is independent of the response
  Var hre_context;
  if (!is_imn_) {
    std::vector<Var> utterance_aggs;
    for (const auto& u : utterances) utterance_aggs.push_back(u.pooled);
    hre_context = encoders_.encode_context(tape, utterance_aggs, ablated, dropout_rng);
  }

  std::vector<Var> logits;
  Var shared_fused;  // NA/CA fusion does not depend on the candidate
  for (std::size_t cand = 0; cand < example.candidates.size(); ++cand) {
    auto response = encoders_.encode_sentence(tape, example.candidates[cand], dropout_rng);
    Var context_agg = hre_context;
    Var response_agg = response.pooled;

    if (is_imn_) {
      // global cross-attention between the concatenated context and the
      // response, enhancement, composition, then the usual aggregation
      std::vector<Var> utterance_aggs;
      if (!utterances.empty()) {
        std::vector<Var> hidden_blocks;
        std::vector<Index> lengths;
        for (const auto& u : utterances) {
          hidden_blocks.push_back(u.hiddens);
          lengths.push_back(u.length);
        }
        Var ctx_tokens = hidden_blocks.size() == 1 ? hidden_blocks[0]
                                                   : tape.concat_rows(hidden_blocks);
        const Index l_r = response.length;

        Var ctx_enhanced, resp_enhanced;
        if (interaction_enabled_) {
          Interaction inter = imn_interact(tape, ctx_tokens, response.hiddens);
          ctx_enhanced = inter.context_enhanced;
          resp_enhanced = inter.response_enhanced;
        } else {
          // identity alignment: every token attends to itself
          ctx_enhanced = enhance(tape, ctx_tokens, ctx_tokens);
          resp_enhanced = enhance(tape, response.hiddens, response.hiddens);
        }

        // split the concatenated context back into utterances and compose
        Index offset = 0;
        for (std::size_t u = 0; u < utterances.size(); ++u) {
          Var part = tape.slice_rows(ctx_enhanced, offset, lengths[u]);
          offset += lengths[u];
          Var composed = nd::bilstm_encode(tape, part, lengths[u], composition_);
          if (dropout_rng) composed = tape.dropout(composed, config_.encoder.dropout, *dropout_rng, true);
          utterance_aggs.push_back(encoders_.pool_sentence(tape, composed, lengths[u]));
        }
        Var resp_composed = nd::bilstm_encode(tape, resp_enhanced, l_r, composition_);
        if (dropout_rng)
          resp_composed = tape.dropout(resp_composed, config_.encoder.dropout, *dropout_rng, true);
        response_agg = encoders_.pool_sentence(tape, resp_composed, l_r);
      } else {
        // context-ablated: the response tower still runs through the
        // composition layer so dimensions stay fixed across modes
        Var resp_enh = enhance(tape, response.hiddens, response.hiddens);
        Var resp_composed = nd::bilstm_encode(tape, resp_enh, response.length, composition_);
        if (dropout_rng)
          resp_composed = tape.dropout(resp_composed, config_.encoder.dropout, *dropout_rng, true);
        response_agg = encoders_.pool_sentence(tape, resp_composed, response.length);
      }
      context_agg = encoders_.encode_context(tape, utterance_aggs, ablated, dropout_rng);
    }

    // persona fusion; an absent persona zeroes the slot (persona-ablated)
    Var fused;
    if (example.persona.empty()) {
      fused = tape.zeros({config_.encoder.sentence_agr_dim()});
      if (fusion_out) fusion_out->emplace_back();
    } else {
      // NA never sees the candidate; CA only when the context tower is
      // response-independent (HRE). IMN's context reps vary per candidate.
      const bool candidate_free =
          fusion_.strategy == fusion::Strategy::na ||
          (fusion_.strategy == fusion::Strategy::ca && !is_imn_);
      if (candidate_free && shared_fused.valid()) {
        fused = shared_fused;
        if (fusion_out) fusion_out->push_back(fusion_out->front());
      } else {
        fusion::FusionResult res =
            fusion::fuse(tape, fusion_, profile_matrix, profile_mask, context_agg, response_agg);
        fused = res.fused;
        if (candidate_free) shared_fused = fused;
        if (fusion_out) fusion_out->push_back(tape.value(res.weights).values());
      }
    }

    std::vector<Var> feat_parts{context_agg, fused, response_agg};
    Var feature = tape.concat(feat_parts);
    Var hidden = tape.relu(nd::linear(tape, feature, mlp_hidden_));
    if (dropout_rng) hidden = tape.dropout(hidden, config_.encoder.dropout, *dropout_rng, true);
    logits.push_back(tape.reshape(nd::linear(tape, hidden, mlp_out_), {1}));
  }
  return logits;
}

Matcher::Scored RecurrentMatcher::score(const corpus::MatchingExample& example,
                                        bool want_fusion) const {
  Tape tape;
  std::vector<std::vector<double>> fusion_weights;
  std::vector<Var> logits =
      candidate_logits(tape, example, nullptr, want_fusion ? &fusion_weights : nullptr);
  Scored out;
  for (Var v : logits) out.scores.push_back(tape.value(v).at(0));
  out.fusion_weights = std::move(fusion_weights);
  return out;
}

Var RecurrentMatcher::instance_loss(Tape& tape, const corpus::TrainInstance& instance,
                                    nd::Rng* dropout_rng) const {
  if (instance.mode != corpus::SamplingMode::static19)
    throw std::invalid_argument("recurrent families train with static19 sampling");
  std::vector<Var> logits = candidate_logits(tape, *instance.example, dropout_rng, nullptr);
  std::vector<Var> flat;
  for (Var v : logits) flat.push_back(v);
  Var stacked = tape.concat(flat);
  return tape.softmax_cross_entropy(stacked, instance.positive);
}

}  // namespace persel::matchers
