#pragma once

#include <memory>
#include <vector>

#include "persel/corpus.hpp"
#include "persel/model_config.hpp"

namespace persel::matchers {

/// Scoring interface shared by the three model families. Scoring is pure
/// over frozen parameters and safe to call from several threads at once;
/// training (instance_loss + backward) is single-writer.
class Matcher {
 public:
  virtual ~Matcher() = default;

  struct Scored {
    std::vector<double> scores;                       // one per candidate
    std::vector<std::vector<double>> fusion_weights;  // per candidate, may be empty
  };

  /// Scores every candidate of the example in evaluation mode (dropout
  /// off). Higher is better; ranking ties break toward the lower index.
  virtual Scored score(const corpus::MatchingExample& example, bool want_fusion = false) const = 0;

  /// Training loss for one sampled instance. Recurrent families expect
  /// static19 (20-way softmax); the transformer family expects dynamic1
  /// (binary loss on the true/negative pair).
  virtual nd::Var instance_loss(nd::Tape& tape, const corpus::TrainInstance& instance,
                                nd::Rng* dropout_rng) const = 0;

  const ModelConfig& config() const { return config_; }
  nd::ParamStore& params() { return params_; }
  const nd::ParamStore& params() const { return params_; }
  const corpus::Vocab& vocab() const { return vocab_; }

  static std::unique_ptr<Matcher> create(const ModelConfig& config, corpus::Vocab vocab,
                                         std::uint64_t init_seed);

 protected:
  Matcher(ModelConfig config, corpus::Vocab vocab)
      : config_(std::move(config)), vocab_(std::move(vocab)) {}

  ModelConfig config_;
  corpus::Vocab vocab_;
  // forward passes mount parameters read-only; gradients are only written
  // by the externally serialized training path
  mutable nd::ParamStore params_;
};

/// Global bidirectional cross-attention between the concatenated context
/// token vectors and the response token vectors, followed by the
/// [x; aligned; x-aligned; x*aligned] enhancement of both sides.
struct Interaction {
  nd::Var context_enhanced;   // [l_c, 4*width]
  nd::Var response_enhanced;  // [l_r, 4*width]
};
Interaction imn_interact(nd::Tape& tape, nd::Var context_tokens, nd::Var response_tokens);

/// HRE scorer, and with the interaction module enabled the IMN scorer.
class RecurrentMatcher : public Matcher {
 public:
  RecurrentMatcher(ModelConfig config, corpus::Vocab vocab, std::uint64_t init_seed);

  Scored score(const corpus::MatchingExample& example, bool want_fusion) const override;
  nd::Var instance_loss(nd::Tape& tape, const corpus::TrainInstance& instance,
                        nd::Rng* dropout_rng) const override;

  /// All candidate logits on one tape; the shared path for training and
  /// evaluation.
  std::vector<nd::Var> candidate_logits(nd::Tape& tape, const corpus::MatchingExample& example,
                                        nd::Rng* dropout_rng,
                                        std::vector<std::vector<double>>* fusion_out) const;

  /// Test hook: replaces the cross-attention alignment with the identity
  /// (each token aligns to itself), reducing IMN to an HRE-equivalent
  /// scorer up to the enhancement dimensions.
  void set_interaction_enabled(bool on) { interaction_enabled_ = on; }

 private:
  struct Towers;
  bool is_imn_ = false;
  bool interaction_enabled_ = true;
  nd::Rng init_rng_;  // consumed while members build their parameters
  encoders::TextEncoders encoders_;
  nd::BiLstmParams composition_;  // imn only: over enhanced token vectors
  fusion::FusionParams fusion_;
  nd::LinearParams mlp_hidden_;
  nd::LinearParams mlp_out_;
};

}  // namespace persel::matchers
