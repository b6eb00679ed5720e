#pragma once

#include <string>

#include "persel/corpus.hpp"
#include "persel/encoders.hpp"
#include "persel/fusion.hpp"

namespace persel::matchers {

enum class Family { hre, imn, transformer };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct TransformerConfig {
  nd::Index layers = 4;
  nd::Index heads = 4;
  nd::Index model_dim = 128;
  nd::Index ff_dim = 512;
  nd::Index max_seq_len = 320;
  bool subtype_embeddings = true;
  double dropout = 0.1;
};

/// Everything needed to rebuild a model deterministically: family,
/// strategy, encoder and transformer dims, sequence limits, and the vocab
/// extents pinned when the model was first built.
struct ModelConfig {
  Family family = Family::hre;
  fusion::Strategy strategy = fusion::Strategy::na;
  encoders::EncoderConfig encoder;
  TransformerConfig transformer;
  nd::Index mlp_hidden = 256;
  corpus::Limits limits;
  nd::Index word_vocab = 0;  // pinned at build time
  nd::Index char_vocab = 0;

  /// Canonical key=value text, one per line, sorted; the checkpoint's
  /// config block and the config hash both use it.
  std::string canonical_text() const;
  static ModelConfig from_canonical_text(const std::string& text);
};

std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace persel::matchers
