#include "persel/matcher.hpp"

#include <stdexcept>

#include "persel/transformer.hpp"

namespace persel::matchers {

std::unique_ptr<Matcher> Matcher::create(const ModelConfig& config, corpus::Vocab vocab,
                                         std::uint64_t init_seed) {
  ModelConfig cfg = config;
  if (cfg.word_vocab == 0) cfg.word_vocab = vocab.word_count();
  if (cfg.char_vocab == 0) cfg.char_vocab = vocab.char_count();
  if (cfg.word_vocab != vocab.word_count() || cfg.char_vocab != vocab.char_count())
    throw std::invalid_argument("model config was built against a different vocabulary");

  switch (cfg.family) {
    case Family::hre:
    case Family::imn:
      return std::make_unique<RecurrentMatcher>(std::move(cfg), std::move(vocab), init_seed);
    case Family::transformer:
      return std::make_unique<TransformerMatcher>(std::move(cfg), std::move(vocab), init_seed);
  }
  throw std::logic_error("unreachable");
}

}  // namespace persel::matchers
