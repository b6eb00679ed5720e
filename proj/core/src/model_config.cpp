#include "persel/model_config.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

namespace persel::matchers {

std::string to_string(Family f) {
  switch (f) {
    case Family::hre: return "hre";
    case Family::imn: return "imn";
    case Family::transformer: return "transformer";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "hre") return Family::hre;
  if (s == "imn") return Family::imn;
  if (s == "transformer") return Family::transformer;
  throw std::invalid_argument("family must be one of {hre, imn, transformer}, got '" + s + "'");
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ModelConfig::canonical_text() const {
  std::map<std::string, std::string> kv;
  kv["family"] = to_string(family);
  kv["strategy"] = fusion::to_string(strategy);
  kv["enc.fixed_dim"] = std::to_string(encoder.fixed_dim);
  kv["enc.trained_dim"] = std::to_string(encoder.trained_dim);
  kv["enc.char_dim"] = std::to_string(encoder.char_dim);
  {
    std::string w;
    for (nd::Index x : encoder.char_widths) w += (w.empty() ? "" : ",") + std::to_string(x);
    kv["enc.char_widths"] = w;
  }
  kv["enc.char_filters"] = std::to_string(encoder.char_filters);
  kv["enc.hidden_dim"] = std::to_string(encoder.hidden_dim);
  kv["enc.ctx_hidden_dim"] = std::to_string(encoder.ctx_hidden_dim);
  kv["enc.dropout"] = std::to_string(encoder.dropout);
  kv["tf.layers"] = std::to_string(transformer.layers);
  kv["tf.heads"] = std::to_string(transformer.heads);
  kv["tf.model_dim"] = std::to_string(transformer.model_dim);
  kv["tf.ff_dim"] = std::to_string(transformer.ff_dim);
  kv["tf.max_seq_len"] = std::to_string(transformer.max_seq_len);
  kv["tf.subtype"] = transformer.subtype_embeddings ? "1" : "0";
  kv["tf.dropout"] = std::to_string(transformer.dropout);
  kv["mlp_hidden"] = std::to_string(mlp_hidden);
  kv["limits.chars_per_word"] = std::to_string(limits.max_chars_per_word);
  kv["limits.words_per_utterance"] = std::to_string(limits.max_words_per_utterance);
  kv["limits.utterances"] = std::to_string(limits.max_utterances);
  kv["limits.words_per_profile"] = std::to_string(limits.max_words_per_profile);
  kv["limits.profiles"] = std::to_string(limits.max_profiles);
  kv["limits.words_per_response"] = std::to_string(limits.max_words_per_response);
  kv["vocab.words"] = std::to_string(word_vocab);
  kv["vocab.chars"] = std::to_string(char_vocab);
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  return out.str();
}

ModelConfig ModelConfig::from_canonical_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad config line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw std::runtime_error("config text missing key: " + k);
    return it->second;
  };
  ModelConfig c;
  c.family = family_from_string(need("family"));
  c.strategy = fusion::strategy_from_string(need("strategy"));
  c.encoder.fixed_dim = std::stoll(need("enc.fixed_dim"));
  c.encoder.trained_dim = std::stoll(need("enc.trained_dim"));
  c.encoder.char_dim = std::stoll(need("enc.char_dim"));
  {
    c.encoder.char_widths.clear();
    std::istringstream ws(need("enc.char_widths"));
    std::string tok;
    while (std::getline(ws, tok, ',')) c.encoder.char_widths.push_back(std::stoll(tok));
  }
  c.encoder.char_filters = std::stoll(need("enc.char_filters"));
  c.encoder.hidden_dim = std::stoll(need("enc.hidden_dim"));
  c.encoder.ctx_hidden_dim = std::stoll(need("enc.ctx_hidden_dim"));
  c.encoder.dropout = std::stod(need("enc.dropout"));
  c.transformer.layers = std::stoll(need("tf.layers"));
  c.transformer.heads = std::stoll(need("tf.heads"));
  c.transformer.model_dim = std::stoll(need("tf.model_dim"));
  c.transformer.ff_dim = std::stoll(need("tf.ff_dim"));
  c.transformer.max_seq_len = std::stoll(need("tf.max_seq_len"));
  c.transformer.subtype_embeddings = need("tf.subtype") == "1";
  c.transformer.dropout = std::stod(need("tf.dropout"));
  c.mlp_hidden = std::stoll(need("mlp_hidden"));
  c.limits.max_chars_per_word = std::stoi(need("limits.chars_per_word"));
  c.limits.max_words_per_utterance = std::stoi(need("limits.words_per_utterance"));
  c.limits.max_utterances = std::stoi(need("limits.utterances"));
  c.limits.max_words_per_profile = std::stoi(need("limits.words_per_profile"));
  c.limits.max_profiles = std::stoi(need("limits.profiles"));
  c.limits.max_words_per_response = std::stoi(need("limits.words_per_response"));
  c.word_vocab = std::stoll(need("vocab.words"));
  c.char_vocab = std::stoll(need("vocab.chars"));
  return c;
}

}  // namespace persel::matchers
