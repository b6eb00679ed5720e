#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "persel/tensor.hpp"

namespace persel::corpus {

struct DialogueRecord;

/// Token and character id spaces plus the two frozen word matrices
/// (pretrained and corpus-estimated). Id 0 is reserved for padding in both
/// spaces; the matrices never receive gradient.
class Vocab {
 public:
  static constexpr nd::Index kPad = 0;
  static constexpr nd::Index kCls = 1;
  static constexpr nd::Index kSep = 2;
  static constexpr nd::Index kOov = 3;
  static constexpr nd::Index kFirstWord = 4;
  static constexpr nd::Index kCharPad = 0;
  static constexpr nd::Index kCharOov = 1;
  static constexpr nd::Index kFirstChar = 2;

  nd::Index word_id(const std::string& w) const {
    auto it = word_to_id_.find(w);
    return it == word_to_id_.end() ? kOov : it->second;
  }
  nd::Index char_id(char c) const {
    auto it = char_to_id_.find(c);
    return it == char_to_id_.end() ? kCharOov : it->second;
  }

  nd::Index word_count() const { return static_cast<nd::Index>(words_.size()); }
  nd::Index char_count() const { return static_cast<nd::Index>(chars_.size()); }
  const std::string& word(nd::Index id) const { return words_[static_cast<std::size_t>(id)]; }

  nd::Index fixed_dim() const { return fixed_.rank() == 2 ? fixed_.dim(1) : 0; }
  nd::Index trained_dim() const { return trained_.rank() == 2 ? trained_.dim(1) : 0; }
  const nd::Tensor& fixed() const { return fixed_; }
  const nd::Tensor& trained() const { return trained_; }

  const std::vector<std::string>& word_list() const { return words_; }
  const std::vector<char>& char_list() const { return chars_; }

  /// Rebuild from serialized lists and matrices (checkpoint loading).
  static Vocab from_parts(std::vector<std::string> words, std::vector<char> chars,
                          nd::Tensor fixed, nd::Tensor trained);

  friend Vocab build_vocab(const std::vector<DialogueRecord>& corpus,
                           const std::string& fixed_path, const std::string& trained_path,
                           nd::Index fixed_dim, nd::Index trained_dim);

 private:
  void index();

  std::vector<std::string> words_;  // id -> token, specials first
  std::vector<char> chars_;         // id -> character
  std::unordered_map<std::string, nd::Index> word_to_id_;
  std::unordered_map<char, nd::Index> char_to_id_;
  nd::Tensor fixed_;
  nd::Tensor trained_;
};

/// Scans the corpus for word and character types (sorted for determinism)
/// and fills the two frozen matrices from whitespace text files of
/// `token v1 .. vd` lines. Tokens absent from a file get the zero vector;
/// a row of the wrong width is an error naming the file and token. Empty
/// paths give all-zero matrices of the requested width.
Vocab build_vocab(const std::vector<DialogueRecord>& corpus, const std::string& fixed_path,
                  const std::string& trained_path, nd::Index fixed_dim, nd::Index trained_dim);

}  // namespace persel::corpus
