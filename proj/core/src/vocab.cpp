#include "persel/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "persel/corpus.hpp"
#include "persel/tokenize.hpp"

namespace persel::corpus {

namespace {

void fill_from_file(nd::Tensor& table, const Vocab& vocab, const std::string& path,
                    nd::Index dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (static_cast<nd::Index>(vals.size()) != dim) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": token '" + token +
                               "' has " + std::to_string(vals.size()) + " values, expected " +
                               std::to_string(dim));
    }
    const nd::Index id = vocab.word_id(token);
    if (id < Vocab::kFirstWord) continue;  // not in the corpus, or a reserved id
    for (nd::Index j = 0; j < dim; ++j) table.at(id, j) = vals[static_cast<std::size_t>(j)];
  }
}

}  // namespace

void Vocab::index() {
  word_to_id_.clear();
  for (std::size_t i = 0; i < words_.size(); ++i)
    word_to_id_[words_[i]] = static_cast<nd::Index>(i);
  char_to_id_.clear();
  for (std::size_t i = 0; i < chars_.size(); ++i)
    char_to_id_[chars_[i]] = static_cast<nd::Index>(i);
}

Vocab Vocab::from_parts(std::vector<std::string> words, std::vector<char> chars, nd::Tensor fixed,
                        nd::Tensor trained) {
  Vocab v;
  v.words_ = std::move(words);
  v.chars_ = std::move(chars);
  v.fixed_ = std::move(fixed);
  v.trained_ = std::move(trained);
  v.index();
  return v;
}

Vocab build_vocab(const std::vector<DialogueRecord>& corpus, const std::string& fixed_path,
                  const std::string& trained_path, nd::Index fixed_dim, nd::Index trained_dim) {
  std::set<std::string> types;
  std::set<char> char_types;
  auto scan = [&](const std::string& text) {
    for (const std::string& tok : tokenize(text)) {
      types.insert(tok);
      for (char c : tok) char_types.insert(c);
    }
  };
  for (const DialogueRecord& rec : corpus) {
    for (const auto* persona :
         {&rec.persona_a, &rec.persona_a_revised, &rec.persona_b, &rec.persona_b_revised})
      for (const std::string& profile : *persona) scan(profile);
    for (const Turn& t : rec.turns) scan(t.text);
    for (const CandidateSet& cs : rec.candidates)
      for (const std::string& r : cs.responses) scan(r);
  }

  Vocab v;
  v.words_ = {"<pad>", "<cls>", "<sep>", "<oov>"};
  v.words_.insert(v.words_.end(), types.begin(), types.end());
  v.chars_ = {'\0', '\1'};  // padding and out-of-alphabet markers
  v.chars_.insert(v.chars_.end(), char_types.begin(), char_types.end());
  v.index();

  v.fixed_ = nd::Tensor({v.word_count(), fixed_dim});
  v.trained_ = nd::Tensor({v.word_count(), trained_dim});
  if (!fixed_path.empty()) fill_from_file(v.fixed_, v, fixed_path, fixed_dim);
  if (!trained_path.empty()) fill_from_file(v.trained_, v, trained_path, trained_dim);
  return v;
}

}  // namespace persel::corpus
