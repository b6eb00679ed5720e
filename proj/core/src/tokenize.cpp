#include "persel/tokenize.hpp"

#include <cctype>

namespace persel::corpus {

namespace {

bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string chunk;
    chunk.reserve(j - i);
    for (std::size_t k = i; k < j; ++k)
      chunk.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[k]))));
    i = j;

    std::size_t begin = 0, end = chunk.size();
    std::vector<std::string> trailing;
    while (begin < end && is_punct(static_cast<unsigned char>(chunk[begin])))
      out.emplace_back(1, chunk[begin++]);
    while (end > begin && is_punct(static_cast<unsigned char>(chunk[end - 1])))
      trailing.emplace_back(1, chunk[--end]);
    if (end > begin) out.push_back(chunk.substr(begin, end - begin));
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) out.push_back(*it);
  }
  return out;
}

}  // namespace persel::corpus
