#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace persel::corpus {

/// Lowercases (ASCII), splits on whitespace, and peels leading/trailing
/// punctuation off each chunk into tokens of their own. Inner punctuation
/// (don't, e-mail) stays attached.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace persel::corpus
