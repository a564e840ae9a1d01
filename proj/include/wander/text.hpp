#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace wander {

/// Splits text into lowercase word tokens.
///
/// Rules, applied in order:
///   1. decode UTF-8 (invalid bytes act as separators) and lowercase each
///      code point;
///   2. split on every code point that is not alphanumeric;
///   3. drop tokens shorter than two code points;
///   4. drop tokens on the built-in English stopword list (data/stopwords.txt).
///
/// The function is deterministic and idempotent on its own space-joined output.
std::vector<std::string> tokenize(std::string_view text);

/// The frozen stopword list the tokenizer filters against.
const std::unordered_set<std::string>& stopwords();

/// Joins tokens with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace wander
