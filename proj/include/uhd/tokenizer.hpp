#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace uhd {

using TokenId = std::uint32_t;

/// Word-level vocabulary and truncation limits.
struct TokenizerConfig {
  bool lowercase = true;
  std::vector<std::string> words;  // id -> word
  std::unordered_map<std::string, TokenId> ids;
  TokenId unknown_id = 0;
  std::size_t max_query_tokens = 32;
  std::size_t max_doc_tokens = 180;

  std::size_t vocab_size() const noexcept { return words.size(); }

  /// Rebuilds `ids` from `words` and checks the invariants.
  void reindex();
};

inline constexpr std::string_view kUnknownToken = "[UNK]";

/// Splits on whitespace and ASCII punctuation. Bytes >= 0x80 are kept as
/// word characters so UTF-8 words survive intact.
std::vector<std::string> split_words(std::string_view text, bool lowercase);

/// Vocabulary of the `max_words` most frequent words (ties broken
/// lexicographically) plus the unknown token at id 0.
TokenizerConfig build_vocabulary(const std::vector<std::string>& texts, std::size_t max_words, bool lowercase = true);

/// Maps text to ids with unknown fallback, truncated to the query or
/// document limit. Throws EmptyInput when nothing remains.
std::vector<TokenId> tokenize(std::string_view text, const TokenizerConfig& cfg, bool is_query);

}  // namespace uhd
