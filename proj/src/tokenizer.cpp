#include "uhd/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "uhd/error.hpp"

namespace uhd {

namespace {

bool is_word_byte(unsigned char c) {
  return c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace

void TokenizerConfig::reindex() {
  if (max_query_tokens == 0 || max_doc_tokens == 0) throw InvalidArgument("tokenizer max lengths must be positive");
  if (unknown_id >= words.size()) throw InvalidArgument("tokenizer unknown id outside vocabulary");
  ids.clear();
  ids.reserve(words.size());
  for (TokenId i = 0; i < words.size(); ++i) {
    if (!ids.emplace(words[i], i).second) throw InvalidArgument("duplicate vocabulary word: " + words[i]);
  }
}

std::vector<std::string> split_words(std::string_view text, bool lowercase) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(lowercase && c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TokenizerConfig build_vocabulary(const std::vector<std::string>& texts, std::size_t max_words, bool lowercase) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) {
    for (auto& w : split_words(t, lowercase)) ++counts[w];
  }
  counts.erase(std::string(kUnknownToken));
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_words) ranked.resize(max_words);

  TokenizerConfig cfg;
  cfg.lowercase = lowercase;
  cfg.words.emplace_back(kUnknownToken);
  for (auto& [w, _] : ranked) cfg.words.push_back(w);
  cfg.unknown_id = 0;
  cfg.reindex();
  return cfg;
}

std::vector<TokenId> tokenize(std::string_view text, const TokenizerConfig& cfg, bool is_query) {
  const std::size_t limit = is_query ? cfg.max_query_tokens : cfg.max_doc_tokens;
  std::vector<TokenId> out;
  for (const auto& w : split_words(text, cfg.lowercase)) {
    if (out.size() == limit) break;
    auto it = cfg.ids.find(w);
    out.push_back(it == cfg.ids.end() ? cfg.unknown_id : it->second);
  }
  if (out.empty()) throw EmptyInput("text has no tokens");
  return out;
}

}  // namespace uhd
