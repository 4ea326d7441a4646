#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace corag {

// Word-level tokenization shared by the statistics corpus, the retriever and
// the gateway token accounting: lowercase, whitespace-split, edge punctuation
// stripped, interior punctuation (hyphens, apostrophes) kept.
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

// Codepoint helpers (UTF-8). Exposed for the normalizer used in eval.
char32_t utf8_next(std::string_view s, size_t& pos);
void utf8_append(std::string& out, char32_t cp);
char32_t cp_tolower(char32_t cp);
bool cp_is_punct(char32_t cp);
bool cp_is_space(char32_t cp);

}  // namespace corag
