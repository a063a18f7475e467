#pragma once

// UTF-8 helpers shared by the corpus, preprocess and tokenizer modules.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fnd::text {

/// Decodes UTF-8; malformed sequences decode to U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

std::size_t codepoint_count(std::string_view utf8);

bool is_whitespace(char32_t cp);

/// Splits on runs of Unicode whitespace; never yields empty tokens.
std::vector<std::string> split_whitespace(std::string_view utf8);

/// Collapses whitespace runs to one ASCII space and trims both ends.
std::string collapse_whitespace(std::string_view utf8);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace fnd::text
