#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace narrisk {

/// Normalized word tokens of one utterance or record. Every token is
/// lowercase, carries no whitespace, and is never punctuation-only.
struct TokenSequence {
    std::vector<std::string> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }
    bool operator==(const TokenSequence&) const = default;
};

/// Marker for unintelligible speech, kept verbatim by normalization.
inline constexpr std::string_view kUnknownToken = "unk";

/// Lowercase, split on whitespace, strip leading/trailing punctuation and
/// drop tokens left empty.
TokenSequence normalize_text(std::string_view raw);

/// Tokens joined by single spaces.
std::string join_tokens(const TokenSequence& seq);

namespace utf8 {

/// Decode to code points. Invalid bytes decode as U+FFFD.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view code_points);
void append(std::string& out, char32_t cp);

/// Convert a raw file buffer to UTF-8, honouring UTF-8/UTF-16LE/UTF-16BE
/// byte-order marks. Buffers without a BOM are taken as UTF-8.
std::string from_file_bytes(std::string_view bytes);

char32_t to_lower(char32_t cp);
bool is_space(char32_t cp);
bool is_punct(char32_t cp);

}  // namespace utf8

}  // namespace narrisk
