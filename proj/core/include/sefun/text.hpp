#ifndef SEFUN_TEXT_HPP
#define SEFUN_TEXT_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace sefun {

// Decodes UTF-8 into codepoints. Invalid bytes decode as U+FFFD, one byte at
// a time, so no input can throw here.
std::vector<char32_t> decode_utf8(std::string_view text);
std::string encode_utf8(char32_t cp);

bool is_cjk(char32_t cp);
bool is_space_cp(char32_t cp);

// Sentence-delimiting punctuation used by segment_text. The set is fixed:
// 。 ！ ？ ! ? ； ; … ， ,
bool is_segment_delimiter(char32_t cp);

// Splits text at sentence-delimiting punctuation. Each delimiter stays
// attached to the end of its segment. Whitespace-only fragments are dropped.
// Throws EmptyInputError when the whole text trims to nothing.
std::vector<std::string> segment_text(std::string_view text);

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

// Default tokenization: CJK codepoints become single-character tokens, ASCII
// alphanumeric runs become word tokens, whitespace separates, anything else
// is a single-codepoint token.
std::vector<std::string> default_tokenize(std::string_view text);
Tokenizer default_tokenizer();

}  // namespace sefun

#endif  // SEFUN_TEXT_HPP
