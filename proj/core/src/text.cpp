#include "sefun/text.hpp"

#include <cctype>

#include "sefun/errors.hpp"

namespace sefun {

std::vector<char32_t> decode_utf8(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char b0 = static_cast<unsigned char>(text[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 >> 5) == 0x6 && i + 1 < text.size()) {
      const unsigned char b1 = static_cast<unsigned char>(text[i + 1]);
      if ((b1 & 0xC0) == 0x80) {
        cp = (char32_t(b0 & 0x1F) << 6) | (b1 & 0x3F);
        len = 2;
      }
    } else if ((b0 >> 4) == 0xE && i + 2 < text.size()) {
      const unsigned char b1 = static_cast<unsigned char>(text[i + 1]);
      const unsigned char b2 = static_cast<unsigned char>(text[i + 2]);
      if ((b1 & 0xC0) == 0x80 && (b2 & 0xC0) == 0x80) {
        cp = (char32_t(b0 & 0x0F) << 12) | (char32_t(b1 & 0x3F) << 6) | (b2 & 0x3F);
        len = 3;
      }
    } else if ((b0 >> 3) == 0x1E && i + 3 < text.size()) {
      const unsigned char b1 = static_cast<unsigned char>(text[i + 1]);
      const unsigned char b2 = static_cast<unsigned char>(text[i + 2]);
      const unsigned char b3 = static_cast<unsigned char>(text[i + 3]);
      if ((b1 & 0xC0) == 0x80 && (b2 & 0xC0) == 0x80 && (b3 & 0xC0) == 0x80) {
        cp = (char32_t(b0 & 0x07) << 18) | (char32_t(b1 & 0x3F) << 12) |
             (char32_t(b2 & 0x3F) << 6) | (b3 & 0x3F);
        len = 4;
      }
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||   // unified ideographs
         (cp >= 0x3400 && cp <= 0x4DBF) ||   // extension A
         (cp >= 0xF900 && cp <= 0xFAFF);     // compatibility ideographs
}

bool is_space_cp(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
         cp == U'\v' || cp == 0x3000 || cp == 0x00A0;
}

bool is_segment_delimiter(char32_t cp) {
  switch (cp) {
    case 0x3002:  // 。
    case 0xFF01:  // ！
    case 0xFF1F:  // ？
    case U'!':
    case U'?':
    case 0xFF1B:  // ；
    case U';':
    case 0x2026:  // …
    case 0xFF0C:  // ，
    case U',':
      return true;
    default:
      return false;
  }
}

namespace {

bool whitespace_only(const std::vector<char32_t>& cps, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    if (!is_space_cp(cps[i])) return false;
  }
  return true;
}

std::string encode_range(const std::vector<char32_t>& cps, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) out += encode_utf8(cps[i]);
  return out;
}

}  // namespace

std::vector<std::string> segment_text(std::string_view text) {
  const std::vector<char32_t> cps = decode_utf8(text);
  if (whitespace_only(cps, 0, cps.size())) {
    throw EmptyInputError("segment_text: input is empty or whitespace-only");
  }
  std::vector<std::string> segments;
  std::size_t start = 0;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (is_segment_delimiter(cps[i])) {
      // Delimiter belongs to the fragment that precedes it.
      if (!whitespace_only(cps, start, i + 1)) {
        segments.push_back(encode_range(cps, start, i + 1));
      }
      start = i + 1;
    }
  }
  if (start < cps.size() && !whitespace_only(cps, start, cps.size())) {
    segments.push_back(encode_range(cps, start, cps.size()));
  }
  return segments;
}

std::vector<std::string> default_tokenize(std::string_view text) {
  const std::vector<char32_t> cps = decode_utf8(text);
  std::vector<std::string> tokens;
  std::string run;  // pending ASCII alphanumeric run
  auto flush = [&] {
    if (!run.empty()) {
      tokens.push_back(run);
      run.clear();
    }
  };
  for (char32_t cp : cps) {
    if (is_space_cp(cp)) {
      flush();
    } else if (cp < 0x80 && (std::isalnum(static_cast<int>(cp)) != 0)) {
      run += static_cast<char>(cp);
    } else {
      flush();
      tokens.push_back(encode_utf8(cp));
    }
  }
  flush();
  return tokens;
}

Tokenizer default_tokenizer() {
  return [](std::string_view text) { return default_tokenize(text); };
}

}  // namespace sefun
