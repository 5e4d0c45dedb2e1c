#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sefun/errors.hpp"
#include "sefun/text.hpp"

using namespace sefun;

TEST_CASE("utf-8 decode / encode round-trip") {
  std::string s = "好a1？";
  auto cps = decode_utf8(s);
  REQUIRE(cps.size() == 4);
  std::string back;
  for (char32_t cp : cps) back += encode_utf8(cp);
  CHECK(back == s);
}

TEST_CASE("invalid bytes decode as U+FFFD without throwing") {
  std::string bad = "a\xff\xfe b";
  auto cps = decode_utf8(bad);
  CHECK(cps[1] == char32_t(0xFFFD));
  CHECK(cps[2] == char32_t(0xFFFD));
}

TEST_CASE("cjk detection") {
  CHECK(is_cjk(U'好'));
  CHECK(is_cjk(U'苹'));
  CHECK_FALSE(is_cjk(U'a'));
  CHECK_FALSE(is_cjk(U'？'));
}

TEST_CASE("segment delimiters are the documented set") {
  for (char32_t cp : {U'。', U'！', U'？', U'!', U'?', U'；', U';', U'…', U'，', U','}) {
    CHECK(is_segment_delimiter(cp));
  }
  CHECK_FALSE(is_segment_delimiter(U'.'));
  CHECK_FALSE(is_segment_delimiter(U'好'));
}

TEST_CASE("segment_text keeps the delimiter on its segment") {
  auto segs = segment_text("你好吗？很好。");
  REQUIRE(segs.size() == 2);
  CHECK(segs[0] == "你好吗？");
  CHECK(segs[1] == "很好。");
}

TEST_CASE("segment_text keeps an undelimited tail") {
  auto segs = segment_text("好。还行");
  REQUIRE(segs.size() == 2);
  CHECK(segs[1] == "还行");
}

TEST_CASE("segment_text drops whitespace-only fragments and rejects empty input") {
  auto segs = segment_text("好。   ");
  CHECK(segs.size() == 1);
  CHECK_THROWS_AS(segment_text("   "), EmptyInputError);
  CHECK_THROWS_AS(segment_text(""), EmptyInputError);
}

TEST_CASE("default tokenization: cjk chars, ascii runs, punctuation singletons") {
  auto toks = default_tokenize("苹果abc12好 x？");
  REQUIRE(toks.size() == 6);
  CHECK(toks[0] == "苹");
  CHECK(toks[1] == "果");
  CHECK(toks[2] == "abc12");
  CHECK(toks[3] == "好");
  CHECK(toks[4] == "x");
  CHECK(toks[5] == "？");
}

TEST_CASE("tokenizing whitespace-only text yields nothing") {
  CHECK(default_tokenize("  \t ").empty());
  CHECK(default_tokenize("").empty());
}
