#include "sefun/taxonomy.hpp"

#include <algorithm>
#include <cctype>

namespace sefun {

namespace {

struct Level2Entry {
  std::string_view name;
  Level1 parent;
};

// Row order fixes the integer codes.
constexpr std::array<Level2Entry, kNumLevel2> kLevel2Table = {{
    {"Positive DE", Level1::Declarative},
    {"Negative DE", Level1::Declarative},
    {"DE with IN words", Level1::Declarative},
    {"Double-negative DE", Level1::Declarative},
    {"Other types of DE", Level1::Declarative},
    {"Wh-style IN", Level1::Interrogative},
    {"Yes-no IN", Level1::Interrogative},
    {"A-not-A IN", Level1::Interrogative},
    {"Alternative IN", Level1::Interrogative},
    {"IN with tag question", Level1::Interrogative},
    {"Rhetorical", Level1::Interrogative},
    {"IN with backchannel", Level1::Interrogative},
    {"IN with open question", Level1::Interrogative},
    {"IM with request", Level1::Imperative},
    {"IM with dissuade", Level1::Imperative},
    {"IM with command", Level1::Imperative},
    {"IM with forbidden", Level1::Imperative},
    {"EX without tone words", Level1::Exclamatory},
    {"EX with interjections", Level1::Exclamatory},
    {"EX with greetings", Level1::Exclamatory},
}};

constexpr std::array<std::string_view, kNumLevel1> kLevel1Codes = {"DE", "IN", "IM", "EX"};
constexpr std::array<std::string_view, kNumLevel1> kLevel1Long = {
    "Declarative", "Interrogative", "Imperative", "Exclamatory"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Level1 level1_of(Level2 l2) { return kLevel2Table[static_cast<std::size_t>(l2)].parent; }

std::string_view level1_name(Level1 l1) { return kLevel1Codes[static_cast<std::size_t>(l1)]; }

std::string_view level1_long_name(Level1 l1) { return kLevel1Long[static_cast<std::size_t>(l1)]; }

std::string_view level2_name(Level2 l2) { return kLevel2Table[static_cast<std::size_t>(l2)].name; }

Level1 parse_level1(std::string_view text) {
  const std::string t = lower(trim(text));
  for (std::size_t i = 0; i < kNumLevel1; ++i) {
    if (t == lower(kLevel1Codes[i]) || t == lower(kLevel1Long[i])) {
      return static_cast<Level1>(i);
    }
  }
  throw UnknownLabelError(std::string(text));
}

Level2 parse_level2(std::string_view text) {
  const std::string t = lower(trim(text));
  for (std::size_t i = 0; i < kNumLevel2; ++i) {
    if (t == lower(kLevel2Table[i].name)) return static_cast<Level2>(i);
  }
  // Alias: the shorthand "Other DE" for the Table-1 spelling.
  if (t == "other de") return Level2::OtherDe;
  throw UnknownLabelError(std::string(text));
}

bool valid(const SentenceFunction& sf) {
  return static_cast<std::size_t>(sf.level2) < kNumLevel2 &&
         sf.level1 == level1_of(sf.level2);
}

std::string serialize_label(const SentenceFunction& sf) {
  std::string out(level1_name(sf.level1));
  out += ':';
  out += level2_name(sf.level2);
  return out;
}

SentenceFunction parse_label(std::string_view text) {
  const std::string_view t = trim(text);
  const std::size_t colon = t.find(':');
  if (colon == std::string_view::npos) {
    // Bare level-2 names are accepted; the parent is implied.
    return make_sf(parse_level2(t));
  }
  Level1 l1;
  Level2 l2;
  try {
    l1 = parse_level1(t.substr(0, colon));
    l2 = parse_level2(t.substr(colon + 1));
  } catch (const UnknownLabelError&) {
    throw UnknownLabelError(std::string(text));
  }
  if (level1_of(l2) != l1) throw UnknownLabelError(std::string(text));
  return SentenceFunction{l1, l2};
}

}  // namespace sefun
