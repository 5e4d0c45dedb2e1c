#ifndef SEFUN_TAXONOMY_HPP
#define SEFUN_TAXONOMY_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "sefun/errors.hpp"

namespace sefun {

// The fixed two-level sentence function label set. Codes are stable and are
// part of the model file format; do not reorder.

enum class Level1 : std::uint8_t {
  Declarative = 0,   // DE
  Interrogative = 1, // IN
  Imperative = 2,    // IM
  Exclamatory = 3,   // EX
};

inline constexpr std::size_t kNumLevel1 = 4;

enum class Level2 : std::uint8_t {
  PositiveDe = 0,
  NegativeDe = 1,
  DeWithInWords = 2,
  DoubleNegativeDe = 3,
  OtherDe = 4,
  WhStyleIn = 5,
  YesNoIn = 6,
  ANotAIn = 7,
  AlternativeIn = 8,
  InWithTagQuestion = 9,
  Rhetorical = 10,
  InWithBackchannel = 11,
  InWithOpenQuestion = 12,
  ImWithRequest = 13,
  ImWithDissuade = 14,
  ImWithCommand = 15,
  ImWithForbidden = 16,
  ExWithoutToneWords = 17,
  ExWithInterjections = 18,
  ExWithGreetings = 19,
};

inline constexpr std::size_t kNumLevel2 = 20;

// Group sizes: DE 5, IN 8, IM 4, EX 3.
Level1 level1_of(Level2 l2);

// Wire names. Level-1 uses the two-letter code ("DE"), level-2 the full
// canonical spelling ("Yes-no IN").
std::string_view level1_name(Level1 l1);
std::string_view level1_long_name(Level1 l1);
std::string_view level2_name(Level2 l2);

// Lookups are case-insensitive and accept a few aliases ("Other DE" for
// "Other types of DE", long level-1 names). Throw UnknownLabelError.
Level1 parse_level1(std::string_view text);
Level2 parse_level2(std::string_view text);

struct SentenceFunction {
  Level1 level1;
  Level2 level2;

  bool operator==(const SentenceFunction&) const = default;
  // Orders by level-2 code; level-1 is determined by it for valid values.
  bool operator<(const SentenceFunction& o) const { return level2 < o.level2; }
};

// Builds a validated pair from a level-2 label.
inline SentenceFunction make_sf(Level2 l2) { return SentenceFunction{level1_of(l2), l2}; }

bool valid(const SentenceFunction& sf);

// "L1:L2" wire form, e.g. "IN:Yes-no IN".
std::string serialize_label(const SentenceFunction& sf);

// Accepts the canonical "L1:L2" form, a bare level-2 name, and aliases.
// Case-insensitive. Throws UnknownLabelError.
SentenceFunction parse_label(std::string_view text);

}  // namespace sefun

#endif  // SEFUN_TAXONOMY_HPP
