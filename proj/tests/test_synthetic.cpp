#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <set>

#include "sefun/errors.hpp"
#include "sefun/synthetic.hpp"

using namespace sefun;

TEST_CASE("default template spec validates and covers every class") {
  TemplateSpec spec = default_template_spec();
  CHECK_NOTHROW(spec.validate());
  std::set<Level2> covered;
  for (const SlotTemplate& t : spec.templates) covered.insert(t.label);
  CHECK(covered.size() == kNumLevel2);
  CHECK(!spec.content_words.empty());
}

TEST_CASE("validate rejects broken specs") {
  TemplateSpec spec = default_template_spec();
  SUBCASE("missing class") {
    spec.templates.pop_back();
    CHECK_THROWS_AS(spec.validate(), Error);
  }
  SUBCASE("template without a slot") {
    spec.templates[0].pattern = {"固", "定"};
    CHECK_THROWS_AS(spec.validate(), Error);
  }
  SUBCASE("content word colliding with an anchor") {
    // First non-slot token of the first template is an anchor word.
    for (const std::string& tok : spec.templates[0].pattern) {
      if (tok != "x" && tok != "y") {
        spec.content_words.push_back(tok);
        break;
      }
    }
    CHECK_THROWS_AS(spec.validate(), Error);
  }
  SUBCASE("duplicate anchor profile") {
    spec.templates.push_back(spec.templates[0]);
    spec.templates.back().label = spec.templates[1].label;
    CHECK_THROWS_AS(spec.validate(), Error);
  }
}

TEST_CASE("generated sentences re-match their own label") {
  TemplateSpec spec = default_template_spec();
  Corpus corpus = gen_synthetic_corpus(spec, 300, {}, 71);
  REQUIRE(corpus.size() == 300);
  for (const ConversationPair& pair : corpus.pairs) {
    for (const Segment* seg : {&pair.query_segments[0], &pair.response_segments[0]}) {
      REQUIRE(seg->functions.size() == 1);
      std::optional<Level2> m = match_template(spec, seg->tokens);
      REQUIRE(m.has_value());
      CHECK(*m == seg->primary().level2);
    }
  }
}

TEST_CASE("generation is deterministic in the seed") {
  TemplateSpec spec = default_template_spec();
  Corpus a = gen_synthetic_corpus(spec, 50, {}, 72);
  Corpus b = gen_synthetic_corpus(spec, 50, {}, 72);
  Corpus c = gen_synthetic_corpus(spec, 50, {}, 73);
  REQUIRE(a.size() == b.size());
  bool all_equal = true, any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    all_equal &= a.pairs[i].query_segments[0].text == b.pairs[i].query_segments[0].text;
    any_diff |= a.pairs[i].query_segments[0].text != c.pairs[i].query_segments[0].text;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("class weights shape the label distribution") {
  TemplateSpec spec = default_template_spec();
  // All mass on two classes.
  std::vector<double> w(kNumLevel2, 0.0);
  w[std::size_t(Level2::PositiveDe)] = 3.0;
  w[std::size_t(Level2::YesNoIn)] = 1.0;
  Corpus corpus = gen_synthetic_corpus(spec, 2000, w, 74);

  std::array<std::size_t, kNumLevel2> counts{};
  for (const ConversationPair& pair : corpus.pairs)
    ++counts[std::size_t(pair.query_segments[0].primary().level2)];

  for (std::size_t k = 0; k < kNumLevel2; ++k) {
    if (k != std::size_t(Level2::PositiveDe) && k != std::size_t(Level2::YesNoIn))
      CHECK(counts[k] == 0);  // zero weight means the class never appears
  }
  // Binomial(2000, 0.75): mean 1500, sigma ~19.4; allow 4 sigma.
  double expected = 1500.0, sigma = std::sqrt(2000.0 * 0.75 * 0.25);
  CHECK(std::abs(double(counts[std::size_t(Level2::PositiveDe)]) - expected) < 4.0 * sigma);
}

TEST_CASE("bad weight vectors are rejected") {
  TemplateSpec spec = default_template_spec();
  CHECK_THROWS_AS(gen_synthetic_corpus(spec, 10, {1.0, 2.0}, 75), InvalidWeightsError);
  std::vector<double> negative(kNumLevel2, 1.0);
  negative[3] = -0.5;
  CHECK_THROWS_AS(gen_synthetic_corpus(spec, 10, negative, 75), InvalidWeightsError);
  std::vector<double> zeros(kNumLevel2, 0.0);
  CHECK_THROWS_AS(gen_synthetic_corpus(spec, 10, zeros, 75), InvalidWeightsError);
}

TEST_CASE("stc weight tables have one entry per class") {
  CHECK(stc_query_weights().size() == kNumLevel2);
  CHECK(stc_response_weights().size() == kNumLevel2);
  for (double w : stc_query_weights()) CHECK(w >= 0.0);
  TemplateSpec spec = default_template_spec();
  CHECK_NOTHROW(gen_synthetic_corpus(spec, 20, stc_query_weights(), 76));
  CHECK_NOTHROW(gen_synthetic_corpus(spec, 20, stc_response_weights(), 76));
}

TEST_CASE("keyword-linked corpus ties the response class to the query keyword") {
  TemplateSpec spec = default_template_spec();
  Corpus corpus = gen_keyword_linked_corpus(spec, 400, {}, 77);
  std::set<std::string> content(spec.content_words.begin(), spec.content_words.end());
  for (const ConversationPair& pair : corpus.pairs) {
    // Find the first content word in the query.
    std::string first;
    for (const std::string& tok : pair.query_segments[0].tokens) {
      if (content.count(tok)) {
        first = tok;
        break;
      }
    }
    REQUIRE(!first.empty());
    CHECK(pair.response_segments[0].primary().level2 == keyword_sf(spec, first));
  }
}

TEST_CASE("linked grid covers every template and content word exactly once") {
  TemplateSpec spec = default_template_spec();
  Corpus grid = gen_linked_grid_corpus(spec, 78);
  CHECK(grid.size() == spec.templates.size() * spec.content_words.size());
  std::set<std::string> seen;
  for (const ConversationPair& pair : grid.pairs) {
    std::string key = pair.query_segments[0].text;
    CHECK(!seen.count(key));
    seen.insert(key);
  }
}

TEST_CASE("match_template returns nullopt for foreign sentences") {
  TemplateSpec spec = default_template_spec();
  CHECK_FALSE(match_template(spec, {"外", "来", "词"}).has_value());
  CHECK_FALSE(match_template(spec, {}).has_value());
}

TEST_CASE("keyword_sf rejects unknown words and spans all classes") {
  TemplateSpec spec = default_template_spec();
  CHECK_THROWS_AS(keyword_sf(spec, "不存在"), Error);
  std::set<Level2> hit;
  for (const std::string& w : spec.content_words) hit.insert(keyword_sf(spec, w));
  CHECK(hit.size() > 1);
}
