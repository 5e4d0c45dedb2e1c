#include "sefun/synthetic.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "sefun/errors.hpp"
#include "sefun/rng.hpp"

namespace sefun {

namespace {

bool is_slot(const std::string& tok) { return tok == "x" || tok == "y"; }

std::unordered_set<std::string> anchor_set(const TemplateSpec& spec) {
  std::unordered_set<std::string> anchors;
  for (const SlotTemplate& t : spec.templates) {
    for (const std::string& tok : t.pattern) {
      if (!is_slot(tok)) anchors.insert(tok);
    }
  }
  return anchors;
}

}  // namespace

void TemplateSpec::validate() const {
  if (templates.empty()) throw Error("template spec has no templates");
  if (content_words.empty()) throw Error("template spec has no content words");

  std::vector<std::size_t> per_label(kNumLevel2, 0);
  std::set<std::vector<std::string>> profiles;
  for (const SlotTemplate& t : templates) {
    ++per_label[static_cast<std::size_t>(t.label)];
    if (t.pattern.empty()) throw Error("empty template pattern");
    // Profile: pattern with every slot collapsed to "x". Two templates with
    // the same profile would match the same sentences.
    std::vector<std::string> profile;
    bool has_slot = false;
    for (const std::string& tok : t.pattern) {
      if (is_slot(tok)) {
        has_slot = true;
        profile.push_back("x");
      } else {
        profile.push_back(tok);
      }
    }
    if (!has_slot) {
      throw Error("template for " + std::string(level2_name(t.label)) +
                  " has no content slot");
    }
    if (!profiles.insert(profile).second) {
      throw Error("two templates share an anchor profile");
    }
  }
  for (std::size_t c = 0; c < kNumLevel2; ++c) {
    if (per_label[c] == 0) {
      throw Error("no template for " +
                  std::string(level2_name(static_cast<Level2>(c))));
    }
  }

  const auto anchors = anchor_set(*this);
  for (const std::string& w : content_words) {
    if (is_slot(w) || anchors.count(w)) {
      throw Error("content word \"" + w + "\" collides with a template anchor");
    }
  }
}

TemplateSpec default_template_spec() {
  TemplateSpec spec;
  auto add = [&](Level2 label, std::vector<std::string> pattern) {
    spec.templates.push_back({label, std::move(pattern)});
  };
  add(Level2::PositiveDe, {"x", "很", "好", "。"});
  add(Level2::NegativeDe, {"x", "不", "好", "。"});
  add(Level2::DeWithInWords, {"谁", "都", "喜欢", "x", "。"});
  add(Level2::DoubleNegativeDe, {"x", "不", "得", "不", "y", "。"});
  add(Level2::OtherDe, {"据", "说", "x", "来", "了", "。"});
  add(Level2::WhStyleIn, {"为什么", "x", "？"});
  add(Level2::YesNoIn, {"x", "吗", "？"});
  add(Level2::ANotAIn, {"x", "去", "不", "去", "y", "？"});
  add(Level2::AlternativeIn, {"x", "还是", "y", "？"});
  add(Level2::InWithTagQuestion, {"x", "对", "吧", "？"});
  add(Level2::Rhetorical, {"难道", "x", "吗", "？"});
  add(Level2::InWithBackchannel, {"真的", "x", "吗", "？"});
  add(Level2::InWithOpenQuestion, {"x", "呢", "？"});
  add(Level2::ImWithRequest, {"请", "x", "。"});
  add(Level2::ImWithDissuade, {"别", "x", "了", "。"});
  add(Level2::ImWithCommand, {"马上", "x", "！"});
  add(Level2::ImWithForbidden, {"禁止", "x", "！"});
  add(Level2::ExWithoutToneWords, {"x", "真", "好", "！"});
  add(Level2::ExWithInterjections, {"哇", "x", "！"});
  add(Level2::ExWithGreetings, {"x", "你", "好", "！"});
  spec.content_words = {"苹果", "香蕉", "电影", "音乐", "天气", "老师", "朋友",
                        "猫",   "狗",   "书",   "车",   "花",   "山",   "水",
                        "饭",   "茶",   "球",   "城市", "故事", "梦想"};
  spec.validate();
  return spec;
}

const std::vector<double>& stc_query_weights() {
  static const std::vector<double> w = {
      49223, 9241, 887, 40,  2675, 23385, 6469, 6456, 789, 170,
      42,    0,    227, 2073, 86,   7,     4,    241,  364, 167};
  return w;
}

const std::vector<double>& stc_response_weights() {
  static const std::vector<double> w = {
      67540, 18428, 2660, 99,  5218, 7652, 4046, 1055, 279,  271,
      417,   345,   11,   358, 58,   4,    2,    3948, 1958, 285};
  return w;
}

namespace {

std::vector<double> cumulative_weights(const std::vector<double>& class_weights) {
  std::vector<double> w = class_weights;
  if (w.empty()) w.assign(kNumLevel2, 1.0);
  if (w.size() != kNumLevel2) {
    throw InvalidWeightsError("expected " + std::to_string(kNumLevel2) +
                              " class weights, got " + std::to_string(w.size()));
  }
  double total = 0.0;
  for (double x : w) {
    if (x < 0.0) throw InvalidWeightsError("negative class weight");
    total += x;
  }
  if (total <= 0.0) throw InvalidWeightsError("class weights sum to zero");
  std::vector<double> cum(w.size());
  double run = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    run += w[i];
    cum[i] = run;
  }
  return cum;
}

std::size_t sample_class(const std::vector<double>& cum, Rng& rng) {
  const double r = rng.uniform() * cum.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), r);
  return it == cum.end() ? cum.size() - 1 : static_cast<std::size_t>(it - cum.begin());
}

// Templates indexed per class so draws stay cheap.
std::vector<std::vector<const SlotTemplate*>> by_label(const TemplateSpec& spec) {
  std::vector<std::vector<const SlotTemplate*>> out(kNumLevel2);
  for (const SlotTemplate& t : spec.templates) {
    out[static_cast<std::size_t>(t.label)].push_back(&t);
  }
  return out;
}

Segment realize(const SlotTemplate& t, const TemplateSpec& spec, Rng& rng,
                std::string* first_filler, const std::string* force_first = nullptr) {
  Segment seg;
  seg.tokens.reserve(t.pattern.size());
  bool first = true;
  for (const std::string& tok : t.pattern) {
    if (is_slot(tok)) {
      const std::string& w =
          first && force_first
              ? *force_first
              : spec.content_words[rng.index(spec.content_words.size())];
      if (first && first_filler) *first_filler = w;
      first = false;
      seg.tokens.push_back(w);
    } else {
      seg.tokens.push_back(tok);
    }
  }
  for (std::size_t i = 0; i < seg.tokens.size(); ++i) {
    if (i) seg.text += ' ';
    seg.text += seg.tokens[i];
  }
  seg.functions = {make_sf(t.label)};
  return seg;
}

Corpus generate(const TemplateSpec& spec, std::size_t n_pairs,
                const std::vector<double>& query_weights,
                const std::vector<double>& response_weights, bool linked,
                std::uint64_t seed) {
  spec.validate();
  const std::vector<double> qcum = cumulative_weights(query_weights);
  const std::vector<double> rcum = cumulative_weights(response_weights);
  const auto groups = by_label(spec);
  Rng rng(seed);

  Corpus corpus;
  corpus.pairs.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    ConversationPair pair;
    pair.source = "synthetic";

    const std::size_t qc = sample_class(qcum, rng);
    const auto& qts = groups[qc];
    const SlotTemplate& qt = *qts[qts.size() == 1 ? 0 : rng.index(qts.size())];
    std::string keyword;
    pair.query_segments.push_back(realize(qt, spec, rng, &keyword));

    const std::size_t rc = linked ? static_cast<std::size_t>(keyword_sf(spec, keyword))
                                  : sample_class(rcum, rng);
    const auto& rts = groups[rc];
    const SlotTemplate& rt = *rts[rts.size() == 1 ? 0 : rng.index(rts.size())];
    pair.response_segments.push_back(realize(rt, spec, rng, nullptr));

    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

}  // namespace

Corpus gen_synthetic_corpus(const TemplateSpec& spec, std::size_t n_pairs,
                            const std::vector<double>& class_weights,
                            std::uint64_t seed) {
  return generate(spec, n_pairs, class_weights, class_weights, false, seed);
}

Level2 keyword_sf(const TemplateSpec& spec, const std::string& content_word) {
  const auto it =
      std::find(spec.content_words.begin(), spec.content_words.end(), content_word);
  if (it == spec.content_words.end()) {
    throw Error("\"" + content_word + "\" is not a content word of this spec");
  }
  const std::size_t idx =
      static_cast<std::size_t>(it - spec.content_words.begin()) % kNumLevel2;
  return static_cast<Level2>(idx);
}

Corpus gen_keyword_linked_corpus(const TemplateSpec& spec, std::size_t n_pairs,
                                 const std::vector<double>& query_weights,
                                 std::uint64_t seed) {
  return generate(spec, n_pairs, query_weights, {}, true, seed);
}

Corpus gen_linked_grid_corpus(const TemplateSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto groups = by_label(spec);
  Rng rng(seed);
  Corpus corpus;
  corpus.pairs.reserve(spec.templates.size() * spec.content_words.size());
  for (const SlotTemplate& qt : spec.templates) {
    for (const std::string& w : spec.content_words) {
      ConversationPair pair;
      pair.source = "synthetic";
      pair.query_segments.push_back(realize(qt, spec, rng, nullptr, &w));
      const auto& rts = groups[static_cast<std::size_t>(keyword_sf(spec, w))];
      const SlotTemplate& rt = *rts[rts.size() == 1 ? 0 : rng.index(rts.size())];
      pair.response_segments.push_back(realize(rt, spec, rng, nullptr));
      corpus.pairs.push_back(std::move(pair));
    }
  }
  return corpus;
}

std::optional<Level2> match_template(const TemplateSpec& spec,
                                     const std::vector<std::string>& tokens) {
  const auto anchors = anchor_set(spec);
  for (const SlotTemplate& t : spec.templates) {
    if (t.pattern.size() != tokens.size()) continue;
    bool ok = true;
    for (std::size_t i = 0; i < tokens.size() && ok; ++i) {
      if (is_slot(t.pattern[i])) {
        ok = !anchors.count(tokens[i]);
      } else {
        ok = t.pattern[i] == tokens[i];
      }
    }
    if (ok) return t.label;
  }
  return std::nullopt;
}

}  // namespace sefun
