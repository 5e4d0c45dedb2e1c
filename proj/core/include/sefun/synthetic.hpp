#ifndef SEFUN_SYNTHETIC_HPP
#define SEFUN_SYNTHETIC_HPP

// Labeled toy corpora built from per-class word-pattern templates. Each
// level-2 function owns at least one template whose anchor words identify it
// uniquely, so generated sentences can be re-matched to their label exactly.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sefun/corpus.hpp"
#include "sefun/taxonomy.hpp"

namespace sefun {

struct SlotTemplate {
  Level2 label;
  // Token pattern; "x" and "y" are content slots, everything else anchors.
  std::vector<std::string> pattern;
};

struct TemplateSpec {
  std::vector<SlotTemplate> templates;
  std::vector<std::string> content_words;  // slot fillers, disjoint from anchors

  // Checks: every level-2 label covered, every template has a slot, content
  // words collide with no anchor, and no two templates share an anchor
  // profile (same length, same anchor positions and words) — the profile is
  // what makes generated sentences attributable to one template only.
  void validate() const;
};

// Twenty single-template classes over a small Chinese word pool.
TemplateSpec default_template_spec();

// Per-class label frequencies reported for the STC-SeFun dataset, usable as
// class_weights to mirror its imbalance. Code order.
const std::vector<double>& stc_query_weights();
const std::vector<double>& stc_response_weights();

// n_pairs conversation pairs; query and response classes drawn independently
// from class_weights (empty = uniform, otherwise one non-negative weight per
// level-2 class, not all zero). Deterministic in (spec, n_pairs, weights,
// seed). Throws InvalidWeightsError.
Corpus gen_synthetic_corpus(const TemplateSpec& spec, std::size_t n_pairs,
                            const std::vector<double>& class_weights,
                            std::uint64_t seed);

// The response function a query keyword selects in the linked corpus.
Level2 keyword_sf(const TemplateSpec& spec, const std::string& content_word);

// Like gen_synthetic_corpus, but the response class is keyword_sf(first
// query content word) instead of a random draw — a response-function signal
// a classifier can recover exactly.
Corpus gen_keyword_linked_corpus(const TemplateSpec& spec, std::size_t n_pairs,
                                 const std::vector<double>& query_weights,
                                 std::uint64_t seed);

// One pair per (query template, content word): the word fills the query's
// first slot and keyword_sf(word) picks the response class. Guarantees an
// exact token-set match exists for any single-slot query built from the same
// spec — the backbone of the retrieval pipeline corpus.
Corpus gen_linked_grid_corpus(const TemplateSpec& spec, std::uint64_t seed);

// Recovers the generating label, or nullopt if no template matches. At most
// one template can match a sentence whose slot words are not anchors.
std::optional<Level2> match_template(const TemplateSpec& spec,
                                     const std::vector<std::string>& tokens);

}  // namespace sefun

#endif  // SEFUN_SYNTHETIC_HPP
