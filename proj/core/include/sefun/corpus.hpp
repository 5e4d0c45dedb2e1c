#ifndef SEFUN_CORPUS_HPP
#define SEFUN_CORPUS_HPP

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sefun/taxonomy.hpp"
#include "sefun/text.hpp"

namespace sefun {

// A punctuation-delimited piece of a query or response. Annotation allows up
// to two level-2 labels per segment; functions[0] is the primary label.
struct Segment {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<SentenceFunction> functions;  // 0..2 entries

  bool labeled() const { return !functions.empty(); }
  const SentenceFunction& primary() const { return functions.front(); }
};

// One short-text conversation record: labeled query segments plus labeled
// response segments.
struct ConversationPair {
  std::vector<Segment> query_segments;
  std::vector<Segment> response_segments;
  std::string source;

  std::size_t total_segments() const {
    return query_segments.size() + response_segments.size();
  }
};

struct Corpus {
  std::vector<ConversationPair> pairs;

  bool empty() const { return pairs.empty(); }
  std::size_t size() const { return pairs.size(); }
};

// Builds a segment from raw text: punctuation-delimited pieces are NOT split
// here; this tokenizes one already-segmented piece.
Segment make_segment(std::string text, const Tokenizer& tok = default_tokenizer());

// Splits raw text into segments and tokenizes each.
std::vector<Segment> segment_and_tokenize(std::string_view text,
                                          const Tokenizer& tok = default_tokenizer());

// Per-label corpus statistics, partitioned by side.
struct SideStats {
  std::size_t total_segments = 0;
  std::array<std::size_t, kNumLevel2> per_label{};  // primary labels only
  std::size_t unlabeled = 0;

  double percent(Level2 l2) const {
    return total_segments == 0
               ? 0.0
               : 100.0 * static_cast<double>(per_label[static_cast<std::size_t>(l2)]) /
                     static_cast<double>(total_segments);
  }
};

struct CorpusStats {
  std::size_t total_pairs = 0;
  SideStats query;
  SideStats response;
};

CorpusStats corpus_stats(const Corpus& corpus);

// Renders the stats as a fixed-width table (one row per level-2 label).
std::string format_stats(const CorpusStats& stats);

// Line-delimited corpus file, one JSON record per line, preceded by the
// header line "#sefun-corpus v1". Round-trips text, tokens, labels and
// provenance losslessly. Tokens are stored only when they differ from the
// default tokenization of the text.
Corpus load_corpus(const std::string& path, const Tokenizer& tok = default_tokenizer());
void save_corpus(const Corpus& corpus, const std::string& path);

Corpus load_corpus_stream(std::istream& in, const Tokenizer& tok = default_tokenizer());
void save_corpus_stream(const Corpus& corpus, std::ostream& out);

// Single-record codec used by the streaming auto-annotation path.
ConversationPair parse_pair_line(const std::string& line, std::size_t lineno,
                                 const Tokenizer& tok = default_tokenizer());
std::string serialize_pair_line(const ConversationPair& pair);

inline constexpr std::string_view kCorpusHeader = "#sefun-corpus v1";

// Hook for upstream data cleaning: pairs for which the predicate returns
// true are removed (e.g. a dirty-word filter). No lexicon ships with the
// library.
using PairFilter = std::function<bool(const ConversationPair&)>;
Corpus filter_corpus(Corpus corpus, const PairFilter& drop_if);

// Re-derives every segment's tokens from its text, discarding any custom
// tokenization. Labels and text are untouched. Run this before feeding a
// corpus to components that re-tokenize raw text at inference time (decoding,
// query-side retrieval), so training and inference agree on token boundaries.
void retokenize_corpus(Corpus& corpus, const Tokenizer& tok = default_tokenizer());

}  // namespace sefun

#endif  // SEFUN_CORPUS_HPP
