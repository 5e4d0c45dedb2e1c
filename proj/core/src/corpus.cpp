#include "sefun/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sefun/errors.hpp"

namespace sefun {

using ordered_json = nlohmann::ordered_json;

Segment make_segment(std::string text, const Tokenizer& tok) {
  Segment seg;
  seg.text = std::move(text);
  seg.tokens = tok(seg.text);
  return seg;
}

std::vector<Segment> segment_and_tokenize(std::string_view text, const Tokenizer& tok) {
  std::vector<Segment> out;
  for (auto& piece : segment_text(text)) {
    out.push_back(make_segment(std::move(piece), tok));
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  stats.total_pairs = corpus.pairs.size();
  auto count_side = [](SideStats& side, const std::vector<Segment>& segs) {
    for (const Segment& s : segs) {
      side.total_segments++;
      if (s.labeled()) {
        side.per_label[static_cast<std::size_t>(s.primary().level2)]++;
      } else {
        side.unlabeled++;
      }
    }
  };
  for (const ConversationPair& p : corpus.pairs) {
    count_side(stats.query, p.query_segments);
    count_side(stats.response, p.response_segments);
  }
  return stats;
}

std::string format_stats(const CorpusStats& stats) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-24s %14s %14s\n", "Sentence Function", "Query", "Response");
  os << buf;
  Level1 group = Level1::Declarative;
  bool first = true;
  for (std::size_t i = 0; i < kNumLevel2; ++i) {
    const Level2 l2 = static_cast<Level2>(i);
    if (first || level1_of(l2) != group) {
      group = level1_of(l2);
      first = false;
      os << std::string(level1_long_name(group)) << " (" << std::string(level1_name(group))
         << ")\n";
    }
    std::snprintf(buf, sizeof(buf), "  %-22s %8zu (%4.1f%%) %8zu (%4.1f%%)\n",
                  std::string(level2_name(l2)).c_str(),
                  stats.query.per_label[i], stats.query.percent(l2),
                  stats.response.per_label[i], stats.response.percent(l2));
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-24s %14zu\n", "Total pairs", stats.total_pairs);
  os << buf;
  std::snprintf(buf, sizeof(buf), "%-24s %14zu %14zu\n", "Total sentence segments",
                stats.query.total_segments, stats.response.total_segments);
  os << buf;
  if (stats.query.unlabeled != 0 || stats.response.unlabeled != 0) {
    std::snprintf(buf, sizeof(buf), "%-24s %14zu %14zu\n", "Unlabeled segments",
                  stats.query.unlabeled, stats.response.unlabeled);
    os << buf;
  }
  return os.str();
}

namespace {

ordered_json segment_to_json(const Segment& seg) {
  ordered_json j;
  j["text"] = seg.text;
  if (!seg.functions.empty()) {
    j["sf1"] = std::string(level1_name(seg.functions[0].level1));
    j["sf2"] = std::string(level2_name(seg.functions[0].level2));
    if (seg.functions.size() > 1) {
      j["sf2_alt"] = std::string(level2_name(seg.functions[1].level2));
    }
  }
  if (seg.tokens != default_tokenize(seg.text)) {
    j["tokens"] = seg.tokens;
  }
  return j;
}

Segment segment_from_json(const ordered_json& j, std::size_t lineno, const Tokenizer& tok) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw ParseError("segment record missing \"text\"", lineno);
  }
  Segment seg;
  seg.text = j["text"].get<std::string>();
  if (j.contains("tokens")) {
    seg.tokens = j["tokens"].get<std::vector<std::string>>();
  } else {
    seg.tokens = tok(seg.text);
  }
  const bool has1 = j.contains("sf1") && !j["sf1"].is_null();
  const bool has2 = j.contains("sf2") && !j["sf2"].is_null();
  if (has1 != has2) {
    throw ParseError("segment must carry both sf1 and sf2 or neither", lineno);
  }
  if (has2) {
    Level2 l2;
    Level1 l1;
    try {
      l1 = parse_level1(j["sf1"].get<std::string>());
      l2 = parse_level2(j["sf2"].get<std::string>());
    } catch (const UnknownLabelError& e) {
      throw ParseError(std::string("unknown label \"") + e.label() + "\"", lineno);
    }
    if (level1_of(l2) != l1) {
      throw ParseError("sf1 \"" + j["sf1"].get<std::string>() + "\" is not the parent of sf2 \"" +
                           j["sf2"].get<std::string>() + "\"",
                       lineno);
    }
    seg.functions.push_back(SentenceFunction{l1, l2});
    if (j.contains("sf2_alt") && !j["sf2_alt"].is_null()) {
      Level2 alt;
      try {
        alt = parse_level2(j["sf2_alt"].get<std::string>());
      } catch (const UnknownLabelError& e) {
        throw ParseError(std::string("unknown label \"") + e.label() + "\"", lineno);
      }
      seg.functions.push_back(make_sf(alt));
    }
  }
  return seg;
}

}  // namespace

ConversationPair parse_pair_line(const std::string& line, std::size_t lineno,
                                 const Tokenizer& tok) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad record: ") + e.what(), lineno);
  }
  if (!j.is_object() || !j.contains("query") || !j.contains("response")) {
    throw ParseError("record must contain \"query\" and \"response\" arrays", lineno);
  }
  ConversationPair pair;
  for (const auto& js : j["query"]) pair.query_segments.push_back(segment_from_json(js, lineno, tok));
  for (const auto& js : j["response"]) {
    pair.response_segments.push_back(segment_from_json(js, lineno, tok));
  }
  if (pair.query_segments.empty() || pair.response_segments.empty()) {
    throw ParseError("pair needs at least one query and one response segment", lineno);
  }
  if (j.contains("source") && j["source"].is_string()) {
    pair.source = j["source"].get<std::string>();
  }
  return pair;
}

std::string serialize_pair_line(const ConversationPair& pair) {
  ordered_json j;
  j["query"] = ordered_json::array();
  for (const Segment& s : pair.query_segments) j["query"].push_back(segment_to_json(s));
  j["response"] = ordered_json::array();
  for (const Segment& s : pair.response_segments) j["response"].push_back(segment_to_json(s));
  j["source"] = pair.source;
  return j.dump();
}

Corpus load_corpus_stream(std::istream& in, const Tokenizer& tok) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) {
    throw SchemaVersionMismatchError("corpus file is empty; expected header \"" +
                                     std::string(kCorpusHeader) + "\"");
  }
  lineno = 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCorpusHeader) {
    throw SchemaVersionMismatchError("unsupported corpus header \"" + line + "\"; expected \"" +
                                     std::string(kCorpusHeader) + "\"");
  }
  Corpus corpus;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    corpus.pairs.push_back(parse_pair_line(line, lineno, tok));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path, const Tokenizer& tok) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  return load_corpus_stream(in, tok);
}

void save_corpus_stream(const Corpus& corpus, std::ostream& out) {
  out << kCorpusHeader << '\n';
  for (const ConversationPair& p : corpus.pairs) {
    out << serialize_pair_line(p) << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  save_corpus_stream(corpus, out);
}

Corpus filter_corpus(Corpus corpus, const PairFilter& drop_if) {
  if (!drop_if) return corpus;
  std::vector<ConversationPair> kept;
  kept.reserve(corpus.pairs.size());
  for (auto& p : corpus.pairs) {
    if (!drop_if(p)) kept.push_back(std::move(p));
  }
  corpus.pairs = std::move(kept);
  return corpus;
}

void retokenize_corpus(Corpus& corpus, const Tokenizer& tok) {
  for (ConversationPair& pair : corpus.pairs) {
    for (std::vector<Segment>* side : {&pair.query_segments, &pair.response_segments}) {
      for (Segment& seg : *side) seg.tokens = tok(seg.text);
    }
  }
}

}  // namespace sefun
