#include "sefun/retrieve.hpp"

#include <algorithm>
#include <cstring>

#include "binio.hpp"
#include "sefun/errors.hpp"

namespace sefun {

namespace {

constexpr char kIndexMagic[8] = {'S', 'E', 'F', 'U', 'N', 'I', 'X', '1'};

std::vector<std::string> canonical_tokens(std::vector<std::string> toks, bool multiset) {
  std::sort(toks.begin(), toks.end());
  if (!multiset) toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  return toks;
}

// Two-pointer intersection size over sorted vectors. With duplicates kept
// this counts min-occurrences, which is the multiset intersection.
std::size_t sorted_intersection(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    const int c = a[i].compare(b[j]);
    if (c == 0) {
      ++n;
      ++i;
      ++j;
    } else if (c < 0) {
      ++i;
    } else {
      ++j;
    }
  }
  return n;
}

double jaccard_canonical(const std::vector<std::string>& a,
                         const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  const std::size_t inter = sorted_intersection(a, b);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string pair_response_text(const ConversationPair& pair) {
  std::string text;
  for (const Segment& s : pair.response_segments) text += s.text;
  return text;
}

RankedCandidate make_candidate(const RetrievalIndex& index, std::size_t id, double score) {
  RankedCandidate c;
  c.pair_id = id;
  c.response_text = pair_response_text(index.pairs[id]);
  c.base_score = score;
  c.rerank_score = score;
  return c;
}

// Shared ordering: score descending, ties ascending id; zero-score tail in
// ascending id order matches because zero ties also break ascending.
std::vector<RankedCandidate> order_and_cut(const RetrievalIndex& index,
                                           std::vector<std::pair<double, std::size_t>>& scored,
                                           std::size_t k) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t n = std::min(k, scored.size());
  std::vector<RankedCandidate> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_candidate(index, scored[i].second, scored[i].first));
  }
  return out;
}

}  // namespace

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b,
               bool multiset) {
  return jaccard_canonical(canonical_tokens(a, multiset), canonical_tokens(b, multiset));
}

RetrievalIndex build_index(const Corpus& corpus, bool multiset) {
  if (corpus.empty()) throw EmptyCorpusError("cannot index an empty corpus");
  RetrievalIndex index;
  index.multiset = multiset;
  index.pairs = corpus.pairs;
  index.token_sets.reserve(index.pairs.size());
  for (std::size_t id = 0; id < index.pairs.size(); ++id) {
    std::vector<std::string> toks;
    for (const Segment& s : index.pairs[id].query_segments) {
      toks.insert(toks.end(), s.tokens.begin(), s.tokens.end());
    }
    index.token_sets.push_back(canonical_tokens(std::move(toks), multiset));
    const auto& canon = index.token_sets.back();
    const std::string* prev = nullptr;
    for (const std::string& t : canon) {
      if (prev != nullptr && *prev == t) continue;  // multiset duplicates
      index.postings[t].push_back(static_cast<std::uint32_t>(id));
      prev = &t;
    }
  }
  return index;
}

void save_index(const RetrievalIndex& index, const std::string& path) {
  binio::Writer w(path);
  w.bytes(kIndexMagic, 8);
  w.u32(index.multiset ? 1 : 0);
  w.u64(index.pairs.size());
  for (const ConversationPair& p : index.pairs) w.str(serialize_pair_line(p));
  w.u64(index.postings.size());
  for (const auto& [token, ids] : index.postings) {
    w.str(token);
    w.u64(ids.size());
    for (std::uint32_t id : ids) w.u32(id);
  }
  w.close();
}

RetrievalIndex load_index(const std::string& path) {
  binio::Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kIndexMagic, 8) != 0) {
    throw SchemaVersionMismatchError("\"" + path + "\" is not a SEFUNIX1 index file");
  }
  RetrievalIndex index;
  index.multiset = r.u32() != 0;
  const std::uint64_t n_pairs = r.u64();
  index.pairs.reserve(n_pairs);
  index.token_sets.reserve(n_pairs);
  for (std::uint64_t i = 0; i < n_pairs; ++i) {
    index.pairs.push_back(parse_pair_line(r.str(), i + 1));
    std::vector<std::string> toks;
    for (const Segment& s : index.pairs.back().query_segments) {
      toks.insert(toks.end(), s.tokens.begin(), s.tokens.end());
    }
    index.token_sets.push_back(canonical_tokens(std::move(toks), index.multiset));
  }
  const std::uint64_t n_tokens = r.u64();
  for (std::uint64_t i = 0; i < n_tokens; ++i) {
    std::string token = r.str();
    const std::uint64_t n_ids = r.u64();
    std::vector<std::uint32_t> ids;
    ids.reserve(n_ids);
    for (std::uint64_t j = 0; j < n_ids; ++j) ids.push_back(r.u32());
    index.postings[token] = std::move(ids);
  }
  return index;
}

std::vector<RankedCandidate> retrieve_topk(const RetrievalIndex& index,
                                           const std::vector<std::string>& query_tokens,
                                           std::size_t k) {
  const auto query = canonical_tokens(query_tokens, index.multiset);
  // Candidate generation: union of posting lists of the query's tokens.
  std::vector<std::uint32_t> cand;
  const std::string* prev = nullptr;
  for (const std::string& t : query) {
    if (prev != nullptr && *prev == t) continue;
    auto it = index.postings.find(t);
    if (it != index.postings.end()) {
      cand.insert(cand.end(), it->second.begin(), it->second.end());
    }
    prev = &t;
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(std::min(k, index.pairs.size()));
  for (std::uint32_t id : cand) {
    scored.emplace_back(jaccard_canonical(query, index.token_sets[id]), id);
  }
  // Zero-score fill so k >= corpus size returns the whole corpus, in the same
  // order a brute-force scan would produce.
  if (scored.size() < k) {
    std::vector<bool> seen(index.pairs.size(), false);
    for (std::uint32_t id : cand) seen[id] = true;
    for (std::size_t id = 0; id < index.pairs.size() && scored.size() < k; ++id) {
      if (!seen[id]) scored.emplace_back(0.0, id);
    }
  }
  return order_and_cut(index, scored, k);
}

std::vector<RankedCandidate> retrieve_topk(const RetrievalIndex& index,
                                           const std::string& query_text, std::size_t k) {
  return retrieve_topk(index, default_tokenize(query_text), k);
}

std::vector<RankedCandidate> brute_force_topk(const RetrievalIndex& index,
                                              const std::vector<std::string>& query_tokens,
                                              std::size_t k) {
  const auto query = canonical_tokens(query_tokens, index.multiset);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(index.pairs.size());
  for (std::size_t id = 0; id < index.pairs.size(); ++id) {
    scored.emplace_back(jaccard_canonical(query, index.token_sets[id]), id);
  }
  return order_and_cut(index, scored, k);
}

double penalty_from_prediction(const Prediction& pred, const SfTarget& target) {
  if (target.level == 1) {
    return pred.level1 == target.level1 ? 0.0 : pred.prob_level1;
  }
  return pred.level2 == target.level2 ? 0.0 : pred.prob_level2;
}

double penalty(const ConversationPair& candidate, const SfTarget& target,
               const CfMModel& cfm) {
  if (candidate.response_segments.empty()) {
    throw EmptyInputError("candidate pair has no response segments");
  }
  return penalty_from_prediction(predict_sf(cfm, candidate.response_segments.front()),
                                 target);
}

void annotate_candidates(std::vector<RankedCandidate>& candidates,
                         const RetrievalIndex& index, const SfTarget& target,
                         const CfMModel& cfm) {
  for (RankedCandidate& c : candidates) {
    const ConversationPair& pair = index.pairs[c.pair_id];
    if (pair.response_segments.empty()) {
      throw EmptyInputError("candidate pair has no response segments");
    }
    c.pred = predict_sf(cfm, pair.response_segments.front());
    c.prob = target.level == 1 ? c.pred.prob_level1 : c.pred.prob_level2;
    c.penalty = penalty_from_prediction(c.pred, target);
  }
}

std::vector<RankedCandidate> rerank_scored(std::vector<RankedCandidate> candidates,
                                           double lambda, std::size_t k) {
  if (candidates.empty()) throw EmptyInputError("rerank over an empty candidate list");
  if (k == 0 || k > candidates.size()) k = candidates.size();
  const double s1 = candidates.front().base_score;
  const double sk = candidates[k - 1].base_score;
  for (RankedCandidate& c : candidates) {
    const double drop = lambda * (s1 - sk) * c.penalty;
    c.rerank_score = c.base_score - drop;
    c.demoted = drop > 0.0;
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const RankedCandidate& a, const RankedCandidate& b) {
                     if (a.rerank_score != b.rerank_score) {
                       return a.rerank_score > b.rerank_score;
                     }
                     return !a.demoted && b.demoted;
                   });
  return candidates;
}

std::vector<RankedCandidate> rerank(std::vector<RankedCandidate> candidates,
                                    const RetrievalIndex& index, const SfTarget& target,
                                    const CfMModel& cfm, double lambda, std::size_t k) {
  annotate_candidates(candidates, index, target, cfm);
  return rerank_scored(std::move(candidates), lambda, k);
}

IrResult respond_ir(const RetrievalIndex& index, const CfMModel& cfm, const CfTModel& cft,
                    const std::string& query_text, int level, bool rerank_enabled,
                    double lambda, std::size_t topk) {
  std::vector<Segment> query_segments = segment_and_tokenize(query_text);
  // Tag the query's own segments with the CfM so the CfT gets function inputs.
  std::vector<Level2> query_sfs;
  for (const Segment& s : query_segments) {
    query_sfs.push_back(predict_sf(cfm, s).level2);
  }
  const CftPrediction target_pred = predict_response_sf(cft, query_segments, query_sfs);
  SfTarget target;
  target.level = level;
  target.level2 = target_pred.argmax2();
  // At level 1 the 4-way head is authoritative; at level 2 the fine label
  // determines its parent.
  target.level1 = level == 1 ? target_pred.argmax1() : level1_of(target.level2);

  std::vector<std::string> query_tokens;
  for (const Segment& s : query_segments) {
    query_tokens.insert(query_tokens.end(), s.tokens.begin(), s.tokens.end());
  }
  std::vector<RankedCandidate> candidates = retrieve_topk(index, query_tokens, topk);
  if (candidates.empty()) throw NoCandidatesError("retrieval returned no candidates");
  annotate_candidates(candidates, index, target, cfm);
  if (rerank_enabled) {
    candidates = rerank_scored(std::move(candidates), lambda, topk);
  }
  return IrResult{target, std::move(candidates)};
}

}  // namespace sefun
