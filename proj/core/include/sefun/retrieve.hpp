#ifndef SEFUN_RETRIEVE_HPP
#define SEFUN_RETRIEVE_HPP

// Jaccard retrieval over conversation pairs plus sentence-function-aware
// re-ranking: a wrong-function top candidate is demoted by
//   rerank_i = s_i - lambda * (s_1 - s_k) * penalty_i.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sefun/classify.hpp"
#include "sefun/corpus.hpp"
#include "sefun/taxonomy.hpp"

namespace sefun {

// Jaccard index of two token collections. Set semantics by default; with
// multiset=true counts are intersected/united elementwise. Both empty -> 0.
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b,
               bool multiset = false);

struct RetrievalIndex {
  bool multiset = false;
  std::vector<ConversationPair> pairs;               // id -> pair
  std::vector<std::vector<std::string>> token_sets;  // id -> canonical query tokens
  std::map<std::string, std::vector<std::uint32_t>> postings;  // token -> sorted ids
};

RetrievalIndex build_index(const Corpus& corpus, bool multiset = false);

void save_index(const RetrievalIndex& index, const std::string& path);
RetrievalIndex load_index(const std::string& path);

// The target function the response should carry, at level 1 or 2.
struct SfTarget {
  int level = 2;  // 1 or 2
  Level1 level1 = Level1::Declarative;
  Level2 level2 = Level2::PositiveDe;  // meaningful when level == 2
};

struct RankedCandidate {
  std::size_t pair_id = 0;
  std::string response_text;
  double base_score = 0.0;    // s_i
  Prediction pred{};          // d_{r_i} and its probabilities
  double prob = 0.0;          // p_{r_i} at the target's level
  double penalty = 0.0;       // 0 if pred matches the target, else prob
  double rerank_score = 0.0;  // s_i - lambda*(s_1-s_k)*penalty
  bool demoted = false;       // rerank_score strictly below base_score
};

// Top-k by Jaccard, score descending, ties by ascending pair id. When fewer
// than k pairs share a token with the query, zero-score pairs fill the tail
// in ascending id order, so k >= corpus size returns the whole corpus.
std::vector<RankedCandidate> retrieve_topk(const RetrievalIndex& index,
                                           const std::vector<std::string>& query_tokens,
                                           std::size_t k = 20);
std::vector<RankedCandidate> retrieve_topk(const RetrievalIndex& index,
                                           const std::string& query_text,
                                           std::size_t k = 20);

// Oracle path: scores every pair, same ordering rule. For tests and `ir bench`.
std::vector<RankedCandidate> brute_force_topk(const RetrievalIndex& index,
                                              const std::vector<std::string>& query_tokens,
                                              std::size_t k = 20);

// 0 when the prediction carries the target function at the target's level,
// otherwise the classifier's probability of its (wrong) prediction.
double penalty_from_prediction(const Prediction& pred, const SfTarget& target);

// Classifies the candidate pair's first response segment and derives the
// penalty. Throws EmptyInputError when the pair has no response segment.
double penalty(const ConversationPair& candidate, const SfTarget& target,
               const CfMModel& cfm);

// Fills pred/prob/penalty on each candidate via the classifier.
void annotate_candidates(std::vector<RankedCandidate>& candidates,
                         const RetrievalIndex& index, const SfTarget& target,
                         const CfMModel& cfm);

// Re-sorts by rerank score using the penalties already on the candidates.
// Ties: candidates that were not demoted sort first; otherwise the incoming
// order (score descending, ascending id) is preserved. k beyond the list
// size clamps to the list size.
std::vector<RankedCandidate> rerank_scored(std::vector<RankedCandidate> candidates,
                                           double lambda = 1.0, std::size_t k = 20);

// annotate_candidates + rerank_scored.
std::vector<RankedCandidate> rerank(std::vector<RankedCandidate> candidates,
                                    const RetrievalIndex& index, const SfTarget& target,
                                    const CfMModel& cfm, double lambda = 1.0,
                                    std::size_t k = 20);

struct IrResult {
  SfTarget target;
  std::vector<RankedCandidate> candidates;  // final order
  const RankedCandidate& top() const { return candidates.front(); }
};

// Full pipeline: segment the query, tag its segments with the CfM, let the
// CfT pick the target response function, retrieve, then optionally re-rank.
IrResult respond_ir(const RetrievalIndex& index, const CfMModel& cfm, const CfTModel& cft,
                    const std::string& query_text, int level, bool rerank_enabled,
                    double lambda = 1.0, std::size_t topk = 20);

}  // namespace sefun

#endif  // SEFUN_RETRIEVE_HPP
