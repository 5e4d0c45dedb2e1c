#ifndef SEFUN_GENERATE_HPP
#define SEFUN_GENERATE_HPP

// Toy-scale generation: attention seq2seq baseline and a conditioned variant
// that concatenates a sentence-function embedding to the decoder input at
// every step. Decoding is greedy or beam search with length-normalized
// scoring.

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sefun/corpus.hpp"
#include "sefun/nn.hpp"
#include "sefun/taxonomy.hpp"

namespace sefun {

struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr std::size_t kReserved = 4;

  std::vector<std::string> tokens;      // [0..3] are the reserved tokens
  std::vector<std::size_t> freqs;       // aligned with tokens; 0 for reserved
  std::unordered_map<std::string, int> index;
  double coverage = 1.0;                // kept occurrences / all occurrences

  std::size_t size() const { return tokens.size(); }
  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens[static_cast<std::size_t>(id)]; }
  void rebuild_index();
};

// Most frequent `cap` tokens (ties by first occurrence) plus the reserved
// four. Counts every token of every segment on both sides.
Vocabulary build_vocab(const Corpus& corpus, std::size_t cap = 50000);

// Text format: header "#sefun-vocab v1", then token<TAB>freq per line,
// reserved tokens included.
void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

inline constexpr std::string_view kVocabHeader = "#sefun-vocab v1";

struct Seq2SeqModel {
  nn::TrainConfig config;
  bool conditioned = false;  // C-Seq2seq: SF embedding joins the decoder input
  Vocabulary vocab;
  nn::Embedding enc_embed;  // (V, E)
  nn::Embedding dec_embed;  // (V, E)
  nn::BiGru encoder;        // E -> states of 2H
  nn::Linear dec_init;      // 2H -> H, tanh'd into the decoder start state
  nn::GruCell decoder;      // input [word (+ SF); context] -> H
  nn::Attention attention;  // decoder state H against encoder states 2H
  nn::Linear out_proj;      // H -> V
  nn::Embedding sf_embed;   // (20, E), conditioned variant only

  std::vector<nn::Param*> params();
};

struct GenTrainReport {
  double initial_loss = 0.0;         // mean per-token loss before training
  std::vector<double> epoch_loss;    // mean per-token training loss per epoch
};

// One teacher-forced pass over a single example; returns the mean per-token
// cross-entropy. tgt must end in <eos>; sf is the level-2 code (-1 when the
// model is unconditioned). With accumulate_grads, parameter gradients for the
// mean loss are added, scaled by `scale`.
double teacher_forced_loss(Seq2SeqModel& model, const std::vector<int>& src,
                           const std::vector<int>& tgt, int sf, bool accumulate_grads,
                           double scale = 1.0);

Seq2SeqModel train_seq2seq(const Corpus& corpus, const nn::TrainConfig& config,
                           std::size_t vocab_cap = 50000,
                           GenTrainReport* report = nullptr);
// Conditions on each pair's first response segment's primary function.
Seq2SeqModel train_cseq2seq(const Corpus& corpus, const nn::TrainConfig& config,
                            std::size_t vocab_cap = 50000,
                            GenTrainReport* report = nullptr);

void save_seq2seq(const Seq2SeqModel& model, const std::string& path);
Seq2SeqModel load_seq2seq(const std::string& path);

struct DecodeResult {
  std::vector<int> ids;       // response token ids, EOS excluded
  std::string text;           // tokens joined with spaces
  double norm_logprob = 0.0;  // summed log-prob / decode steps
  std::vector<std::string> nbest;  // texts, best first (beam search only)
};

// target_sf is required by conditioned models and rejected otherwise.
DecodeResult greedy_decode(const Seq2SeqModel& model, const std::string& query_text,
                           std::optional<Level2> target_sf, std::size_t max_len = 30);

// Length-normalized beam search. The greedy rollout always joins the final
// candidate pool, so the returned score never falls below greedy's. Ties
// break toward lexicographically smaller token-id sequences.
DecodeResult beam_search(const Seq2SeqModel& model, const std::string& query_text,
                         std::optional<Level2> target_sf, std::size_t beam = 5,
                         std::size_t max_len = 30);

}  // namespace sefun

#endif  // SEFUN_GENERATE_HPP
