#ifndef SEFUN_CLASSIFY_HPP
#define SEFUN_CLASSIFY_HPP

// The two classifiers. CfM labels individual segments hierarchically
// (level-1 first, then level-2 conditioned on it) and drives corpus
// auto-annotation. CfT predicts the response sentence function from a query
// and the query's own functions.

#include <string>
#include <unordered_map>
#include <vector>

#include "sefun/corpus.hpp"
#include "sefun/nn.hpp"
#include "sefun/taxonomy.hpp"

namespace sefun {

enum class EncoderKind { Cnn, Rnn };

std::string_view encoder_name(EncoderKind k);
EncoderKind parse_encoder(std::string_view name);

enum class CfmSetup { SeparatedQuery, SeparatedResponse, Joint };

std::string_view setup_name(CfmSetup s);
CfmSetup parse_setup(std::string_view name);

// Sentence vector encoder shared by both classifiers: embeddings feed either
// a bi-GRU (projected final states) or a multi-width CNN.
struct SentenceEncoder {
  EncoderKind kind = EncoderKind::Rnn;
  nn::BiGru rnn;
  nn::CnnEncoder cnn;

  struct Cache {
    nn::BiGru::Cache rnn;
    nn::CnnEncoder::Cache cnn;
  };

  void init(const std::string& prefix, EncoderKind k, std::size_t in,
            std::size_t hidden, Rng& rng, double lo, double hi);
  nn::Vec encode(const std::vector<nn::Vec>& xs, Cache* cache) const;
  std::vector<nn::Vec> backward(const Cache& cache, const nn::Vec& dv);
  std::vector<nn::Param*> params();
};

struct Prediction {
  Level1 level1;
  Level2 level2;
  double prob_level1;  // max of the 4-way distribution
  double prob_level2;  // max of the 20-way distribution given level1
};

// Token ids: 0 is reserved for unknown tokens.
struct TokenDict {
  std::vector<std::string> tokens;  // [0] == "<unk>"
  std::unordered_map<std::string, int> index;

  void build(const std::vector<std::string>& vocab_tokens);  // prepends <unk>
  void assign(std::vector<std::string> full_list);           // verbatim (loading)
  int id(const std::string& token) const;
  std::vector<int> ids(const std::vector<std::string>& toks) const;
  std::size_t size() const { return tokens.size(); }
};

struct CfMModel {
  nn::TrainConfig config;
  TokenDict dict;
  nn::Embedding embed;     // (vocab, embed_dim)
  SentenceEncoder encoder;
  nn::Linear head1;        // hidden -> 4
  nn::Embedding l1_embed;  // (4, hidden)
  nn::Linear head2;        // hidden -> 20

  std::vector<nn::Param*> params();
  nn::Vec encode_ids(const std::vector<int>& ids, SentenceEncoder::Cache* cache) const;
};

CfMModel train_cfm(const Corpus& corpus, CfmSetup setup, EncoderKind encoder,
                   const nn::TrainConfig& config);

nn::Vec predict_level1(const CfMModel& model, const Segment& segment);
nn::Vec predict_level2(const CfMModel& model, const Segment& segment, Level1 d_l1);
Prediction predict_sf(const CfMModel& model, const Segment& segment);

void save_cfm(const CfMModel& model, const std::string& path);
CfMModel load_cfm(const std::string& path);

// Streams a corpus file through the classifier, replacing every segment's
// labels with the model's prediction. Memory use is per-record.
struct AnnotateStats {
  std::size_t pairs = 0;
  std::size_t segments = 0;
};
AnnotateStats annotate_corpus(const CfMModel& model, const std::string& in_path,
                              const std::string& out_path);

struct CfTModel {
  nn::TrainConfig config;
  bool with_query_sf = true;
  TokenDict dict;
  nn::Embedding embed;     // (vocab, embed_dim)
  SentenceEncoder encoder;
  nn::Embedding sf_embed;  // (20, hidden): query SF bag
  nn::Linear head1;        // hidden -> 4
  nn::Linear head2;        // hidden -> 20

  std::vector<nn::Param*> params();
};

CfTModel train_cft(const Corpus& corpus, bool with_query_sf, EncoderKind encoder,
                   const nn::TrainConfig& config);

struct CftPrediction {
  nn::Vec p1;  // 4-way response level-1 distribution
  nn::Vec p2;  // 20-way response level-2 distribution
  Level1 argmax1() const;
  Level2 argmax2() const;
};

// query_sfs: the query segments' (primary) level-2 functions; ignored when
// the model was trained without them. Order never matters: the bag is summed
// in sorted label order.
CftPrediction predict_response_sf(const CfTModel& model,
                                  const std::vector<Segment>& query_segments,
                                  const std::vector<Level2>& query_sfs);

void save_cft(const CfTModel& model, const std::string& path);
CfTModel load_cft(const std::string& path);

}  // namespace sefun

#endif  // SEFUN_CLASSIFY_HPP
