#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "sefun/errors.hpp"
#include "sefun/generate.hpp"
#include "sefun/nn.hpp"
#include "sefun/synthetic.hpp"

using namespace sefun;

namespace {

Corpus tiny_corpus(std::size_t n, std::uint64_t seed) {
  return gen_synthetic_corpus(default_template_spec(), n, {}, seed);
}

nn::TrainConfig tiny_config() {
  nn::TrainConfig c = nn::TrainConfig::desk_scale();
  c.hidden_dim = 24;
  c.embed_dim = 12;
  c.batch_size = 8;
  c.learning_rate = 0.01;
  c.max_epochs = 8;
  c.patience = 8;
  return c;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("vocabulary keeps the most frequent tokens under a cap") {
  Corpus corpus;
  ConversationPair pair;
  pair.query_segments = {make_segment("a a a b b c")};
  pair.response_segments = {make_segment("a d")};
  corpus.pairs = {pair};

  Vocabulary full = build_vocab(corpus, 50000);
  // 4 reserved + {a, b, c, d}.
  CHECK(full.size() == Vocabulary::kReserved + 4);
  CHECK(full.coverage == 1.0);
  CHECK(full.id("a") >= int(Vocabulary::kReserved));
  CHECK(full.id("zzz") == Vocabulary::kUnk);
  CHECK(full.freqs[std::size_t(full.id("a"))] == 4);
  CHECK(full.freqs[std::size_t(full.id("b"))] == 2);

  Vocabulary capped = build_vocab(corpus, 2);
  CHECK(capped.size() == Vocabulary::kReserved + 2);
  CHECK(capped.id("a") != Vocabulary::kUnk);
  CHECK(capped.id("b") != Vocabulary::kUnk);
  CHECK(capped.id("c") == Vocabulary::kUnk);
  // Kept occurrences: 4 a's + 2 b's of 8 tokens total.
  CHECK(capped.coverage == doctest::Approx(6.0 / 8.0));
}

TEST_CASE("vocabulary cap ties break by first occurrence") {
  Corpus corpus;
  ConversationPair pair;
  pair.query_segments = {make_segment("x y")};
  pair.response_segments = {make_segment("z")};
  corpus.pairs = {pair};
  Vocabulary v = build_vocab(corpus, 2);  // all freq 1; x then y seen first
  CHECK(v.id("x") != Vocabulary::kUnk);
  CHECK(v.id("y") != Vocabulary::kUnk);
  CHECK(v.id("z") == Vocabulary::kUnk);
}

TEST_CASE("vocabulary save / load round-trips") {
  Corpus corpus = tiny_corpus(30, 51);
  Vocabulary v = build_vocab(corpus, 40);
  std::string path = temp_path("sefun_vocab_rt.txt");
  save_vocab(v, path);
  Vocabulary back = load_vocab(path);
  CHECK(back.tokens == v.tokens);
  CHECK(back.freqs == v.freqs);
  // The text format carries tokens and counts only; coverage resets.
  CHECK(back.coverage == 1.0);
  CHECK(back.id("苹") == v.id("苹"));
  std::remove(path.c_str());
}

TEST_CASE("teacher-forced loss gradients agree with finite differences") {
  Corpus corpus = tiny_corpus(6, 52);
  nn::TrainConfig config = tiny_config();
  config.hidden_dim = 5;
  config.embed_dim = 4;
  config.max_epochs = 1;  // any parameter point works for a gradient check
  Seq2SeqModel model = train_cseq2seq(corpus, config, 50);

  REQUIRE(model.vocab.size() > 8);
  std::vector<int> src = {5, 6, 7};
  std::vector<int> tgt = {6, 5, Vocabulary::kEos};
  nn::zero_grads(model.params());
  teacher_forced_loss(model, src, tgt, 3, true);
  auto loss_fn = [&]() { return teacher_forced_loss(model, src, tgt, 3, false); };
  nn::FdResult rep = nn::finite_difference_check(loss_fn, model.params(), 1e-5, nullptr);
  CHECK(rep.max_rel_err < 1e-3);
}

TEST_CASE("training reduces the loss on a copy task") {
  Corpus corpus = tiny_corpus(40, 53);
  for (ConversationPair& pair : corpus.pairs) pair.response_segments = pair.query_segments;
  GenTrainReport report;
  nn::TrainConfig config = tiny_config();
  config.max_epochs = 12;
  config.patience = 12;
  Seq2SeqModel model = train_seq2seq(corpus, config, 200, &report);
  REQUIRE(!report.epoch_loss.empty());
  CHECK(report.epoch_loss.back() < report.initial_loss);
  CHECK(std::isfinite(report.epoch_loss.back()));
  CHECK_FALSE(model.conditioned);
}

TEST_CASE("beam width 1 is exactly greedy") {
  Corpus corpus = tiny_corpus(30, 54);
  Seq2SeqModel model = train_seq2seq(corpus, tiny_config(), 200);
  for (const char* q : {"苹果吗？", "为什么音乐？", "请老师。"}) {
    DecodeResult g = greedy_decode(model, q, std::nullopt);
    DecodeResult b = beam_search(model, q, std::nullopt, 1);
    CHECK(b.ids == g.ids);
    CHECK(b.norm_logprob == doctest::Approx(g.norm_logprob));
  }
}

TEST_CASE("wider beams never score below greedy") {
  Corpus corpus = tiny_corpus(30, 55);
  Seq2SeqModel model = train_seq2seq(corpus, tiny_config(), 200);
  for (const char* q : {"苹果吗？", "谁喜欢猫。", "哇电影！"}) {
    DecodeResult g = greedy_decode(model, q, std::nullopt);
    for (std::size_t beam : {2u, 5u}) {
      DecodeResult b = beam_search(model, q, std::nullopt, beam);
      CHECK(b.norm_logprob >= g.norm_logprob - 1e-12);
    }
  }
}

TEST_CASE("beam search returns an n-best list ordered best first") {
  Corpus corpus = tiny_corpus(30, 56);
  Seq2SeqModel model = train_seq2seq(corpus, tiny_config(), 200);
  DecodeResult b = beam_search(model, "苹果吗？", std::nullopt, 4);
  REQUIRE(!b.nbest.empty());
  CHECK(b.nbest.front() == b.text);
  CHECK(b.nbest.size() <= 5);  // beam + the greedy rollout
}

TEST_CASE("conditioned models require a target function and plain ones reject it") {
  Corpus corpus = tiny_corpus(20, 57);
  Seq2SeqModel plain = train_seq2seq(corpus, tiny_config(), 200);
  Seq2SeqModel cond = train_cseq2seq(corpus, tiny_config(), 200);
  CHECK(cond.conditioned);
  CHECK_THROWS_AS(greedy_decode(cond, "苹果吗？", std::nullopt), Error);
  CHECK_THROWS_AS(greedy_decode(plain, "苹果吗？", Level2::PositiveDe), Error);
  CHECK_NOTHROW(greedy_decode(cond, "苹果吗？", Level2::PositiveDe));
  CHECK_NOTHROW(beam_search(cond, "苹果吗？", Level2::YesNoIn, 2));
}

TEST_CASE("conditioning changes the decode") {
  Corpus corpus = tiny_corpus(60, 58);
  nn::TrainConfig config = tiny_config();
  config.max_epochs = 12;
  Seq2SeqModel cond = train_cseq2seq(corpus, config, 200);
  // Different target functions should steer at least some queries differently.
  std::size_t differs = 0;
  for (const char* q : {"苹果吗？", "为什么音乐？", "请老师。", "哇电影！"}) {
    DecodeResult a = greedy_decode(cond, q, Level2::PositiveDe);
    DecodeResult b = greedy_decode(cond, q, Level2::YesNoIn);
    differs += a.ids != b.ids;
  }
  CHECK(differs > 0);
}

TEST_CASE("seq2seq save / load reproduces decodes bit-exactly") {
  Corpus corpus = tiny_corpus(25, 59);
  Seq2SeqModel model = train_cseq2seq(corpus, tiny_config(), 200);
  std::string path = temp_path("sefun_s2s_rt.bin");
  save_seq2seq(model, path);
  Seq2SeqModel back = load_seq2seq(path);
  CHECK(back.conditioned == model.conditioned);
  CHECK(back.vocab.tokens == model.vocab.tokens);

  for (const char* q : {"苹果吗？", "请老师。"}) {
    DecodeResult a = beam_search(model, q, Level2::PositiveDe, 3);
    DecodeResult b = beam_search(back, q, Level2::PositiveDe, 3);
    CHECK(a.ids == b.ids);
    CHECK(a.norm_logprob == b.norm_logprob);
    CHECK(a.nbest == b.nbest);
  }
  std::remove(path.c_str());
}

TEST_CASE("decode respects max_len") {
  Corpus corpus = tiny_corpus(20, 60);
  Seq2SeqModel model = train_seq2seq(corpus, tiny_config(), 200);
  DecodeResult d = greedy_decode(model, "苹果吗？", std::nullopt, 4);
  CHECK(d.ids.size() <= 4);
}

TEST_CASE("generation training refuses an empty corpus") {
  CHECK_THROWS_AS(train_seq2seq(Corpus{}, tiny_config(), 100), EmptyCorpusError);
}
