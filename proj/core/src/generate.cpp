#include "sefun/generate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <utility>

#include "sefun/errors.hpp"
#include "sefun/model_io.hpp"
#include "sefun/rng.hpp"
#include "sefun/text.hpp"

namespace sefun {

namespace {

const char* const kReservedTokens[Vocabulary::kReserved] = {"<pad>", "<unk>", "<bos>",
                                                            "<eos>"};

std::vector<std::string> segment_tokens(const Segment& seg) {
  if (!seg.tokens.empty()) return seg.tokens;
  if (!seg.text.empty()) {
    auto toks = default_tokenize(seg.text);
    if (!toks.empty()) return toks;
  }
  throw EmptyInputError("segment has no tokens");
}

std::vector<std::string> side_tokens(const std::vector<Segment>& segments) {
  std::vector<std::string> out;
  for (const Segment& seg : segments) {
    auto toks = segment_tokens(seg);
    out.insert(out.end(), toks.begin(), toks.end());
  }
  return out;
}

}  // namespace

int Vocabulary::id(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? kUnk : it->second;
}

void Vocabulary::rebuild_index() {
  index.clear();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    index[tokens[i]] = static_cast<int>(i);
  }
}

Vocabulary build_vocab(const Corpus& corpus, std::size_t cap) {
  if (corpus.pairs.empty()) {
    throw EmptyCorpusError("cannot build a vocabulary from an empty corpus");
  }
  // Counts in first-occurrence order so frequency ties resolve to the token
  // seen earlier.
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::pair<std::string, std::size_t>> counts;
  std::size_t total = 0;
  auto tally = [&](const std::vector<std::string>& toks) {
    for (const std::string& t : toks) {
      ++total;
      auto [it, fresh] = slot.emplace(t, counts.size());
      if (fresh) counts.emplace_back(t, 0);
      ++counts[it->second].second;
    }
  };
  for (const ConversationPair& pair : corpus.pairs) {
    tally(side_tokens(pair.query_segments));
    tally(side_tokens(pair.response_segments));
  }

  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return counts[a].second > counts[b].second;
  });

  Vocabulary v;
  v.tokens.assign(kReservedTokens, kReservedTokens + Vocabulary::kReserved);
  v.freqs.assign(Vocabulary::kReserved, 0);
  std::size_t kept = 0;
  const std::size_t keep = std::min(cap, order.size());
  for (std::size_t i = 0; i < keep; ++i) {
    v.tokens.push_back(counts[order[i]].first);
    v.freqs.push_back(counts[order[i]].second);
    kept += counts[order[i]].second;
  }
  v.coverage = total == 0 ? 1.0 : static_cast<double>(kept) / static_cast<double>(total);
  v.rebuild_index();
  return v;
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open \"" + path + "\" for writing");
  out << kVocabHeader << '\n';
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
    out << vocab.tokens[i] << '\t' << vocab.freqs[i] << '\n';
  }
  out.close();
  if (!out) throw IoError("failed writing \"" + path + "\"");
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open \"" + path + "\"");
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty vocabulary file", lineno);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kVocabHeader) throw SchemaVersionMismatchError("bad vocabulary header: \"" + line + "\"");

  Vocabulary v;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected token<TAB>freq", lineno);
    v.tokens.push_back(line.substr(0, tab));
    try {
      v.freqs.push_back(std::stoull(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw ParseError("bad frequency \"" + line.substr(tab + 1) + "\"", lineno);
    }
  }
  if (v.tokens.size() < Vocabulary::kReserved) {
    throw ParseError("vocabulary is missing its reserved tokens", lineno);
  }
  for (std::size_t i = 0; i < Vocabulary::kReserved; ++i) {
    if (v.tokens[i] != kReservedTokens[i]) {
      throw ParseError("reserved token slot " + std::to_string(i) + " holds \"" +
                           v.tokens[i] + "\"",
                       i + 2);
    }
  }
  v.rebuild_index();
  return v;
}

// ----------------------------------------------------------------- model

std::vector<nn::Param*> Seq2SeqModel::params() {
  std::vector<nn::Param*> ps;
  auto append = [&](std::vector<nn::Param*> more) {
    ps.insert(ps.end(), more.begin(), more.end());
  };
  append(enc_embed.params());
  append(dec_embed.params());
  append(encoder.params());
  append(dec_init.params());
  append(decoder.params());
  append(attention.params());
  append(out_proj.params());
  if (conditioned) append(sf_embed.params());
  return ps;
}

namespace {

constexpr double kGenKind = 3.0;

void init_model(Seq2SeqModel& m, const nn::TrainConfig& config, bool conditioned,
                Vocabulary vocab, Rng& rng) {
  m.config = config;
  m.conditioned = conditioned;
  m.vocab = std::move(vocab);
  const std::size_t V = m.vocab.size();
  const std::size_t E = config.embed_dim;
  const std::size_t H = config.hidden_dim;
  const std::size_t S = conditioned ? E : 0;
  const double lo = config.init_lo;
  const double hi = config.init_hi;
  m.enc_embed.init("enc_embed", V, E, rng, lo, hi);
  m.dec_embed.init("dec_embed", V, E, rng, lo, hi);
  m.encoder.init("enc", E, H, rng, lo, hi);
  m.dec_init.init("dec_init", H, 2 * H, rng, lo, hi);
  m.decoder.init("dec", E + S + 2 * H, H, rng, lo, hi);
  m.attention.init("att", H, 2 * H, H, rng, lo, hi);
  m.out_proj.init("out", V, H, rng, lo, hi);
  if (conditioned) m.sf_embed.init("sf_embed", kNumLevel2, E, rng, lo, hi);
}

nn::Vec tanh_vec(const nn::Vec& v) {
  nn::Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

struct GenSample {
  std::vector<int> src;  // query token ids
  std::vector<int> tgt;  // response token ids followed by <eos>
  int sf = -1;           // level-2 code for the conditioned variant
};

std::vector<GenSample> make_samples(const Vocabulary& vocab, const Corpus& corpus,
                                    bool conditioned) {
  std::vector<GenSample> samples;
  samples.reserve(corpus.pairs.size());
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const ConversationPair& pair = corpus.pairs[i];
    GenSample s;
    for (const std::string& t : side_tokens(pair.query_segments)) {
      s.src.push_back(vocab.id(t));
    }
    for (const std::string& t : side_tokens(pair.response_segments)) {
      s.tgt.push_back(vocab.id(t));
    }
    s.tgt.push_back(Vocabulary::kEos);
    if (conditioned) {
      const Segment& first = pair.response_segments.front();
      if (!first.labeled()) {
        throw MissingSentenceFunctionError(
            "pair " + std::to_string(i) +
            ": first response segment has no sentence function");
      }
      s.sf = static_cast<int>(first.primary().level2);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Tensor> snapshot(const std::vector<nn::Param*>& ps) {
  std::vector<Tensor> out;
  out.reserve(ps.size());
  for (const nn::Param* p : ps) out.push_back(p->value);
  return out;
}

void restore(const std::vector<nn::Param*>& ps, const std::vector<Tensor>& snap) {
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = snap[i];
}

void split_indices(std::size_t n, Rng& rng, std::vector<std::size_t>* train,
                   std::vector<std::size_t>* val) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  const std::size_t n_val = n >= 20 ? n / 10 : 0;
  val->assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  train->assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
}

}  // namespace

double teacher_forced_loss(Seq2SeqModel& m, const std::vector<int>& src,
                           const std::vector<int>& tgt, int sf, bool accumulate_grads,
                           double scale) {
  if (src.empty()) throw EmptyInputError("empty source sequence");
  if (tgt.empty()) throw EmptyInputError("empty target sequence");
  if (m.conditioned && sf < 0) {
    throw MissingSentenceFunctionError("conditioned model given no sentence function");
  }

  const std::size_t E = m.config.embed_dim;
  const std::size_t S = m.conditioned ? E : 0;
  const std::size_t T = tgt.size();

  std::vector<nn::Vec> xs;
  xs.reserve(src.size());
  for (int id : src) xs.push_back(m.enc_embed.lookup(static_cast<std::size_t>(id)));
  nn::BiGru::Cache ec;
  const std::vector<nn::Vec> states = m.encoder.encode_states(xs, &ec);
  const nn::Vec pre0 = m.dec_init.forward(ec.concat);
  const nn::Vec h0 = tanh_vec(pre0);
  nn::Vec sfv;
  if (m.conditioned) sfv = m.sf_embed.lookup(static_cast<std::size_t>(sf));

  struct Step {
    nn::Attention::Cache att;
    nn::GruCell::Cache cell;
    nn::Vec h;        // decoder state after the step
    nn::Vec dlogits;  // unscaled CE gradient
    int prev = 0;
  };
  std::vector<Step> steps(T);

  double loss = 0.0;
  nn::Vec h = h0;
  for (std::size_t t = 0; t < T; ++t) {
    Step& st = steps[t];
    st.prev = t == 0 ? Vocabulary::kBos : tgt[t - 1];
    const nn::Vec ctx = m.attention.forward(h, states, &st.att);
    nn::Vec u = m.dec_embed.lookup(static_cast<std::size_t>(st.prev));
    if (m.conditioned) u = nn::vconcat(u, sfv);
    u = nn::vconcat(u, ctx);
    st.h = m.decoder.forward(u, h, &st.cell);
    const nn::Vec logits = m.out_proj.forward(st.h);
    loss += nn::softmax_xent(logits, static_cast<std::size_t>(tgt[t]),
                             accumulate_grads ? &st.dlogits : nullptr);
    h = st.h;
  }
  const double mean_loss = loss / static_cast<double>(T);
  if (!accumulate_grads) return mean_loss;

  // Backprop through time. Gradients for the per-token mean, scaled by the
  // caller's batch weight.
  const double w = scale / static_cast<double>(T);
  std::vector<nn::Vec> dstates(states.size(), nn::Vec(states.front().size(), 0.0));
  nn::Vec carry(h0.size(), 0.0);
  for (std::size_t ti = T; ti-- > 0;) {
    Step& st = steps[ti];
    nn::Vec dh = carry;
    nn::Vec dl = st.dlogits;
    for (double& g : dl) g *= w;
    const nn::Vec dout = m.out_proj.backward(st.h, dl);
    for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += dout[i];

    nn::Vec du(m.decoder.input_dim(), 0.0);
    const nn::Vec dhprev = m.decoder.backward(st.cell, dh, &du);

    m.dec_embed.accumulate(static_cast<std::size_t>(st.prev), nn::Vec(du.begin(), du.begin() + static_cast<std::ptrdiff_t>(E)));
    if (m.conditioned) {
      m.sf_embed.accumulate(static_cast<std::size_t>(sf),
                            nn::Vec(du.begin() + static_cast<std::ptrdiff_t>(E),
                                    du.begin() + static_cast<std::ptrdiff_t>(E + S)));
    }
    const nn::Vec dctx(du.begin() + static_cast<std::ptrdiff_t>(E + S), du.end());

    std::vector<nn::Vec> datt;
    const nn::Vec ds = m.attention.backward(st.att, dctx, &datt);
    for (std::size_t j = 0; j < dstates.size(); ++j) {
      for (std::size_t i = 0; i < dstates[j].size(); ++i) dstates[j][i] += datt[j][i];
    }
    carry = dhprev;
    for (std::size_t i = 0; i < carry.size(); ++i) carry[i] += ds[i];
  }

  nn::Vec dpre0(h0.size());
  for (std::size_t i = 0; i < h0.size(); ++i) dpre0[i] = carry[i] * (1.0 - h0[i] * h0[i]);
  const nn::Vec dconcat = m.dec_init.backward(ec.concat, dpre0);
  const std::vector<nn::Vec> dxs = m.encoder.backward_full(ec, dstates, dconcat);
  for (std::size_t i = 0; i < src.size(); ++i) {
    m.enc_embed.accumulate(static_cast<std::size_t>(src[i]), dxs[i]);
  }
  return mean_loss;
}

namespace {

Seq2SeqModel train_impl(const Corpus& corpus, const nn::TrainConfig& config,
                        std::size_t vocab_cap, bool conditioned, GenTrainReport* report) {
  config.validate();
  if (corpus.pairs.empty()) throw EmptyCorpusError("cannot train on an empty corpus");

  Rng rng(config.seed);
  Seq2SeqModel model;
  init_model(model, config, conditioned, build_vocab(corpus, vocab_cap), rng);
  const std::vector<GenSample> samples = make_samples(model.vocab, corpus, conditioned);
  const std::vector<nn::Param*> ps = model.params();

  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  split_indices(samples.size(), rng, &train_idx, &val_idx);

  auto mean_loss = [&](const std::vector<std::size_t>& idx) {
    double total = 0.0;
    for (std::size_t i : idx) {
      const GenSample& s = samples[i];
      total += teacher_forced_loss(model, s.src, s.tgt, s.sf, false, 1.0);
    }
    return idx.empty() ? 0.0 : total / static_cast<double>(idx.size());
  };

  if (report) {
    report->initial_loss = mean_loss(train_idx);
    report->epoch_loss.clear();
  }

  nn::AdamState adam;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_snap = snapshot(ps);
  std::size_t bad_epochs = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < train_idx.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, train_idx.size());
      const double scale = 1.0 / static_cast<double>(end - start);
      nn::zero_grads(ps);
      for (std::size_t b = start; b < end; ++b) {
        const GenSample& s = samples[train_idx[b]];
        epoch_total += teacher_forced_loss(model, s.src, s.tgt, s.sf, true, scale);
      }
      nn::clip_gradients(ps, config.clip);
      nn::adam_step(ps, adam, config.learning_rate);
    }
    const double train_loss =
        train_idx.empty() ? 0.0 : epoch_total / static_cast<double>(train_idx.size());
    if (report) report->epoch_loss.push_back(train_loss);

    const double metric = val_idx.empty() ? train_loss : mean_loss(val_idx);
    if (metric < best - 1e-12) {
      best = metric;
      best_snap = snapshot(ps);
      bad_epochs = 0;
    } else if (++bad_epochs >= config.patience) {
      break;
    }
  }
  restore(ps, best_snap);
  return model;
}

}  // namespace

Seq2SeqModel train_seq2seq(const Corpus& corpus, const nn::TrainConfig& config,
                           std::size_t vocab_cap, GenTrainReport* report) {
  return train_impl(corpus, config, vocab_cap, false, report);
}

Seq2SeqModel train_cseq2seq(const Corpus& corpus, const nn::TrainConfig& config,
                            std::size_t vocab_cap, GenTrainReport* report) {
  return train_impl(corpus, config, vocab_cap, true, report);
}

// ----------------------------------------------------------------- file io

void save_seq2seq(const Seq2SeqModel& model, const std::string& path) {
  ModelFile mf;
  mf.config["model_kind"] = kGenKind;
  mf.config["conditioned"] = model.conditioned ? 1.0 : 0.0;
  mf.config["vocab_coverage"] = model.vocab.coverage;
  store_train_config(mf, model.config);
  mf.taxonomy_codes = current_taxonomy_codes();
  mf.string_lists["vocab"] = model.vocab.tokens;
  Tensor freqs({model.vocab.freqs.size()});
  for (std::size_t i = 0; i < model.vocab.freqs.size(); ++i) {
    freqs.data[i] = static_cast<double>(model.vocab.freqs[i]);
  }
  mf.tensors["vocab_freq"] = std::move(freqs);
  auto ps = const_cast<Seq2SeqModel&>(model).params();
  store_params(mf, std::vector<const nn::Param*>(ps.begin(), ps.end()));
  save_model_file(mf, path);
}

Seq2SeqModel load_seq2seq(const std::string& path) {
  ModelFile mf = load_model_file(path);
  if (config_value(mf, "model_kind") != kGenKind) {
    throw SchemaVersionMismatchError("\"" + path + "\" is not a seq2seq model file");
  }
  check_taxonomy(mf, path);

  Vocabulary vocab;
  auto vocab_it = mf.string_lists.find("vocab");
  if (vocab_it == mf.string_lists.end()) {
    throw ParseError("model file \"" + path + "\" is missing its vocabulary");
  }
  vocab.tokens = vocab_it->second;
  auto freq_it = mf.tensors.find("vocab_freq");
  if (freq_it == mf.tensors.end() || freq_it->second.size() != vocab.tokens.size()) {
    throw ParseError("model file \"" + path + "\" has a bad vocab_freq tensor");
  }
  vocab.freqs.resize(vocab.tokens.size());
  for (std::size_t i = 0; i < vocab.freqs.size(); ++i) {
    vocab.freqs[i] = static_cast<std::size_t>(freq_it->second.data[i]);
  }
  vocab.coverage = config_value(mf, "vocab_coverage");
  vocab.rebuild_index();

  Seq2SeqModel model;
  Rng rng(0);  // shapes only; values come from the file
  init_model(model, load_train_config(mf), config_value(mf, "conditioned") != 0.0,
             std::move(vocab), rng);
  load_params(mf, model.params());
  return model;
}

// ----------------------------------------------------------------- decoding

namespace {

struct DecodeContext {
  std::vector<nn::Vec> states;
  nn::Vec h0;
  nn::Vec sfv;  // empty for the unconditioned model
};

DecodeContext make_context(const Seq2SeqModel& m, const std::string& query_text,
                           const std::optional<Level2>& sf) {
  if (m.conditioned && !sf.has_value()) {
    throw MissingSentenceFunctionError(
        "a conditioned model needs a target sentence function");
  }
  if (!m.conditioned && sf.has_value()) {
    throw InvalidStateError("this model was trained without sentence functions");
  }
  const std::vector<std::string> toks = default_tokenize(query_text);
  if (toks.empty()) throw EmptyInputError("query has no tokens");

  std::vector<nn::Vec> xs;
  xs.reserve(toks.size());
  for (const std::string& t : toks) {
    xs.push_back(m.enc_embed.lookup(static_cast<std::size_t>(m.vocab.id(t))));
  }
  nn::BiGru::Cache ec;
  DecodeContext ctx;
  ctx.states = m.encoder.encode_states(xs, &ec);
  ctx.h0 = tanh_vec(m.dec_init.forward(ec.concat));
  if (m.conditioned) {
    ctx.sfv = m.sf_embed.lookup(static_cast<std::size_t>(*sf));
  }
  return ctx;
}

// Log-probabilities over the vocabulary for one decoder step.
nn::Vec step_logprobs(const Seq2SeqModel& m, const DecodeContext& ctx, const nn::Vec& h,
                      int prev, nn::Vec* h_next) {
  nn::Attention::Cache ac;
  const nn::Vec c = m.attention.forward(h, ctx.states, &ac);
  nn::Vec u = m.dec_embed.lookup(static_cast<std::size_t>(prev));
  if (m.conditioned) u = nn::vconcat(u, ctx.sfv);
  u = nn::vconcat(u, c);
  *h_next = m.decoder.forward(u, h, nullptr);
  nn::Vec p = nn::softmax(m.out_proj.forward(*h_next));
  for (double& x : p) x = std::log(x);
  return p;
}

struct Hyp {
  std::vector<int> ids;  // emitted tokens, <eos> excluded
  double logp = 0.0;
  std::size_t steps = 0;  // log-prob terms summed (counts the <eos> step)
  nn::Vec h;
  bool done = false;
};

double norm_score(const Hyp& h) {
  return h.logp / static_cast<double>(std::max<std::size_t>(1, h.steps));
}

// Lexicographic order of (ids + tok) without materializing the sequence.
bool extended_seq_less(const std::vector<int>& a_ids, int a_tok,
                       const std::vector<int>& b_ids, int b_tok) {
  const std::size_t na = a_ids.size() + 1;
  const std::size_t nb = b_ids.size() + 1;
  for (std::size_t i = 0; i < std::min(na, nb); ++i) {
    const int av = i < a_ids.size() ? a_ids[i] : a_tok;
    const int bv = i < b_ids.size() ? b_ids[i] : b_tok;
    if (av != bv) return av < bv;
  }
  return na < nb;
}

Hyp greedy_rollout(const Seq2SeqModel& m, const DecodeContext& ctx, std::size_t max_len) {
  Hyp g;
  g.h = ctx.h0;
  for (std::size_t t = 0; t < max_len; ++t) {
    const int prev = g.ids.empty() ? Vocabulary::kBos : g.ids.back();
    nn::Vec hn;
    const nn::Vec lp = step_logprobs(m, ctx, g.h, prev, &hn);
    std::size_t best = 0;
    for (std::size_t i = 1; i < lp.size(); ++i) {
      if (lp[i] > lp[best]) best = i;  // ties keep the lower token id
    }
    g.logp += lp[best];
    ++g.steps;
    g.h = std::move(hn);
    if (static_cast<int>(best) == Vocabulary::kEos) {
      g.done = true;
      break;
    }
    g.ids.push_back(static_cast<int>(best));
  }
  return g;
}

std::string join_tokens(const Vocabulary& vocab, const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(ids[i]);
  }
  return out;
}

DecodeResult finalize(const Seq2SeqModel& m, std::vector<Hyp> pool, std::size_t beam) {
  std::sort(pool.begin(), pool.end(), [](const Hyp& a, const Hyp& b) {
    const double na = norm_score(a);
    const double nb = norm_score(b);
    if (na != nb) return na > nb;
    return std::lexicographical_compare(a.ids.begin(), a.ids.end(), b.ids.begin(),
                                        b.ids.end());
  });
  pool.erase(std::unique(pool.begin(), pool.end(),
                         [](const Hyp& a, const Hyp& b) { return a.ids == b.ids; }),
             pool.end());

  DecodeResult r;
  r.ids = pool.front().ids;
  r.text = join_tokens(m.vocab, r.ids);
  r.norm_logprob = norm_score(pool.front());
  const std::size_t n = std::min(beam, pool.size());
  for (std::size_t i = 0; i < n; ++i) r.nbest.push_back(join_tokens(m.vocab, pool[i].ids));
  return r;
}

}  // namespace

DecodeResult greedy_decode(const Seq2SeqModel& model, const std::string& query_text,
                           std::optional<Level2> target_sf, std::size_t max_len) {
  const DecodeContext ctx = make_context(model, query_text, target_sf);
  const Hyp g = greedy_rollout(model, ctx, max_len);
  DecodeResult r;
  r.ids = g.ids;
  r.text = join_tokens(model.vocab, r.ids);
  r.norm_logprob = norm_score(g);
  return r;
}

DecodeResult beam_search(const Seq2SeqModel& model, const std::string& query_text,
                         std::optional<Level2> target_sf, std::size_t beam,
                         std::size_t max_len) {
  if (beam == 0) throw Error("beam width must be positive");
  const DecodeContext ctx = make_context(model, query_text, target_sf);

  std::vector<Hyp> live(1);
  live[0].h = ctx.h0;
  std::vector<Hyp> pool;

  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    struct Cand {
      std::size_t parent;
      int tok;
      double logp;
    };
    std::vector<Cand> cands;
    std::vector<nn::Vec> next_h(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      const int prev = live[i].ids.empty() ? Vocabulary::kBos : live[i].ids.back();
      const nn::Vec lp = step_logprobs(model, ctx, live[i].h, prev, &next_h[i]);
      std::vector<std::size_t> idx(lp.size());
      std::iota(idx.begin(), idx.end(), 0);
      const std::size_t take = std::min(beam, lp.size());
      std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take),
                        idx.end(), [&](std::size_t a, std::size_t b) {
                          if (lp[a] != lp[b]) return lp[a] > lp[b];
                          return a < b;
                        });
      for (std::size_t j = 0; j < take; ++j) {
        cands.push_back({i, static_cast<int>(idx[j]), live[i].logp + lp[idx[j]]});
      }
    }
    std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      return extended_seq_less(live[a.parent].ids, a.tok, live[b.parent].ids, b.tok);
    });

    std::vector<Hyp> next_live;
    const std::size_t keep = std::min(beam, cands.size());
    for (std::size_t j = 0; j < keep; ++j) {
      const Cand& c = cands[j];
      Hyp h;
      h.ids = live[c.parent].ids;
      h.logp = c.logp;
      h.steps = live[c.parent].steps + 1;
      h.h = next_h[c.parent];
      if (c.tok == Vocabulary::kEos) {
        h.done = true;
        pool.push_back(std::move(h));
      } else {
        h.ids.push_back(c.tok);
        next_live.push_back(std::move(h));
      }
    }
    live = std::move(next_live);
  }
  for (Hyp& h : live) pool.push_back(std::move(h));  // cut off at max_len
  pool.push_back(greedy_rollout(model, ctx, max_len));
  return finalize(model, pool, beam);
}

}  // namespace sefun
