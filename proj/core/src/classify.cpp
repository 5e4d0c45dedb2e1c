#include "sefun/classify.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "sefun/errors.hpp"
#include "sefun/model_io.hpp"

namespace sefun {

namespace {

std::size_t argmax(const nn::Vec& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::vector<std::string> segment_tokens(const Segment& seg) {
  if (!seg.tokens.empty()) return seg.tokens;
  if (!seg.text.empty()) {
    auto toks = default_tokenize(seg.text);
    if (!toks.empty()) return toks;
  }
  throw EmptyInputError("segment has no tokens");
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

// First-occurrence vocabulary over token lists.
std::vector<std::string> collect_vocab(const std::vector<std::vector<std::string>>& lists) {
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> seen;
  for (const auto& toks : lists) {
    for (const auto& t : toks) {
      if (seen.emplace(t, 1).second) vocab.push_back(t);
    }
  }
  return vocab;
}

// Deterministic train/validation split over sample indices.
void split_indices(std::size_t n, Rng& rng, std::vector<std::size_t>* train,
                   std::vector<std::size_t>* val) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  const std::size_t n_val = n >= 20 ? n / 10 : 0;
  val->assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  train->assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
}

void scale_vec(nn::Vec& v, double s) {
  for (double& x : v) x *= s;
}

}  // namespace

std::string_view encoder_name(EncoderKind k) {
  return k == EncoderKind::Cnn ? "cnn" : "rnn";
}

EncoderKind parse_encoder(std::string_view name) {
  if (name == "cnn") return EncoderKind::Cnn;
  if (name == "rnn") return EncoderKind::Rnn;
  throw Error("unknown encoder \"" + std::string(name) + "\" (expected cnn or rnn)");
}

std::string_view setup_name(CfmSetup s) {
  switch (s) {
    case CfmSetup::SeparatedQuery:
      return "query";
    case CfmSetup::SeparatedResponse:
      return "response";
    case CfmSetup::Joint:
      return "joint";
  }
  return "joint";
}

CfmSetup parse_setup(std::string_view name) {
  if (name == "query") return CfmSetup::SeparatedQuery;
  if (name == "response") return CfmSetup::SeparatedResponse;
  if (name == "joint") return CfmSetup::Joint;
  throw Error("unknown setup \"" + std::string(name) + "\" (expected query, response or joint)");
}

void SentenceEncoder::init(const std::string& prefix, EncoderKind k, std::size_t in,
                           std::size_t hidden, Rng& rng, double lo, double hi) {
  kind = k;
  if (kind == EncoderKind::Rnn) {
    rnn.init(prefix, in, hidden, rng, lo, hi);
  } else {
    cnn.init(prefix, in, hidden, {1, 2, 3}, rng, lo, hi);
  }
}

nn::Vec SentenceEncoder::encode(const std::vector<nn::Vec>& xs, Cache* cache) const {
  if (kind == EncoderKind::Rnn) return rnn.encode(xs, cache != nullptr ? &cache->rnn : nullptr);
  return cnn.encode(xs, cache != nullptr ? &cache->cnn : nullptr);
}

std::vector<nn::Vec> SentenceEncoder::backward(const Cache& cache, const nn::Vec& dv) {
  if (kind == EncoderKind::Rnn) return rnn.backward(cache.rnn, dv);
  return cnn.backward(cache.cnn, dv);
}

std::vector<nn::Param*> SentenceEncoder::params() {
  if (kind == EncoderKind::Rnn) return rnn.params();
  return cnn.params();
}

void TokenDict::build(const std::vector<std::string>& vocab_tokens) {
  tokens.clear();
  tokens.push_back("<unk>");
  tokens.insert(tokens.end(), vocab_tokens.begin(), vocab_tokens.end());
  index.clear();
  for (std::size_t i = 0; i < tokens.size(); ++i) index[tokens[i]] = static_cast<int>(i);
}

void TokenDict::assign(std::vector<std::string> full_list) {
  tokens = std::move(full_list);
  index.clear();
  for (std::size_t i = 0; i < tokens.size(); ++i) index[tokens[i]] = static_cast<int>(i);
}

int TokenDict::id(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? 0 : it->second;
}

std::vector<int> TokenDict::ids(const std::vector<std::string>& toks) const {
  std::vector<int> out;
  out.reserve(toks.size());
  for (const auto& t : toks) out.push_back(id(t));
  return out;
}

std::vector<nn::Param*> CfMModel::params() {
  std::vector<nn::Param*> out = embed.params();
  for (nn::Param* p : encoder.params()) out.push_back(p);
  for (nn::Param* p : head1.params()) out.push_back(p);
  for (nn::Param* p : l1_embed.params()) out.push_back(p);
  for (nn::Param* p : head2.params()) out.push_back(p);
  return out;
}

nn::Vec CfMModel::encode_ids(const std::vector<int>& ids,
                             SentenceEncoder::Cache* cache) const {
  std::vector<nn::Vec> xs;
  xs.reserve(ids.size());
  for (int id : ids) xs.push_back(embed.lookup(static_cast<std::size_t>(id)));
  return encoder.encode(xs, cache);
}

namespace {

struct CfmSample {
  std::vector<int> ids;
  std::size_t gold1;
  std::size_t gold2;
};

}  // namespace

CfMModel train_cfm(const Corpus& corpus, CfmSetup setup, EncoderKind encoder,
                   const nn::TrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw EmptyCorpusError("cannot train CfM on an empty corpus");

  std::vector<const Segment*> segs;
  for (const ConversationPair& pair : corpus.pairs) {
    if (setup != CfmSetup::SeparatedResponse) {
      for (const Segment& s : pair.query_segments) segs.push_back(&s);
    }
    if (setup != CfmSetup::SeparatedQuery) {
      for (const Segment& s : pair.response_segments) segs.push_back(&s);
    }
  }
  if (segs.empty()) throw EmptyCorpusError("corpus has no segments for this setup");

  std::vector<std::vector<std::string>> tok_lists;
  tok_lists.reserve(segs.size());
  for (const Segment* s : segs) {
    if (!s->labeled()) {
      throw UnlabeledSegmentError("unlabeled segment \"" + s->text + "\" in training corpus");
    }
    tok_lists.push_back(segment_tokens(*s));
  }

  CfMModel model;
  model.config = config;
  model.dict.build(collect_vocab(tok_lists));

  std::vector<CfmSample> samples;
  samples.reserve(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const SentenceFunction sf = segs[i]->primary();
    samples.push_back({model.dict.ids(tok_lists[i]),
                       static_cast<std::size_t>(sf.level1),
                       static_cast<std::size_t>(sf.level2)});
  }

  Rng rng(config.seed);
  model.embed.init("embed", model.dict.size(), config.embed_dim, rng, config.init_lo,
                   config.init_hi);
  model.encoder.init("enc", encoder, config.embed_dim, config.hidden_dim, rng,
                     config.init_lo, config.init_hi);
  model.head1.init("head1", kNumLevel1, config.hidden_dim, rng, config.init_lo,
                   config.init_hi);
  model.l1_embed.init("l1e", kNumLevel1, config.hidden_dim, rng, config.init_lo,
                      config.init_hi);
  model.head2.init("head2", kNumLevel2, config.hidden_dim, rng, config.init_lo,
                   config.init_hi);

  std::vector<std::size_t> train_idx, val_idx;
  split_indices(samples.size(), rng, &train_idx, &val_idx);
  const std::vector<std::size_t>& eval_idx = val_idx.empty() ? train_idx : val_idx;

  // Phase 1: level-1 head to convergence.
  std::vector<nn::Param*> p1 = model.embed.params();
  for (nn::Param* p : model.encoder.params()) p1.push_back(p);
  for (nn::Param* p : model.head1.params()) p1.push_back(p);

  auto step_l1 = [&](const CfmSample& s, bool learn, double scale) {
    SentenceEncoder::Cache cache;
    const nn::Vec v = model.encode_ids(s.ids, &cache);
    nn::Vec dlogits;
    const double loss = nn::softmax_xent(model.head1.forward(v), s.gold1, &dlogits);
    if (learn) {
      scale_vec(dlogits, scale);
      const nn::Vec dv = model.head1.backward(v, dlogits);
      const auto dxs = model.encoder.backward(cache, dv);
      for (std::size_t i = 0; i < s.ids.size(); ++i) {
        model.embed.accumulate(static_cast<std::size_t>(s.ids[i]), dxs[i]);
      }
    }
    return loss;
  };

  auto eval_l1 = [&](const std::vector<std::size_t>& set) {
    std::size_t hit = 0;
    for (std::size_t i : set) {
      const nn::Vec v = model.encode_ids(samples[i].ids, nullptr);
      if (argmax(model.head1.forward(v)) == samples[i].gold1) hit++;
    }
    return set.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(set.size());
  };

  auto run_phase = [&](const std::vector<nn::Param*>& params,
                       const std::function<void(const CfmSample&, double)>& learn_step,
                       const std::function<double()>& eval_fn) {
    nn::AdamState adam;
    double best = -1.0;
    std::size_t since = 0;
    std::vector<Tensor> best_snap;
    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
      rng.shuffle(train_idx);
      for (std::size_t off = 0; off < train_idx.size(); off += config.batch_size) {
        const std::size_t end = std::min(off + config.batch_size, train_idx.size());
        nn::zero_grads(params);
        const double scale = 1.0 / static_cast<double>(end - off);
        for (std::size_t i = off; i < end; ++i) learn_step(samples[train_idx[i]], scale);
        nn::clip_gradients(params, config.clip);
        nn::adam_step(params, adam, config.learning_rate);
      }
      const double acc = eval_fn();
      if (acc > best + 1e-12) {
        best = acc;
        best_snap = snapshot(params);
        since = 0;
      } else if (++since >= config.patience) {
        break;
      }
    }
    if (!best_snap.empty()) restore(params, best_snap);
  };

  run_phase(
      p1, [&](const CfmSample& s, double scale) { step_l1(s, true, scale); },
      [&] { return eval_l1(eval_idx); });

  // The converged model's level-1 estimates, fixed for all of phase 2.
  std::vector<std::size_t> d1(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const nn::Vec v = model.encode_ids(samples[i].ids, nullptr);
    d1[i] = argmax(model.head1.forward(v));
  }

  // Phase 2: level-2 head conditioned on the phase-1 estimate. The level-1
  // loss stays in the objective so the shared encoder cannot drift away from
  // the already-converged head.
  std::vector<nn::Param*> p2 = model.params();

  auto step_l2 = [&](const CfmSample& s, std::size_t d, double scale) {
    SentenceEncoder::Cache cache;
    const nn::Vec v = model.encode_ids(s.ids, &cache);
    nn::Vec dlogits1;
    nn::softmax_xent(model.head1.forward(v), s.gold1, &dlogits1);
    const nn::Vec u = nn::vadd(v, model.l1_embed.lookup(d));
    nn::Vec dlogits2;
    nn::softmax_xent(model.head2.forward(u), s.gold2, &dlogits2);
    scale_vec(dlogits1, scale);
    scale_vec(dlogits2, scale);
    nn::Vec dv = model.head1.backward(v, dlogits1);
    const nn::Vec du = model.head2.backward(u, dlogits2);
    model.l1_embed.accumulate(d, du);
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += du[i];
    const auto dxs = model.encoder.backward(cache, dv);
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
      model.embed.accumulate(static_cast<std::size_t>(s.ids[i]), dxs[i]);
    }
  };

  auto eval_both = [&] {
    std::size_t hit1 = 0, hit2 = 0;
    for (std::size_t i : eval_idx) {
      const nn::Vec v = model.encode_ids(samples[i].ids, nullptr);
      const std::size_t a1 = argmax(model.head1.forward(v));
      if (a1 == samples[i].gold1) hit1++;
      const nn::Vec u = nn::vadd(v, model.l1_embed.lookup(a1));
      if (argmax(model.head2.forward(u)) == samples[i].gold2) hit2++;
    }
    const double n = static_cast<double>(eval_idx.size());
    return eval_idx.empty() ? 0.0 : (static_cast<double>(hit1) + static_cast<double>(hit2)) / (2.0 * n);
  };

  run_phase(
      p2,
      [&](const CfmSample& s, double scale) {
        const std::size_t i = static_cast<std::size_t>(&s - samples.data());
        step_l2(s, d1[i], scale);
      },
      eval_both);

  return model;
}

nn::Vec predict_level1(const CfMModel& model, const Segment& segment) {
  const auto ids = model.dict.ids(segment_tokens(segment));
  const nn::Vec v = model.encode_ids(ids, nullptr);
  return nn::softmax(model.head1.forward(v));
}

nn::Vec predict_level2(const CfMModel& model, const Segment& segment, Level1 d_l1) {
  const auto ids = model.dict.ids(segment_tokens(segment));
  const nn::Vec v = model.encode_ids(ids, nullptr);
  const nn::Vec u = nn::vadd(v, model.l1_embed.lookup(static_cast<std::size_t>(d_l1)));
  return nn::softmax(model.head2.forward(u));
}

Prediction predict_sf(const CfMModel& model, const Segment& segment) {
  const auto ids = model.dict.ids(segment_tokens(segment));
  const nn::Vec v = model.encode_ids(ids, nullptr);
  const nn::Vec p1 = nn::softmax(model.head1.forward(v));
  const std::size_t a1 = argmax(p1);
  const nn::Vec u = nn::vadd(v, model.l1_embed.lookup(a1));
  const nn::Vec p2 = nn::softmax(model.head2.forward(u));
  const std::size_t a2 = argmax(p2);
  return Prediction{static_cast<Level1>(a1), static_cast<Level2>(a2), p1[a1], p2[a2]};
}

namespace {

constexpr double kCfmKind = 1.0;
constexpr double kCftKind = 2.0;

std::vector<const nn::Param*> const_params(std::vector<nn::Param*> ps) {
  return std::vector<const nn::Param*>(ps.begin(), ps.end());
}

}  // namespace

void save_cfm(const CfMModel& model, const std::string& path) {
  ModelFile mf;
  mf.config["model_kind"] = kCfmKind;
  mf.config["encoder"] = model.encoder.kind == EncoderKind::Cnn ? 0.0 : 1.0;
  store_train_config(mf, model.config);
  mf.taxonomy_codes = current_taxonomy_codes();
  mf.string_lists["vocab"] = model.dict.tokens;
  store_params(mf, const_params(const_cast<CfMModel&>(model).params()));
  save_model_file(mf, path);
}

CfMModel load_cfm(const std::string& path) {
  ModelFile mf = load_model_file(path);
  if (config_value(mf, "model_kind") != kCfmKind) {
    throw SchemaVersionMismatchError("\"" + path + "\" is not a CfM model file");
  }
  check_taxonomy(mf, path);
  CfMModel model;
  model.config = load_train_config(mf);
  auto vocab_it = mf.string_lists.find("vocab");
  if (vocab_it == mf.string_lists.end()) {
    throw ParseError("model file \"" + path + "\" is missing its vocabulary");
  }
  model.dict.assign(vocab_it->second);
  Rng rng(0);
  const EncoderKind kind = config_value(mf, "encoder") == 0.0 ? EncoderKind::Cnn : EncoderKind::Rnn;
  model.embed.init("embed", model.dict.size(), model.config.embed_dim, rng, -0.1, 0.1);
  model.encoder.init("enc", kind, model.config.embed_dim, model.config.hidden_dim, rng,
                     -0.1, 0.1);
  model.head1.init("head1", kNumLevel1, model.config.hidden_dim, rng, -0.1, 0.1);
  model.l1_embed.init("l1e", kNumLevel1, model.config.hidden_dim, rng, -0.1, 0.1);
  model.head2.init("head2", kNumLevel2, model.config.hidden_dim, rng, -0.1, 0.1);
  load_params(mf, model.params());
  return model;
}

AnnotateStats annotate_corpus(const CfMModel& model, const std::string& in_path,
                              const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw IoError("cannot open \"" + in_path + "\" for reading");
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot open \"" + out_path + "\" for writing");

  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaVersionMismatchError("\"" + in_path + "\" is empty (missing corpus header)");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCorpusHeader) {
    throw SchemaVersionMismatchError("\"" + in_path + "\" is not a corpus file");
  }
  out << kCorpusHeader << "\n";

  AnnotateStats stats;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ConversationPair pair = parse_pair_line(line, lineno);
    auto tag = [&](Segment& seg) {
      const Prediction pred = predict_sf(model, seg);
      // Corpus labels are (parent, level-2) pairs; the level-2 head decides.
      seg.functions = {make_sf(pred.level2)};
      stats.segments++;
    };
    for (Segment& s : pair.query_segments) tag(s);
    for (Segment& s : pair.response_segments) tag(s);
    out << serialize_pair_line(pair) << "\n";
    stats.pairs++;
  }
  out.flush();
  if (!out) throw IoError("write to \"" + out_path + "\" failed");
  return stats;
}

// ------------------------------------------------------------------- CfT

std::vector<nn::Param*> CfTModel::params() {
  std::vector<nn::Param*> out = embed.params();
  for (nn::Param* p : encoder.params()) out.push_back(p);
  for (nn::Param* p : sf_embed.params()) out.push_back(p);
  for (nn::Param* p : head1.params()) out.push_back(p);
  for (nn::Param* p : head2.params()) out.push_back(p);
  return out;
}

namespace {

struct CftSample {
  std::vector<int> ids;
  std::vector<std::size_t> query_sfs;  // sorted level-2 codes
  std::size_t gold1;
  std::size_t gold2;
};

std::vector<std::string> pair_query_tokens(const ConversationPair& pair) {
  std::vector<std::string> toks;
  for (const Segment& s : pair.query_segments) {
    const auto st = segment_tokens(s);
    toks.insert(toks.end(), st.begin(), st.end());
  }
  return toks;
}

std::vector<std::size_t> sorted_query_sfs(const ConversationPair& pair) {
  std::vector<std::size_t> sfs;
  for (const Segment& s : pair.query_segments) {
    if (s.labeled()) sfs.push_back(static_cast<std::size_t>(s.primary().level2));
  }
  std::sort(sfs.begin(), sfs.end());
  return sfs;
}

// v plus the (sorted-order) sum of SF embeddings; sorting makes the bag
// exactly permutation invariant, not just up to float rounding.
nn::Vec add_sf_bag(const nn::Vec& v, const nn::Embedding& sf_embed,
                   const std::vector<std::size_t>& sfs) {
  nn::Vec u = v;
  for (std::size_t sf : sfs) {
    const nn::Vec e = sf_embed.lookup(sf);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += e[i];
  }
  return u;
}

}  // namespace

CfTModel train_cft(const Corpus& corpus, bool with_query_sf, EncoderKind encoder,
                   const nn::TrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw EmptyCorpusError("cannot train CfT on an empty corpus");

  std::vector<std::vector<std::string>> tok_lists;
  std::vector<const ConversationPair*> pairs;
  for (const ConversationPair& pair : corpus.pairs) {
    if (pair.response_segments.empty() || !pair.response_segments.front().labeled()) {
      throw UnlabeledSegmentError("pair \"" + (pair.query_segments.empty() ? std::string() : pair.query_segments.front().text) +
                                  "\" has no labeled first response segment");
    }
    pairs.push_back(&pair);
    tok_lists.push_back(pair_query_tokens(pair));
  }

  CfTModel model;
  model.config = config;
  model.with_query_sf = with_query_sf;
  model.dict.build(collect_vocab(tok_lists));

  std::vector<CftSample> samples;
  samples.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const SentenceFunction gold = pairs[i]->response_segments.front().primary();
    samples.push_back({model.dict.ids(tok_lists[i]),
                       with_query_sf ? sorted_query_sfs(*pairs[i]) : std::vector<std::size_t>{},
                       static_cast<std::size_t>(gold.level1),
                       static_cast<std::size_t>(gold.level2)});
  }

  Rng rng(config.seed);
  model.embed.init("embed", model.dict.size(), config.embed_dim, rng, config.init_lo,
                   config.init_hi);
  model.encoder.init("enc", encoder, config.embed_dim, config.hidden_dim, rng,
                     config.init_lo, config.init_hi);
  model.sf_embed.init("sfe", kNumLevel2, config.hidden_dim, rng, config.init_lo,
                      config.init_hi);
  model.head1.init("head1", kNumLevel1, config.hidden_dim, rng, config.init_lo,
                   config.init_hi);
  model.head2.init("head2", kNumLevel2, config.hidden_dim, rng, config.init_lo,
                   config.init_hi);

  std::vector<std::size_t> train_idx, val_idx;
  split_indices(samples.size(), rng, &train_idx, &val_idx);
  const std::vector<std::size_t>& eval_idx = val_idx.empty() ? train_idx : val_idx;

  std::vector<nn::Param*> params = model.params();
  if (!with_query_sf) {
    // Keep the unused SF table out of the optimizer and the clip norm.
    params = model.embed.params();
    for (nn::Param* p : model.encoder.params()) params.push_back(p);
    for (nn::Param* p : model.head1.params()) params.push_back(p);
    for (nn::Param* p : model.head2.params()) params.push_back(p);
  }

  auto forward_u = [&](const CftSample& s, SentenceEncoder::Cache* cache, nn::Vec* v_out) {
    std::vector<nn::Vec> xs;
    xs.reserve(s.ids.size());
    for (int id : s.ids) xs.push_back(model.embed.lookup(static_cast<std::size_t>(id)));
    nn::Vec v = model.encoder.encode(xs, cache);
    if (v_out != nullptr) *v_out = v;
    return model.with_query_sf ? add_sf_bag(v, model.sf_embed, s.query_sfs) : v;
  };

  auto learn_step = [&](const CftSample& s, double scale) {
    SentenceEncoder::Cache cache;
    const nn::Vec u = forward_u(s, &cache, nullptr);
    nn::Vec dlogits1, dlogits2;
    nn::softmax_xent(model.head1.forward(u), s.gold1, &dlogits1);
    nn::softmax_xent(model.head2.forward(u), s.gold2, &dlogits2);
    scale_vec(dlogits1, scale);
    scale_vec(dlogits2, scale);
    nn::Vec du = model.head1.backward(u, dlogits1);
    const nn::Vec du2 = model.head2.backward(u, dlogits2);
    for (std::size_t i = 0; i < du.size(); ++i) du[i] += du2[i];
    if (model.with_query_sf) {
      for (std::size_t sf : s.query_sfs) model.sf_embed.accumulate(sf, du);
    }
    const auto dxs = model.encoder.backward(cache, du);
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
      model.embed.accumulate(static_cast<std::size_t>(s.ids[i]), dxs[i]);
    }
  };

  auto eval_fn = [&] {
    std::size_t hit1 = 0, hit2 = 0;
    for (std::size_t i : eval_idx) {
      const nn::Vec u = forward_u(samples[i], nullptr, nullptr);
      if (argmax(model.head1.forward(u)) == samples[i].gold1) hit1++;
      if (argmax(model.head2.forward(u)) == samples[i].gold2) hit2++;
    }
    const double n = static_cast<double>(eval_idx.size());
    return eval_idx.empty() ? 0.0 : (static_cast<double>(hit1) + static_cast<double>(hit2)) / (2.0 * n);
  };

  nn::AdamState adam;
  double best = -1.0;
  std::size_t since = 0;
  std::vector<Tensor> best_snap;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    for (std::size_t off = 0; off < train_idx.size(); off += config.batch_size) {
      const std::size_t end = std::min(off + config.batch_size, train_idx.size());
      nn::zero_grads(params);
      const double scale = 1.0 / static_cast<double>(end - off);
      for (std::size_t i = off; i < end; ++i) learn_step(samples[train_idx[i]], scale);
      nn::clip_gradients(params, config.clip);
      nn::adam_step(params, adam, config.learning_rate);
    }
    const double acc = eval_fn();
    if (acc > best + 1e-12) {
      best = acc;
      best_snap = snapshot(params);
      since = 0;
    } else if (++since >= config.patience) {
      break;
    }
  }
  if (!best_snap.empty()) restore(params, best_snap);
  return model;
}

Level1 CftPrediction::argmax1() const { return static_cast<Level1>(argmax(p1)); }
Level2 CftPrediction::argmax2() const { return static_cast<Level2>(argmax(p2)); }

CftPrediction predict_response_sf(const CfTModel& model,
                                  const std::vector<Segment>& query_segments,
                                  const std::vector<Level2>& query_sfs) {
  if (query_segments.empty()) throw EmptyInputError("empty query");
  std::vector<std::string> toks;
  for (const Segment& s : query_segments) {
    const auto st = segment_tokens(s);
    toks.insert(toks.end(), st.begin(), st.end());
  }
  const auto ids = model.dict.ids(toks);
  std::vector<nn::Vec> xs;
  xs.reserve(ids.size());
  for (int id : ids) xs.push_back(model.embed.lookup(static_cast<std::size_t>(id)));
  nn::Vec u = model.encoder.encode(xs, nullptr);
  if (model.with_query_sf) {
    std::vector<std::size_t> sfs;
    sfs.reserve(query_sfs.size());
    for (Level2 l2 : query_sfs) sfs.push_back(static_cast<std::size_t>(l2));
    std::sort(sfs.begin(), sfs.end());
    u = add_sf_bag(u, model.sf_embed, sfs);
  }
  CftPrediction out;
  out.p1 = nn::softmax(model.head1.forward(u));
  out.p2 = nn::softmax(model.head2.forward(u));
  return out;
}

void save_cft(const CfTModel& model, const std::string& path) {
  ModelFile mf;
  mf.config["model_kind"] = kCftKind;
  mf.config["encoder"] = model.encoder.kind == EncoderKind::Cnn ? 0.0 : 1.0;
  mf.config["with_query_sf"] = model.with_query_sf ? 1.0 : 0.0;
  store_train_config(mf, model.config);
  mf.taxonomy_codes = current_taxonomy_codes();
  mf.string_lists["vocab"] = model.dict.tokens;
  store_params(mf, const_params(const_cast<CfTModel&>(model).params()));
  save_model_file(mf, path);
}

CfTModel load_cft(const std::string& path) {
  ModelFile mf = load_model_file(path);
  if (config_value(mf, "model_kind") != kCftKind) {
    throw SchemaVersionMismatchError("\"" + path + "\" is not a CfT model file");
  }
  check_taxonomy(mf, path);
  CfTModel model;
  model.config = load_train_config(mf);
  model.with_query_sf = config_value(mf, "with_query_sf") != 0.0;
  auto vocab_it = mf.string_lists.find("vocab");
  if (vocab_it == mf.string_lists.end()) {
    throw ParseError("model file \"" + path + "\" is missing its vocabulary");
  }
  model.dict.assign(vocab_it->second);
  Rng rng(0);
  const EncoderKind kind = config_value(mf, "encoder") == 0.0 ? EncoderKind::Cnn : EncoderKind::Rnn;
  model.embed.init("embed", model.dict.size(), model.config.embed_dim, rng, -0.1, 0.1);
  model.encoder.init("enc", kind, model.config.embed_dim, model.config.hidden_dim, rng,
                     -0.1, 0.1);
  model.sf_embed.init("sfe", kNumLevel2, model.config.hidden_dim, rng, -0.1, 0.1);
  model.head1.init("head1", kNumLevel1, model.config.hidden_dim, rng, -0.1, 0.1);
  model.head2.init("head2", kNumLevel2, model.config.hidden_dim, rng, -0.1, 0.1);
  load_params(mf, model.params());
  return model;
}

}  // namespace sefun
