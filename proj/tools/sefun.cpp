// sefun - command line front end for the sentence-function toolkit.
//
// Subcommands mirror the library modules: taxonomy, corpus, cfm, cft, ir,
// gen, eval, pipeline. Every command that trains, indexes or decodes takes
// the global --seed and writes deterministic output files: rerunning with
// the same inputs and seed reproduces them byte for byte.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sefun/adjudicate.hpp"
#include "sefun/classify.hpp"
#include "sefun/corpus.hpp"
#include "sefun/errors.hpp"
#include "sefun/generate.hpp"
#include "sefun/grading.hpp"
#include "sefun/metrics.hpp"
#include "sefun/pipeline.hpp"
#include "sefun/retrieve.hpp"
#include "sefun/synthetic.hpp"
#include "sefun/taxonomy.hpp"

namespace {

using nlohmann::json;
using namespace sefun;

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void info(const std::string& msg) {
  if (g_log_level >= 1) std::cerr << "[sefun] " << msg << "\n";
}

void debug(const std::string& msg) {
  if (g_log_level >= 2) std::cerr << "[sefun] " << msg << "\n";
}

// Global state shared by all subcommands.
struct Globals {
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string config_path;
  std::string log_level = "info";
};

// Optional per-command hyperparameter overrides; unset flags keep the
// resolved defaults.
struct HyperFlags {
  bool desk = false;
  nn::TrainConfig v;  // flag targets
  CLI::Option* hidden = nullptr;
  CLI::Option* embed = nullptr;
  CLI::Option* batch = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* clip = nullptr;
  CLI::Option* epochs = nullptr;
  CLI::Option* patience = nullptr;
};

void add_hyper_flags(CLI::App* cmd, HyperFlags& h) {
  cmd->add_flag("--desk,!--full", h.desk, "small dims / hot learning rate for quick runs");
  h.hidden = cmd->add_option("--hidden", h.v.hidden_dim, "hidden state size");
  h.embed = cmd->add_option("--embed", h.v.embed_dim, "embedding size");
  h.batch = cmd->add_option("--batch", h.v.batch_size, "minibatch size");
  h.lr = cmd->add_option("--lr", h.v.learning_rate, "Adam learning rate");
  h.clip = cmd->add_option("--clip", h.v.clip, "gradient clipping threshold");
  h.epochs = cmd->add_option("--epochs", h.v.max_epochs, "max training epochs");
  h.patience = cmd->add_option("--patience", h.v.patience, "early-stop patience");
}

// defaults (paper scale, or desk scale with --desk) <- config file <- flags
// <- global --seed.
nn::TrainConfig resolve_config(const Globals& g, const HyperFlags& h) {
  nn::TrainConfig c = h.desk ? nn::TrainConfig::desk_scale() : nn::TrainConfig{};
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw IoError("cannot open config file \"" + g.config_path + "\"");
    json j = json::parse(in);
    if (j.contains("hidden_dim")) c.hidden_dim = j["hidden_dim"].get<std::size_t>();
    if (j.contains("embed_dim")) c.embed_dim = j["embed_dim"].get<std::size_t>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("clip")) c.clip = j["clip"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<std::size_t>();
    if (j.contains("patience")) c.patience = j["patience"].get<std::size_t>();
    if (j.contains("init_lo")) c.init_lo = j["init_lo"].get<double>();
    if (j.contains("init_hi")) c.init_hi = j["init_hi"].get<double>();
  }
  if (h.hidden && h.hidden->count()) c.hidden_dim = h.v.hidden_dim;
  if (h.embed && h.embed->count()) c.embed_dim = h.v.embed_dim;
  if (h.batch && h.batch->count()) c.batch_size = h.v.batch_size;
  if (h.lr && h.lr->count()) c.learning_rate = h.v.learning_rate;
  if (h.clip && h.clip->count()) c.clip = h.v.clip;
  if (h.epochs && h.epochs->count()) c.max_epochs= h.v.max_epochs;
  if (h.patience && h.patience->count()) c.patience = h.v.patience;
  if (g.seed_set) c.seed = g.seed;
  c.validate();
  std::ostringstream msg;
  msg << "config: hidden " << c.hidden_dim << ", embed " << c.embed_dim << ", batch "
      << c.batch_size << ", lr " << c.learning_rate << ", clip " << c.clip << ", epochs "
      << c.max_epochs << ", patience " << c.patience << ", seed " << c.seed;
  debug(msg.str());
  return c;
}

std::string label_str(Level2 l2) { return serialize_label(make_sf(l2)); }

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open \"" + path + "\"");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // no platform newline mangling
  if (!out) throw IoError("cannot write \"" + path + "\"");
  return out;
}

// ----------------------------------------------------------------- taxonomy

void cmd_taxonomy(const std::string& parse_arg) {
  if (!parse_arg.empty()) {
    SentenceFunction sf = parse_label(parse_arg);
    std::cout << serialize_label(sf) << "\t(level1=" << int(sf.level1)
              << ", level2=" << int(sf.level2) << ")\n";
    return;
  }
  std::cout << "level-1 (" << kNumLevel1 << "):\n";
  for (std::size_t i = 0; i < kNumLevel1; ++i) {
    auto l1 = static_cast<Level1>(i);
    std::cout << "  " << i << "\t" << level1_name(l1) << "\t" << level1_long_name(l1) << "\n";
  }
  std::cout << "level-2 (" << kNumLevel2 << "):\n";
  for (std::size_t i = 0; i < kNumLevel2; ++i) {
    auto l2 = static_cast<Level2>(i);
    std::cout << "  " << std::setw(2) << i << "\t" << serialize_label(make_sf(l2)) << "\n";
  }
}

// ------------------------------------------------------------------- corpus

void cmd_corpus_stats(const std::string& path) {
  Corpus corpus = load_corpus(path);
  CorpusStats stats = corpus_stats(corpus);
  std::cout << format_stats(stats);
}

const std::vector<double>& named_weights(const std::string& name) {
  static const std::vector<double> uniform;
  if (name == "uniform") return uniform;
  if (name == "stc-query") return stc_query_weights();
  if (name == "stc-response") return stc_response_weights();
  throw Error("unknown weights preset \"" + name + "\"");
}

void cmd_corpus_synth(std::uint64_t seed, std::size_t n, const std::string& weights,
                      bool linked, bool grid, const std::string& out) {
  TemplateSpec spec = default_template_spec();
  Corpus corpus;
  if (grid) {
    corpus = gen_linked_grid_corpus(spec, seed);
  } else if (linked) {
    corpus = gen_keyword_linked_corpus(spec, n, named_weights(weights), seed);
  } else {
    corpus = gen_synthetic_corpus(spec, n, named_weights(weights), seed);
  }
  // Downstream commands re-tokenize raw text (prediction, retrieval,
  // decoding), so the file must use the same tokenization they will.
  retokenize_corpus(corpus);
  save_corpus(corpus, out);
  info("wrote " + std::to_string(corpus.size()) + " pairs to " + out);
}

// Annotation records: one JSON object per line, aligned with the pairs file.
//   {"annotators": [{"id": "a1", "segments": [["IN:Yes-no IN"], ...]}, x3],
//    "dissenter_agrees": true}        <- optional, resolves confirmations
// A segment's array holds 0..2 labels; a bare level-1 name ("IN") records a
// level-1-only annotation.
AnnotationRecord parse_annotator(const json& j) {
  AnnotationRecord rec;
  rec.annotator_id = j.value("id", "");
  for (const json& seg : j.at("segments")) {
    SegmentAnnotation a;
    for (const json& lab : seg) {
      const std::string text = lab.get<std::string>();
      try {
        Level2 l2 = parse_level2(text);
        a.level2.push_back(l2);
        if (!a.level1) a.level1 = level1_of(l2);
      } catch (const UnknownLabelError&) {
        a.level1 = parse_level1(text);  // level-1-only annotation
      }
    }
    rec.segments.push_back(std::move(a));
  }
  return rec;
}

void cmd_corpus_adjudicate(const std::string& pairs_path, const std::string& records_path,
                           const std::string& out) {
  Corpus corpus = load_corpus(pairs_path);
  std::vector<std::string> lines = read_lines(records_path);
  if (lines.size() != corpus.size()) {
    throw RecordCountMismatchError("records file has " + std::to_string(lines.size()) +
                                   " lines for " + std::to_string(corpus.size()) + " pairs");
  }
  Corpus kept;
  std::size_t dropped = 0, pending = 0, confirmed = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    json j = json::parse(lines[i]);
    std::vector<AnnotationRecord> recs;
    for (const json& a : j.at("annotators")) recs.push_back(parse_annotator(a));
    AggregationOutcome outcome = aggregate_annotations(corpus.pairs[i], recs);
    if (std::holds_alternative<NeedsConfirmation>(outcome)) {
      if (!j.contains("dissenter_agrees")) {
        ++pending;  // unresolved: excluded from the output corpus
        continue;
      }
      outcome = confirm_annotation(outcome, j["dissenter_agrees"].get<bool>());
      ++confirmed;
    }
    if (const auto* acc = std::get_if<Accepted>(&outcome)) {
      kept.pairs.push_back(apply_labels(corpus.pairs[i], *acc));
    } else {
      ++dropped;
    }
  }
  save_corpus(kept, out);
  std::cout << "kept " << kept.size() << " / " << corpus.size() << " pairs (dropped "
            << dropped << ", pending " << pending << ", confirmed " << confirmed << ")\n";
}

// --------------------------------------------------------------------- cfm

void cmd_cfm_train(const Globals& g, const HyperFlags& h, const std::string& corpus_path,
                   const std::string& setup, const std::string& encoder,
                   const std::string& out) {
  Corpus corpus = load_corpus(corpus_path);
  nn::TrainConfig config = resolve_config(g, h);
  info("training CfM (" + setup + ", " + encoder + ") on " +
       std::to_string(corpus.size()) + " pairs");
  CfMModel model = train_cfm(corpus, parse_setup(setup), parse_encoder(encoder), config);
  save_cfm(model, out);
  info("saved " + out);
}

void write_predictions(const CfMModel& model, const std::vector<std::string>& texts,
                       std::ostream& out) {
  out << std::fixed << std::setprecision(4);
  for (const std::string& text : texts) {
    if (text.empty()) continue;
    for (const Segment& seg : segment_and_tokenize(text)) {
      Prediction p = predict_sf(model, seg);
      out << serialize_label(make_sf(p.level2)) << "\t" << p.prob_level1 << "\t"
          << p.prob_level2 << "\t" << seg.text << "\n";
    }
  }
}

void cmd_cfm_predict(const std::string& model_path, const std::string& text,
                     const std::string& in, const std::string& out) {
  CfMModel model = load_cfm(model_path);
  std::vector<std::string> texts;
  if (!text.empty()) texts.push_back(text);
  if (!in.empty()) {
    std::vector<std::string> lines = read_lines(in);
    texts.insert(texts.end(), lines.begin(), lines.end());
  }
  if (texts.empty()) throw EmptyInputError("nothing to classify: pass --text or --in");
  if (!out.empty()) {
    std::ofstream f = open_out(out);
    write_predictions(model, texts, f);
    info("wrote " + out);
  } else {
    write_predictions(model, texts, std::cout);
  }
}

void cmd_cfm_annotate(const std::string& model_path, const std::string& in,
                      const std::string& out) {
  CfMModel model = load_cfm(model_path);
  AnnotateStats stats = annotate_corpus(model, in, out);
  std::cout << "annotated " << stats.segments << " segments in " << stats.pairs
            << " pairs -> " << out << "\n";
}

// --------------------------------------------------------------------- cft

void cmd_cft_train(const Globals& g, const HyperFlags& h, const std::string& corpus_path,
                   const std::string& encoder, bool with_query_sf, const std::string& out) {
  Corpus corpus = load_corpus(corpus_path);
  nn::TrainConfig config = resolve_config(g, h);
  info(std::string("training CfT (") + encoder + (with_query_sf ? ", +query-sf" : ", -query-sf") +
       ") on " + std::to_string(corpus.size()) + " pairs");
  CfTModel model = train_cft(corpus, with_query_sf, parse_encoder(encoder), config);
  save_cft(model, out);
  info("saved " + out);
}

void cmd_cft_predict(const std::string& model_path, const std::string& cfm_path,
                     const std::string& query, const std::vector<std::string>& sf_args,
                     const std::string& in, const std::string& out) {
  CfTModel model = load_cft(model_path);
  std::optional<CfMModel> cfm;
  if (!cfm_path.empty()) cfm = load_cfm(cfm_path);

  std::vector<std::string> queries;
  if (!query.empty()) queries.push_back(query);
  if (!in.empty()) {
    std::vector<std::string> lines = read_lines(in);
    queries.insert(queries.end(), lines.begin(), lines.end());
  }
  if (queries.empty()) throw EmptyInputError("nothing to predict: pass --query or --in");
  if (model.with_query_sf && sf_args.empty() && !cfm) {
    throw EmptyInputError("model uses query functions: pass --sf labels or --cfm model");
  }

  std::ostringstream buf;
  buf << std::fixed << std::setprecision(4);
  for (const std::string& q : queries) {
    if (q.empty()) continue;
    std::vector<Segment> segments = segment_and_tokenize(q);
    std::vector<Level2> sfs;
    if (!sf_args.empty()) {
      for (const std::string& s : sf_args) sfs.push_back(parse_label(s).level2);
    } else if (cfm) {
      for (const Segment& seg : segments) sfs.push_back(predict_sf(*cfm, seg).level2);
    }
    CftPrediction p = predict_response_sf(model, segments, sfs);
    buf << label_str(p.argmax2()) << "\t" << p.p1[std::size_t(p.argmax1())] << "\t"
        << p.p2[std::size_t(p.argmax2())] << "\t" << q << "\n";
  }
  if (!out.empty()) {
    std::ofstream f = open_out(out);
    f << buf.str();
    info("wrote " + out);
  } else {
    std::cout << buf.str();
  }
}

// ---------------------------------------------------------------------- ir

void cmd_ir_build(const std::string& corpus_path, const std::string& index_path,
                  bool multiset) {
  Corpus corpus = load_corpus(corpus_path);
  RetrievalIndex index = build_index(corpus, multiset);
  save_index(index, index_path);
  info("indexed " + std::to_string(index.pairs.size()) + " pairs, " +
       std::to_string(index.postings.size()) + " postings -> " + index_path);
}

void cmd_ir_respond(const std::string& index_path, const std::string& cfm_path,
                    const std::string& cft_path, const std::string& query, int level,
                    bool rerank_on, double lambda, std::size_t topk,
                    const std::string& out) {
  RetrievalIndex index = load_index(index_path);
  CfMModel cfm = load_cfm(cfm_path);
  CfTModel cft = load_cft(cft_path);
  IrResult res = respond_ir(index, cfm, cft, query, level, rerank_on, lambda, topk);

  std::ostringstream buf;
  buf << std::fixed << std::setprecision(4);
  buf << "target: "
      << (res.target.level == 1 ? std::string(level1_name(res.target.level1))
                                : label_str(res.target.level2))
      << "\n";
  for (std::size_t i = 0; i < res.candidates.size(); ++i) {
    const RankedCandidate& c = res.candidates[i];
    buf << (i + 1) << "\t" << c.rerank_score << "\t" << c.base_score << "\t" << c.penalty
        << "\t" << label_str(c.pred.level2) << "\t" << c.response_text << "\n";
  }
  if (!out.empty()) {
    std::ofstream f = open_out(out);
    f << buf.str();
    info("wrote " + out);
  } else {
    std::cout << buf.str();
  }
}

void cmd_ir_bench(std::uint64_t seed, std::size_t pairs, std::size_t queries,
                  std::size_t topk, bool multiset) {
  TemplateSpec spec = default_template_spec();
  Corpus corpus = gen_synthetic_corpus(spec, pairs, {}, seed);
  RetrievalIndex index = build_index(corpus, multiset);
  Corpus probe = gen_synthetic_corpus(spec, queries, {}, seed + 1);

  using clock = std::chrono::steady_clock;
  std::vector<std::vector<RankedCandidate>> fast(queries), slow(queries);
  auto t0 = clock::now();
  for (std::size_t i = 0; i < queries; ++i) {
    fast[i] = retrieve_topk(index, probe.pairs[i].query_segments[0].tokens, topk);
  }
  auto t1 = clock::now();
  for (std::size_t i = 0; i < queries; ++i) {
    slow[i] = brute_force_topk(index, probe.pairs[i].query_segments[0].tokens, topk);
  }
  auto t2 = clock::now();

  bool identical = true;
  for (std::size_t i = 0; i < queries && identical; ++i) {
    identical = fast[i].size() == slow[i].size();
    for (std::size_t r = 0; identical && r < fast[i].size(); ++r) {
      identical = fast[i][r].pair_id == slow[i][r].pair_id &&
                  fast[i][r].base_score == slow[i][r].base_score;
    }
  }
  auto ms = [](clock::duration d) {
    return std::chrono::duration<double, std::milli>(d).count();
  };
  std::cout << std::fixed << std::setprecision(2);
  std::cout << "pairs: " << pairs << "  queries: " << queries << "  topk: " << topk << "\n"
            << "postings: " << ms(t1 - t0) << " ms  brute force: " << ms(t2 - t1) << " ms\n"
            << "identical rankings: " << (identical ? "yes" : "NO") << "\n";
  if (!identical) throw Error("postings and brute-force rankings disagree");
}

// --------------------------------------------------------------------- gen

void cmd_gen_vocab(const std::string& corpus_path, const std::string& out, std::size_t cap) {
  Corpus corpus = load_corpus(corpus_path);
  Vocabulary vocab = build_vocab(corpus, cap);
  save_vocab(vocab, out);
  std::cout << std::fixed << std::setprecision(4) << "vocab size " << vocab.size()
            << " (cap " << cap << "), coverage " << 100.0 * vocab.coverage << "%\n";
}

void cmd_gen_train(const Globals& g, const HyperFlags& h, const std::string& corpus_path,
                   const std::string& kind, std::size_t vocab_cap, const std::string& out) {
  Corpus corpus = load_corpus(corpus_path);
  nn::TrainConfig config = resolve_config(g, h);
  GenTrainReport report;
  Seq2SeqModel model;
  info("training " + kind + " on " + std::to_string(corpus.size()) + " pairs");
  if (kind == "seq2seq") {
    model = train_seq2seq(corpus, config, vocab_cap, &report);
  } else if (kind == "cseq2seq") {
    model = train_cseq2seq(corpus, config, vocab_cap, &report);
  } else {
    throw Error("unknown model kind \"" + kind + "\" (want seq2seq or cseq2seq)");
  }
  save_seq2seq(model, out);
  std::ostringstream msg;
  msg << std::fixed << std::setprecision(4) << "loss " << report.initial_loss << " -> "
      << (report.epoch_loss.empty() ? report.initial_loss : report.epoch_loss.back())
      << " over " << report.epoch_loss.size() << " epochs";
  info(msg.str());
  info("saved " + out);
}

void cmd_gen_decode(const std::string& model_path, const std::string& query,
                    const std::string& target_sf, std::size_t beam, std::size_t max_len,
                    const std::string& out) {
  Seq2SeqModel model = load_seq2seq(model_path);
  std::optional<Level2> sf;
  if (!target_sf.empty()) sf = parse_label(target_sf).level2;
  DecodeResult res = beam == 1 ? greedy_decode(model, query, sf, max_len)
                               : beam_search(model, query, sf, beam, max_len);
  std::ostringstream buf;
  buf << std::fixed << std::setprecision(4);
  buf << res.text << "\t" << res.norm_logprob << "\n";
  for (std::size_t i = 1; i < res.nbest.size(); ++i) {
    buf << res.nbest[i] << "\n";
  }
  if (!out.empty()) {
    std::ofstream f = open_out(out);
    f << buf.str();
    info("wrote " + out);
  } else {
    std::cout << buf.str();
  }
}

// -------------------------------------------------------------------- eval

int parse_label_or_int(const std::string& text, std::size_t lineno) {
  try {
    return int(parse_label(text).level2);
  } catch (const UnknownLabelError&) {
  }
  try {
    std::size_t used = 0;
    int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("cannot parse label \"" + text + "\"", lineno);
}

std::vector<int> read_label_file(const std::string& path) {
  std::vector<int> out;
  std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    // prediction files carry "label\t..." rows; only the first field counts
    std::string field = lines[i].substr(0, lines[i].find('\t'));
    out.push_back(parse_label_or_int(field, i + 1));
  }
  return out;
}

void cmd_eval_metrics(const std::string& gold_path, const std::string& pred_path) {
  std::vector<int> gold = read_label_file(gold_path);
  std::vector<int> pred = read_label_file(pred_path);
  EvalReport report = evaluate(gold, pred);
  bool all_l2 = true;
  for (const ClassScore& c : report.classes) {
    all_l2 = all_l2 && c.label >= 0 && c.label < int(kNumLevel2);
  }
  std::cout << report.format(all_l2 ? std::function<std::string(int)>([](int id) {
    return label_str(static_cast<Level2>(id));
  })
                                    : nullptr);
}

void cmd_eval_grading(const std::vector<std::string>& sheets, const std::string& key) {
  GradingScores scores = ingest_grading_sheets(sheets, key);
  std::cout << std::fixed << std::setprecision(4);
  std::cout << "system\tfluency\trelevance\tinformativeness\taccuracy\t(mean grade / "
            << kMaxGrade << ", normalized)\n";
  for (const auto& [system, s] : scores) {
    std::cout << system << "\t" << s.fluency << "\t" << s.relevance << "\t"
              << s.informativeness << "\t" << s.accuracy << "\n";
  }
}

// ---------------------------------------------------------------- pipeline

void cmd_pipeline_run(const Globals& g, const HyperFlags& h, PipelineConfig config,
                      const std::string& systems_csv) {
  nn::TrainConfig nc = resolve_config(g, h);
  config.cfm = config.cft = config.gen = nc;
  if (g.seed_set) config.seed = g.seed;

  config.ir_baseline = config.ir_rerank = config.seq2seq = config.cseq2seq = false;
  std::stringstream ss(systems_csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "ir-baseline") config.ir_baseline = true;
    else if (name == "ir-rerank") config.ir_rerank = true;
    else if (name == "seq2seq") config.seq2seq = true;
    else if (name == "cseq2seq") config.cseq2seq = true;
    else if (!name.empty()) throw Error("unknown system \"" + name + "\"");
  }

  PipelineResult res = run_pipeline(config);
  std::cout << std::fixed << std::setprecision(4);
  std::cout << "queries: " << res.queries.size() << "  target coverage: " << res.covered_queries
            << "/" << res.queries.size() << "\n";
  for (const SystemResult& s : res.systems) {
    std::cout << s.system << "\ttarget-function accuracy " << s.target_sf_accuracy << "\n";
  }
  std::cout << "report:  " << res.report_path << "\nrecords: " << res.records_path
            << "\nsheet:   " << res.sheet_path << "\nkey:     " << res.key_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sentence-function conversation toolkit"};
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "seed for init, splits and sampling")
      ->each([&](const std::string&) { g.seed_set = true; });
  app.add_option("--config", g.config_path, "JSON file of training hyperparameters");
  app.add_option("--log-level", g.log_level, "quiet | info | debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}))
      ->each([](const std::string& s) { g_log_level = s == "quiet" ? 0 : s == "debug" ? 2 : 1; });

  // ---- taxonomy
  auto* tax = app.add_subcommand("taxonomy", "list the label set or parse one label");
  std::string tax_parse;
  tax->add_option("--parse", tax_parse, "echo a label in canonical form");
  tax->callback([&] { cmd_taxonomy(tax_parse); });

  // ---- corpus
  auto* corpus = app.add_subcommand("corpus", "corpus files: stats, synthesis, adjudication");
  corpus->require_subcommand(1);

  auto* stats = corpus->add_subcommand("stats", "per-label segment counts of a corpus file");
  std::string stats_path;
  stats->add_option("path", stats_path, "corpus file")->required();
  stats->callback([&] { cmd_corpus_stats(stats_path); });

  auto* synth = corpus->add_subcommand("synth", "generate a labeled template corpus");
  std::size_t synth_n = 1000;
  std::string synth_weights = "uniform", synth_out;
  bool synth_linked = false, synth_grid = false;
  synth->add_option("--n", synth_n, "number of pairs");
  synth->add_option("--weights", synth_weights, "uniform | stc-query | stc-response")
      ->check(CLI::IsMember({"uniform", "stc-query", "stc-response"}));
  synth->add_flag("--linked", synth_linked, "response function keyed to the query keyword");
  synth->add_flag("--grid", synth_grid, "every (template, keyword) combination once");
  synth->add_option("--out", synth_out, "output corpus file")->required();
  synth->callback([&] {
    cmd_corpus_synth(g.seed, synth_n, synth_weights, synth_linked, synth_grid, synth_out);
  });

  auto* adj = corpus->add_subcommand(
      "adjudicate", "aggregate three annotators per pair into final labels");
  std::string adj_pairs, adj_records, adj_out;
  adj->add_option("pairs", adj_pairs, "corpus file")->required();
  adj->add_option("records", adj_records,
                  "JSONL, per pair: {\"annotators\": [{\"id\", \"segments\": [[label,...]"
                  ", ...]} x3], \"dissenter_agrees\"?: bool}")
      ->required();
  adj->add_option("--out", adj_out, "adjudicated corpus file")->required();
  adj->callback([&] { cmd_corpus_adjudicate(adj_pairs, adj_records, adj_out); });

  // ---- cfm
  auto* cfm = app.add_subcommand("cfm", "segment-level sentence function classifier");
  cfm->require_subcommand(1);

  auto* cfm_train = cfm->add_subcommand("train", "train on a labeled corpus");
  std::string cfmt_corpus, cfmt_setup = "joint", cfmt_encoder = "rnn", cfmt_out;
  HyperFlags cfm_h;
  cfm_train->add_option("--corpus", cfmt_corpus, "labeled corpus file")->required();
  cfm_train->add_option("--setup", cfmt_setup, "query | response | joint")
      ->check(CLI::IsMember({"query", "response", "joint"}));
  cfm_train->add_option("--encoder", cfmt_encoder, "cnn | rnn")
      ->check(CLI::IsMember({"cnn", "rnn"}));
  cfm_train->add_option("--out", cfmt_out, "model file")->required();
  add_hyper_flags(cfm_train, cfm_h);
  cfm_train->callback(
      [&] { cmd_cfm_train(g, cfm_h, cfmt_corpus, cfmt_setup, cfmt_encoder, cfmt_out); });

  auto* cfm_pred = cfm->add_subcommand("predict", "label text segments");
  std::string cfmp_model, cfmp_text, cfmp_in, cfmp_out;
  cfm_pred->add_option("--model", cfmp_model, "model file")->required();
  cfm_pred->add_option("--text", cfmp_text, "raw text (segmented internally)");
  cfm_pred->add_option("--in", cfmp_in, "file of texts, one per line");
  cfm_pred->add_option("--out", cfmp_out, "write predictions here instead of stdout");
  cfm_pred->callback([&] { cmd_cfm_predict(cfmp_model, cfmp_text, cfmp_in, cfmp_out); });

  auto* cfm_ann = cfm->add_subcommand("annotate", "auto-annotate a corpus file");
  std::string cfma_model, cfma_in, cfma_out;
  cfm_ann->add_option("--model", cfma_model, "model file")->required();
  cfm_ann->add_option("--in", cfma_in, "corpus file to relabel")->required();
  cfm_ann->add_option("--out", cfma_out, "annotated corpus file")->required();
  cfm_ann->callback([&] { cmd_cfm_annotate(cfma_model, cfma_in, cfma_out); });

  // ---- cft
  auto* cft = app.add_subcommand("cft", "response sentence function predictor");
  cft->require_subcommand(1);

  auto* cft_train = cft->add_subcommand("train", "train on a labeled corpus");
  std::string cftt_corpus, cftt_encoder = "rnn", cftt_out;
  bool cftt_qsf = true;
  HyperFlags cft_h;
  cft_train->add_option("--corpus", cftt_corpus, "labeled corpus file")->required();
  cft_train->add_option("--encoder", cftt_encoder, "cnn | rnn")
      ->check(CLI::IsMember({"cnn", "rnn"}));
  cft_train->add_flag("--with-query-sf,!--no-query-sf", cftt_qsf,
                      "feed the query's own functions (default on)");
  cft_train->add_option("--out", cftt_out, "model file")->required();
  add_hyper_flags(cft_train, cft_h);
  cft_train->callback(
      [&] { cmd_cft_train(g, cft_h, cftt_corpus, cftt_encoder, cftt_qsf, cftt_out); });

  auto* cft_pred = cft->add_subcommand("predict", "predict the response function of queries");
  std::string cftp_model, cftp_cfm, cftp_query, cftp_in, cftp_out;
  std::vector<std::string> cftp_sf;
  cft_pred->add_option("--model", cftp_model, "CfT model file")->required();
  cft_pred->add_option("--cfm", cftp_cfm, "CfM model used to tag the query segments");
  cft_pred->add_option("--sf", cftp_sf, "query segment labels (instead of --cfm)");
  cft_pred->add_option("--query", cftp_query, "query text");
  cft_pred->add_option("--in", cftp_in, "file of queries, one per line");
  cft_pred->add_option("--out", cftp_out, "write predictions here instead of stdout");
  cft_pred->callback(
      [&] { cmd_cft_predict(cftp_model, cftp_cfm, cftp_query, cftp_sf, cftp_in, cftp_out); });

  // ---- ir
  auto* ir = app.add_subcommand("ir", "retrieval: index, respond, benchmark");
  ir->require_subcommand(1);

  auto* ir_build = ir->add_subcommand("build-index", "build a Jaccard retrieval index");
  std::string irb_corpus, irb_index;
  bool irb_multiset = false;
  ir_build->add_option("corpus", irb_corpus, "corpus file")->required();
  ir_build->add_option("index", irb_index, "index file")->required();
  ir_build->add_flag("--multiset", irb_multiset, "count duplicate tokens");
  ir_build->callback([&] { cmd_ir_build(irb_corpus, irb_index, irb_multiset); });

  auto* ir_resp = ir->add_subcommand("respond", "retrieve and re-rank for one query");
  std::string irr_index, irr_cfm, irr_cft, irr_query, irr_out;
  int irr_level = 2;
  bool irr_rerank = false;
  double irr_lambda = 1.0;
  std::size_t irr_topk = 20;
  ir_resp->add_option("--index", irr_index, "index file")->required();
  ir_resp->add_option("--cfm", irr_cfm, "CfM model file")->required();
  ir_resp->add_option("--cft", irr_cft, "CfT model file")->required();
  ir_resp->add_option("--query", irr_query, "query text")->required();
  ir_resp->add_option("--level", irr_level, "match functions at level 1 or 2")
      ->check(CLI::IsMember({1, 2}));
  ir_resp->add_flag("--rerank", irr_rerank, "demote wrong-function candidates");
  ir_resp->add_option("--lambda", irr_lambda, "re-rank penalty weight");
  ir_resp->add_option("--topk", irr_topk, "candidate list size");
  ir_resp->add_option("--out", irr_out, "write the ranking here instead of stdout");
  ir_resp->callback([&] {
    cmd_ir_respond(irr_index, irr_cfm, irr_cft, irr_query, irr_level, irr_rerank, irr_lambda,
                   irr_topk, irr_out);
  });

  auto* ir_bench = ir->add_subcommand("bench", "postings vs brute force on synthetic data");
  std::size_t irn_pairs = 2000, irn_queries = 200, irn_topk = 20;
  bool irn_multiset = false;
  ir_bench->add_option("--pairs", irn_pairs, "corpus size");
  ir_bench->add_option("--queries", irn_queries, "probe count");
  ir_bench->add_option("--topk", irn_topk, "candidate list size");
  ir_bench->add_flag("--multiset", irn_multiset, "count duplicate tokens");
  ir_bench->callback(
      [&] { cmd_ir_bench(g.seed, irn_pairs, irn_queries, irn_topk, irn_multiset); });

  // ---- gen
  auto* gen = app.add_subcommand("gen", "response generation");
  gen->require_subcommand(1);

  auto* gen_vocab = gen->add_subcommand("vocab", "build a frequency-capped vocabulary");
  std::string genv_corpus, genv_out;
  std::size_t genv_cap = 50000;
  gen_vocab->add_option("corpus", genv_corpus, "corpus file")->required();
  gen_vocab->add_option("out", genv_out, "vocabulary file")->required();
  gen_vocab->add_option("--cap", genv_cap, "max non-reserved tokens");
  gen_vocab->callback([&] { cmd_gen_vocab(genv_corpus, genv_out, genv_cap); });

  auto* gen_train = gen->add_subcommand("train", "train a seq2seq responder");
  std::string gent_corpus, gent_model = "seq2seq", gent_out;
  std::size_t gent_cap = 50000;
  HyperFlags gen_h;
  gen_train->add_option("--corpus", gent_corpus, "corpus file")->required();
  gen_train->add_option("--model", gent_model, "seq2seq | cseq2seq")
      ->check(CLI::IsMember({"seq2seq", "cseq2seq"}));
  gen_train->add_option("--vocab-cap", gent_cap, "max non-reserved tokens");
  gen_train->add_option("--out", gent_out, "model file")->required();
  add_hyper_flags(gen_train, gen_h);
  gen_train->callback(
      [&] { cmd_gen_train(g, gen_h, gent_corpus, gent_model, gent_cap, gent_out); });

  auto* gen_dec = gen->add_subcommand("decode", "generate a response for a query");
  std::string gend_model, gend_query, gend_sf, gend_out;
  std::size_t gend_beam = 5, gend_maxlen = 30;
  gen_dec->add_option("--model", gend_model, "model file")->required();
  gen_dec->add_option("--query", gend_query, "query text")->required();
  gen_dec->add_option("--beam", gend_beam, "beam width (1 = greedy)")
      ->check(CLI::PositiveNumber);
  gen_dec->add_option("--max-len", gend_maxlen, "max response tokens");
  gen_dec->add_option("--target-sf", gend_sf, "target function (conditioned models)");
  gen_dec->add_option("--out", gend_out, "write the decode here instead of stdout");
  gen_dec->callback(
      [&] { cmd_gen_decode(gend_model, gend_query, gend_sf, gend_beam, gend_maxlen, gend_out); });

  // ---- eval
  auto* eval = app.add_subcommand("eval", "scoring: label files and grading sheets");
  eval->require_subcommand(1);

  auto* eval_m = eval->add_subcommand("metrics", "accuracy / macro-F1 / micro-F1");
  std::string evm_gold, evm_pred;
  eval_m->add_option("--gold", evm_gold, "gold labels, one per line")->required();
  eval_m->add_option("--pred", evm_pred, "predicted labels (first tab field counts)")
      ->required();
  eval_m->callback([&] { cmd_eval_metrics(evm_gold, evm_pred); });

  auto* eval_g = eval->add_subcommand("grading", "aggregate filled grading sheets");
  std::vector<std::string> evg_sheets;
  std::string evg_key;
  eval_g->add_option("--sheet", evg_sheets, "filled sheet CSV (repeatable)")->required();
  eval_g->add_option("--key", evg_key, "sidecar key CSV")->required();
  eval_g->callback([&] { cmd_eval_grading(evg_sheets, evg_key); });

  // ---- pipeline
  auto* pipe = app.add_subcommand("pipeline", "end-to-end run on a synthetic corpus");
  pipe->require_subcommand(1);

  auto* pipe_run = pipe->add_subcommand("run", "train, respond, score, export sheets");
  PipelineConfig pc;
  std::string pr_systems = "ir-baseline,ir-rerank";
  HyperFlags pipe_h;
  pipe_h.desk = true;  // a full-scale pipeline run is an explicit choice
  pipe_run->add_option("--workdir", pc.workdir, "output directory")->required();
  pipe_run->add_option("--train-pairs", pc.train_pairs, "training corpus size");
  pipe_run->add_option("--test-queries", pc.test_queries, "test query count");
  pipe_run->add_option("--grading-sample", pc.grading_sample, "queries on the grading sheet");
  pipe_run->add_option("--systems", pr_systems,
                       "comma list of ir-baseline, ir-rerank, seq2seq, cseq2seq");
  pipe_run->add_option("--lambda", pc.lambda, "re-rank penalty weight");
  pipe_run->add_option("--topk", pc.topk, "candidate list size");
  add_hyper_flags(pipe_run, pipe_h);
  pipe_run->callback([&] { cmd_pipeline_run(g, pipe_h, pc, pr_systems); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
