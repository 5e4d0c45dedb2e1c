#include "sefun/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "sefun/classify.hpp"
#include "sefun/corpus.hpp"
#include "sefun/errors.hpp"
#include "sefun/generate.hpp"
#include "sefun/grading.hpp"
#include "sefun/retrieve.hpp"
#include "sefun/synthetic.hpp"
#include "sefun/text.hpp"

namespace sefun {

namespace {

template <typename F>
decltype(auto) stage(const char* name, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::size_t slot_count(const SlotTemplate& t) {
  std::size_t n = 0;
  for (const std::string& tok : t.pattern) {
    if (tok == "x" || tok == "y") ++n;
  }
  return n;
}

// Classes safe as test queries: every template is single-slot, so the grid
// corpus holds an exact token-set match for any realization.
std::vector<double> single_slot_weights(const TemplateSpec& spec) {
  std::vector<double> w(kNumLevel2, 1.0);
  for (const SlotTemplate& t : spec.templates) {
    if (slot_count(t) != 1) w[static_cast<std::size_t>(t.label)] = 0.0;
  }
  return w;
}

Segment text_segment(const std::string& text) {
  Segment seg;
  seg.text = text;
  seg.tokens = default_tokenize(text);
  return seg;
}

// -1 when the answer is empty or unclassifiable.
int classify_answer(const CfMModel& cfm, const std::string& text) {
  if (text.empty()) return -1;
  return static_cast<int>(predict_sf(cfm, text_segment(text)).level2);
}

std::string label_of(int code) {
  if (code < 0) return "none";
  return serialize_label(make_sf(static_cast<Level2>(code)));
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  namespace fs = std::filesystem;
  PipelineResult result;

  stage("setup", [&] {
    if (config.workdir.empty()) throw Error("workdir is empty");
    fs::create_directories(config.workdir);
  });
  const std::string dir = config.workdir + "/";

  const TemplateSpec spec = default_template_spec();

  // Training corpus: the full (template, keyword) grid plus random pairs to
  // reach the requested size. Test queries come from single-slot classes so
  // each one has an exact match in the grid.
  Corpus train;
  Corpus test;
  stage("corpus", [&] {
    train = gen_linked_grid_corpus(spec, config.seed);
    if (config.train_pairs > train.pairs.size()) {
      Corpus extra = gen_keyword_linked_corpus(
          spec, config.train_pairs - train.pairs.size(), {}, config.seed + 1);
      for (ConversationPair& p : extra.pairs) train.pairs.push_back(std::move(p));
    }
    // Queries arrive as raw text downstream, so the whole run must live in
    // the default tokenization; template tokens would put the index and the
    // classifiers in a different token space than respond_ir's queries.
    retokenize_corpus(train);
    save_corpus(train, dir + "train.jsonl");
    test = gen_keyword_linked_corpus(spec, config.test_queries,
                                     single_slot_weights(spec), config.seed + 2);
    retokenize_corpus(test);
    save_corpus(test, dir + "test.jsonl");
  });

  CfMModel cfm;
  stage("cfm", [&] {
    cfm = train_cfm(train, CfmSetup::Joint, EncoderKind::Rnn, config.cfm);
    save_cfm(cfm, dir + "cfm.bin");
  });

  CfTModel cft;
  stage("cft", [&] {
    cft = train_cft(train, true, EncoderKind::Rnn, config.cft);
    save_cft(cft, dir + "cft.bin");
  });

  RetrievalIndex index;
  stage("index", [&] {
    index = build_index(train);
    save_index(index, dir + "index.bin");
  });

  Seq2SeqModel s2s;
  Seq2SeqModel cs2s;
  stage("generators", [&] {
    if (config.seq2seq) {
      s2s = train_seq2seq(train, config.gen);
      save_seq2seq(s2s, dir + "seq2seq.bin");
    }
    if (config.cseq2seq) {
      cs2s = train_cseq2seq(train, config.gen);
      save_seq2seq(cs2s, dir + "cseq2seq.bin");
    }
  });

  stage("respond", [&] {
    for (const ConversationPair& pair : test.pairs) {
      result.queries.push_back(pair.query_segments.front().text);
    }
    result.targets.resize(result.queries.size());

    std::vector<std::pair<std::string, bool>> plan;  // (system, rerank) for IR
    if (config.ir_baseline) plan.emplace_back("ir-baseline", false);
    if (config.ir_rerank) plan.emplace_back("ir-rerank", true);

    bool covered_done = false;
    for (const auto& [name, rerank_on] : plan) {
      SystemResult sys;
      sys.system = name;
      for (std::size_t q = 0; q < result.queries.size(); ++q) {
        const IrResult ir = respond_ir(index, cfm, cft, result.queries[q], 2,
                                       rerank_on, config.lambda, config.topk);
        result.targets[q] = ir.target.level2;  // same inputs for every system
        sys.responses.push_back(ir.top().response_text);
        if (!covered_done) {
          for (const RankedCandidate& c : ir.candidates) {
            if (c.penalty == 0.0) {
              ++result.covered_queries;
              break;
            }
          }
        }
      }
      covered_done = true;
      result.systems.push_back(std::move(sys));
    }

    if (config.seq2seq || config.cseq2seq) {
      // Generators need the same targets the IR systems used.
      if (plan.empty()) {
        for (std::size_t q = 0; q < result.queries.size(); ++q) {
          const IrResult ir = respond_ir(index, cfm, cft, result.queries[q], 2,
                                         false, config.lambda, config.topk);
          result.targets[q] = ir.target.level2;
        }
      }
      if (config.seq2seq) {
        SystemResult sys;
        sys.system = "seq2seq";
        for (const std::string& q : result.queries) {
          sys.responses.push_back(beam_search(s2s, q, std::nullopt).text);
        }
        result.systems.push_back(std::move(sys));
      }
      if (config.cseq2seq) {
        SystemResult sys;
        sys.system = "cseq2seq";
        for (std::size_t q = 0; q < result.queries.size(); ++q) {
          sys.responses.push_back(
              beam_search(cs2s, result.queries[q], result.targets[q]).text);
        }
        result.systems.push_back(std::move(sys));
      }
    }
    if (result.systems.empty()) throw Error("no systems enabled");
  });

  stage("score", [&] {
    std::vector<int> gold;
    for (Level2 t : result.targets) gold.push_back(static_cast<int>(t));
    for (SystemResult& sys : result.systems) {
      std::vector<int> pred;
      for (const std::string& r : sys.responses) {
        pred.push_back(classify_answer(cfm, r));
      }
      sys.report = evaluate(gold, pred);
      sys.target_sf_accuracy = sys.report.accuracy;
    }
  });

  stage("report", [&] {
    result.report_path = dir + "report.txt";
    result.records_path = dir + "records.jsonl";

    std::ofstream rep(result.report_path, std::ios::binary);
    if (!rep) throw IoError("cannot open \"" + result.report_path + "\" for writing");
    rep.setf(std::ios::fixed);
    rep.precision(4);
    rep << "sefun pipeline report\n";
    rep << "train pairs: " << train.pairs.size() << '\n';
    rep << "test queries: " << result.queries.size() << '\n';
    rep << "queries with a target-function candidate in top-" << config.topk << ": "
        << result.covered_queries << "/" << result.queries.size() << '\n';
    rep << '\n';
    for (const SystemResult& sys : result.systems) {
      rep << "system " << sys.system << ": target-function accuracy "
          << sys.target_sf_accuracy << '\n';
    }
    for (const SystemResult& sys : result.systems) {
      rep << "\n== " << sys.system << " ==\n" << sys.report.format(label_of);
    }
    rep.close();
    if (!rep) throw IoError("failed writing \"" + result.report_path + "\"");

    std::ofstream rec(result.records_path, std::ios::binary);
    if (!rec) throw IoError("cannot open \"" + result.records_path + "\" for writing");
    for (const SystemResult& sys : result.systems) {
      for (std::size_t q = 0; q < result.queries.size(); ++q) {
        const int pred = classify_answer(cfm, sys.responses[q]);
        nlohmann::json j;
        j["system"] = sys.system;
        j["query"] = result.queries[q];
        j["target"] = label_of(static_cast<int>(result.targets[q]));
        j["response"] = sys.responses[q];
        j["predicted"] = label_of(pred);
        j["hit"] = pred == static_cast<int>(result.targets[q]);
        rec << j.dump() << '\n';
      }
    }
    rec.close();
    if (!rec) throw IoError("failed writing \"" + result.records_path + "\"");
  });

  stage("grading", [&] {
    result.sheet_path = dir + "grading_sheet.csv";
    result.key_path = dir + "grading_key.csv";
    std::vector<std::string> target_names;
    for (Level2 t : result.targets) {
      target_names.push_back(label_of(static_cast<int>(t)));
    }
    std::vector<SystemOutputs> outs;
    for (const SystemResult& sys : result.systems) {
      outs.push_back({sys.system, sys.responses});
    }
    export_grading_sheet(result.queries, target_names, outs, config.grading_sample,
                         config.seed + 3, result.sheet_path, result.key_path);
  });

  return result;
}

}  // namespace sefun
