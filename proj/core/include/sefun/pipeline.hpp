#ifndef SEFUN_PIPELINE_HPP
#define SEFUN_PIPELINE_HPP

// End-to-end run on a self-generated corpus: train the classifiers, build
// the retrieval index, optionally train the generators, answer a test set
// with each enabled system, and score every answer automatically — does the
// CfM-classified function of the answer match the CfT-chosen target? Writes
// a text report, a JSONL record file, and a blind grading sheet; everything
// is deterministic in the config seeds.

#include <cstdint>
#include <string>
#include <vector>

#include "sefun/metrics.hpp"
#include "sefun/nn.hpp"
#include "sefun/taxonomy.hpp"

namespace sefun {

struct PipelineConfig {
  std::string workdir;  // created if missing; all outputs land here

  std::size_t train_pairs = 1000;   // grid corpus padded with random pairs
  std::size_t test_queries = 200;
  std::size_t grading_sample = 200;
  std::uint64_t seed = 7;

  nn::TrainConfig cfm = nn::TrainConfig::desk_scale();
  nn::TrainConfig cft = nn::TrainConfig::desk_scale();
  nn::TrainConfig gen = nn::TrainConfig::desk_scale();

  bool ir_baseline = true;
  bool ir_rerank = true;
  bool seq2seq = false;
  bool cseq2seq = false;

  double lambda = 1.0;
  std::size_t topk = 20;
};

struct SystemResult {
  std::string system;
  double target_sf_accuracy = 0.0;  // top answer carries the target function
  EvalReport report;                // per-class breakdown of the same proxy
  std::vector<std::string> responses;  // aligned with queries
};

struct PipelineResult {
  std::vector<std::string> queries;
  std::vector<Level2> targets;  // CfT-chosen target function per query
  std::vector<SystemResult> systems;
  // Queries whose candidate list held >= 1 target-function response; the
  // re-rank comparison is only meaningful when this covers the test set.
  std::size_t covered_queries = 0;

  std::string report_path;
  std::string records_path;
  std::string sheet_path;
  std::string key_path;
};

// Throws StageError naming the failed stage.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace sefun

#endif  // SEFUN_PIPELINE_HPP
