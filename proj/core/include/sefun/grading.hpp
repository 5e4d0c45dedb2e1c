#ifndef SEFUN_GRADING_HPP
#define SEFUN_GRADING_HPP

// Blind human-grading sheets: a CSV of (row, query, target function,
// response) with empty grade columns, plus a sidecar key CSV mapping each
// row back to the system that produced it. Row order and system identities
// are shuffled by seed so graders cannot tell systems apart.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sefun {

inline constexpr const char* kGradeAspects[4] = {"Fluency", "Relevance",
                                                 "Informativeness", "Accuracy"};
inline constexpr int kMaxGrade = 5;

struct SystemOutputs {
  std::string system;
  std::vector<std::string> responses;  // aligned with the query list
};

// Samples up to sample_size queries (all when fewer), emits one row per
// (query, system) in seeded shuffled order. queries and target_sfs must
// align, and every system must cover every query (CoverageMismatchError).
void export_grading_sheet(const std::vector<std::string>& queries,
                          const std::vector<std::string>& target_sfs,
                          const std::vector<SystemOutputs>& systems,
                          std::size_t sample_size, std::uint64_t seed,
                          const std::string& sheet_path, const std::string& key_path);

struct AspectScores {
  double fluency = 0.0;
  double relevance = 0.0;
  double informativeness = 0.0;
  double accuracy = 0.0;
};

// system -> per-aspect mean grade normalized to [0,1] (divided by 5).
using GradingScores = std::map<std::string, AspectScores>;

// Grades must all be present (MissingGradesError lists the offending rows)
// and integers in 0..5 (ParseError naming the row otherwise).
GradingScores ingest_grading_sheet(const std::string& sheet_path,
                                   const std::string& key_path);

// Mean of several annotators' copies of the same sheet.
GradingScores ingest_grading_sheets(const std::vector<std::string>& sheet_paths,
                                    const std::string& key_path);

}  // namespace sefun

#endif  // SEFUN_GRADING_HPP
