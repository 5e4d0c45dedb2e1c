#ifndef SEFUN_METRICS_HPP
#define SEFUN_METRICS_HPP

// Single-label classification metrics. The class universe is the union of
// gold and predicted labels; a class with no true positives scores F1 = 0.
// With one label per example, micro-F1 equals plain accuracy.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace sefun {

struct ClassScore {
  int label = 0;
  std::size_t support = 0;  // gold occurrences
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::vector<ClassScore> classes;  // ascending label order

  // Fixed-format table; label_name (optional) maps class ids to names.
  std::string format(const std::function<std::string(int)>& label_name = nullptr) const;
};

EvalReport evaluate(const std::vector<int>& gold, const std::vector<int>& pred);

double accuracy(const std::vector<int>& gold, const std::vector<int>& pred);
double macro_f1(const std::vector<int>& gold, const std::vector<int>& pred);
double micro_f1(const std::vector<int>& gold, const std::vector<int>& pred);

}  // namespace sefun

#endif  // SEFUN_METRICS_HPP
