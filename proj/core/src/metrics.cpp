#include "sefun/metrics.hpp"

#include <map>
#include <sstream>

#include "sefun/errors.hpp"

namespace sefun {

EvalReport evaluate(const std::vector<int>& gold, const std::vector<int>& pred) {
  if (gold.size() != pred.size()) {
    throw LengthMismatchError("gold has " + std::to_string(gold.size()) +
                              " labels, predictions have " + std::to_string(pred.size()));
  }
  if (gold.empty()) throw EmptyInputError("cannot evaluate zero examples");

  std::map<int, ClassScore> by_class;
  auto slot = [&](int label) -> ClassScore& {
    auto [it, fresh] = by_class.try_emplace(label);
    if (fresh) it->second.label = label;
    return it->second;
  };

  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++slot(gold[i]).support;
    if (gold[i] == pred[i]) {
      ++hits;
      ++slot(gold[i]).tp;
    } else {
      ++slot(gold[i]).fn;
      ++slot(pred[i]).fp;
    }
  }

  EvalReport r;
  r.n = gold.size();
  r.accuracy = static_cast<double>(hits) / static_cast<double>(gold.size());

  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double f1_sum = 0.0;
  for (auto& [label, c] : by_class) {
    c.precision = c.tp + c.fp == 0 ? 0.0
                                   : static_cast<double>(c.tp) /
                                         static_cast<double>(c.tp + c.fp);
    c.recall = c.tp + c.fn == 0
                   ? 0.0
                   : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    c.f1 = c.precision + c.recall == 0.0
               ? 0.0
               : 2.0 * c.precision * c.recall / (c.precision + c.recall);
    f1_sum += c.f1;
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    r.classes.push_back(c);
  }
  r.macro_f1 = f1_sum / static_cast<double>(by_class.size());

  const double micro_p = tp + fp == 0 ? 0.0
                                      : static_cast<double>(tp) /
                                            static_cast<double>(tp + fp);
  const double micro_r = tp + fn == 0 ? 0.0
                                      : static_cast<double>(tp) /
                                            static_cast<double>(tp + fn);
  r.micro_f1 = micro_p + micro_r == 0.0 ? 0.0
                                        : 2.0 * micro_p * micro_r / (micro_p + micro_r);
  return r;
}

double accuracy(const std::vector<int>& gold, const std::vector<int>& pred) {
  return evaluate(gold, pred).accuracy;
}

double macro_f1(const std::vector<int>& gold, const std::vector<int>& pred) {
  return evaluate(gold, pred).macro_f1;
}

double micro_f1(const std::vector<int>& gold, const std::vector<int>& pred) {
  return evaluate(gold, pred).micro_f1;
}

std::string EvalReport::format(const std::function<std::string(int)>& label_name) const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "examples: " << n << '\n';
  out << "accuracy: " << accuracy << '\n';
  out << "macro-f1: " << macro_f1
      << "  (classes = union of gold and predicted labels; no-hit classes score 0)\n";
  out << "micro-f1: " << micro_f1 << '\n';
  out << "class\tsupport\tprec\trecall\tf1\n";
  for (const ClassScore& c : classes) {
    out << (label_name ? label_name(c.label) : std::to_string(c.label)) << '\t'
        << c.support << '\t' << c.precision << '\t' << c.recall << '\t' << c.f1 << '\n';
  }
  return out.str();
}

}  // namespace sefun
