#pragma once

#include "covermodal/corpus.hpp"
#include "covermodal/numkernel.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace covermodal {

struct EvalReport {
  double top1 = 0.0;
  double top3 = 0.0;
  std::vector<double> per_class;                     // diagonal / actual-class count
  std::vector<std::vector<long>> confusion_counts;  // [predicted][actual]
  long n = 0;
  std::vector<std::string> class_names;
};

// Fraction of rows whose label is among the k highest scores; ties rank the
// lower class index first.
double topk_accuracy(const Matrix& scores, const std::vector<int>& labels, int k);

// Argmax per row (ties to the lower index); entry [predicted][actual].
std::vector<std::vector<long>> confusion(const Matrix& scores, const std::vector<int>& labels);

EvalReport evaluate_scores(const Matrix& scores, const std::vector<int>& labels,
                           const std::vector<std::string>& class_names);

template <typename Model>
EvalReport evaluate(const Model& model, const Dataset& test,
                    const std::vector<std::string>& class_names) {
  if (test.samples.empty()) throw std::invalid_argument("evaluate: empty test set");
  const Matrix scores = predict(model, std::span<const Sample>(test.samples));
  std::vector<int> labels;
  labels.reserve(test.samples.size());
  for (const Sample& s : test.samples) labels.push_back(s.label);
  return evaluate_scores(scores, labels, class_names);
}

std::string metrics_to_json(const EvalReport& report);
std::string confusion_to_csv(const EvalReport& report);

void write_metrics(const EvalReport& report, const std::string& path);
void write_confusion_csv(const EvalReport& report, const std::string& path);

}  // namespace covermodal
