#include "covermodal/evalsuite.hpp"

#include "covermodal/fileio.hpp"

#include <json.hpp>

#include <algorithm>
#include <stdexcept>

namespace covermodal {

namespace {

void check_labels(const Matrix& scores, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != scores.rows()) {
    throw std::invalid_argument("label count does not match score rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= scores.cols()) {
      throw std::invalid_argument("label " + std::to_string(y) + " outside score columns");
    }
  }
}

}  // namespace

double topk_accuracy(const Matrix& scores, const std::vector<int>& labels, int k) {
  const Eigen::Index c = scores.cols();
  if (k < 1 || k > c) {
    throw std::invalid_argument("topk_accuracy: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(c) + "]");
  }
  check_labels(scores, labels);
  if (scores.rows() == 0) return 0.0;

  long hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const int y = labels[i];
    const double sy = scores(i, y);
    long ahead = 0;
    for (Eigen::Index j = 0; j < c; ++j) {
      if (j == y) continue;
      const double sj = scores(i, j);
      if (sj > sy || (sj == sy && j < y)) ++ahead;
    }
    if (ahead < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

std::vector<std::vector<long>> confusion(const Matrix& scores, const std::vector<int>& labels) {
  check_labels(scores, labels);
  const Eigen::Index c = scores.cols();
  std::vector<std::vector<long>> counts(c, std::vector<long>(c, 0));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index pred = 0;
    double best = scores(i, 0);
    for (Eigen::Index j = 1; j < c; ++j) {
      if (scores(i, j) > best) {
        best = scores(i, j);
        pred = j;
      }
    }
    ++counts[pred][labels[i]];
  }
  return counts;
}

EvalReport evaluate_scores(const Matrix& scores, const std::vector<int>& labels,
                           const std::vector<std::string>& class_names) {
  if (scores.rows() == 0) throw std::invalid_argument("evaluate_scores: no rows");
  if (scores.cols() != static_cast<Eigen::Index>(class_names.size())) {
    throw std::invalid_argument("evaluate_scores: score columns do not match class names");
  }
  const int c = static_cast<int>(class_names.size());

  EvalReport report;
  report.class_names = class_names;
  report.n = scores.rows();
  report.top1 = topk_accuracy(scores, labels, 1);
  report.top3 = topk_accuracy(scores, labels, std::min(3, c));
  report.confusion_counts = confusion(scores, labels);
  report.per_class.assign(c, 0.0);
  for (int a = 0; a < c; ++a) {
    long column_total = 0;
    for (int p = 0; p < c; ++p) column_total += report.confusion_counts[p][a];
    if (column_total > 0) {
      report.per_class[a] = static_cast<double>(report.confusion_counts[a][a]) /
                            static_cast<double>(column_total);
    }
  }
  return report;
}

std::string metrics_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["top1"] = report.top1;
  j["top3"] = report.top3;
  j["n"] = report.n;
  j["per_class"] = report.per_class;
  j["class_names"] = report.class_names;
  return j.dump(2) + "\n";
}

std::string confusion_to_csv(const EvalReport& report) {
  std::string out = "pred\\actual";
  for (const std::string& name : report.class_names) {
    out.push_back(',');
    out += name;
  }
  out.push_back('\n');
  for (std::size_t p = 0; p < report.confusion_counts.size(); ++p) {
    out += report.class_names[p];
    for (long count : report.confusion_counts[p]) {
      out.push_back(',');
      out += std::to_string(count);
    }
    out.push_back('\n');
  }
  return out;
}

void write_metrics(const EvalReport& report, const std::string& path) {
  atomic_write_file(path, metrics_to_json(report));
}

void write_confusion_csv(const EvalReport& report, const std::string& path) {
  atomic_write_file(path, confusion_to_csv(report));
}

}  // namespace covermodal
