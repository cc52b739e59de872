#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace neurotopo::eval {

// Support-weighted classification metrics over integer labels [0, classes).
// Classes never predicted get precision 0; classes absent from y_true carry
// zero weight. Support-weighted recall is identically the accuracy.
struct WeightedMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

inline WeightedMetrics weighted_metrics(const std::vector<int>& y_true,
                                        const std::vector<int>& y_pred,
                                        int class_count) {
  if (y_true.empty()) throw std::invalid_argument("metrics: empty input");
  if (y_true.size() != y_pred.size())
    throw std::invalid_argument("metrics: " + std::to_string(y_true.size()) +
                                " true vs " + std::to_string(y_pred.size()) +
                                " predicted labels");
  if (class_count < 1) throw std::invalid_argument("metrics: no classes");

  WeightedMetrics m;
  const std::size_t C = static_cast<std::size_t>(class_count);
  m.confusion.assign(C, std::vector<std::size_t>(C, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= class_count || y_pred[i] < 0 ||
        y_pred[i] >= class_count)
      throw std::invalid_argument("metrics: label outside [0," +
                                  std::to_string(class_count) + ") at index " +
                                  std::to_string(i));
    ++m.confusion[static_cast<std::size_t>(y_true[i])]
                 [static_cast<std::size_t>(y_pred[i])];
  }

  const double total = static_cast<double>(y_true.size());
  double correct = 0.0;
  for (std::size_t c = 0; c < C; ++c) correct += static_cast<double>(m.confusion[c][c]);
  m.accuracy = correct / total;

  for (std::size_t c = 0; c < C; ++c) {
    std::size_t tp = m.confusion[c][c], support = 0, predicted = 0;
    for (std::size_t o = 0; o < C; ++o) {
      support += m.confusion[c][o];
      predicted += m.confusion[o][c];
    }
    if (support == 0) continue;  // zero weight
    const double weight = static_cast<double>(support) / total;
    const double prec =
        predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
    const double rec = static_cast<double>(tp) / static_cast<double>(support);
    const double f1 = prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
    m.precision += weight * prec;
    m.recall += weight * rec;
    m.f1 += weight * f1;
  }
  return m;
}

// One trained-and-evaluated fold.
struct FoldResult {
  int repetition = 0;
  int fold = 0;
  int group = -1;  // held-out group for leave-one-group-out protocols
  std::size_t test_size = 0;
  WeightedMetrics metrics;
};

struct MetricsSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single fold
};

inline MetricsSummary summarize(const std::vector<double>& values) {
  MetricsSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

struct MetricsReport {
  std::string experiment;
  std::string protocol;
  int repetitions = 1;
  int class_count = 0;
  std::vector<FoldResult> per_fold;
  MetricsSummary accuracy, precision, recall, f1;

  void aggregate() {
    std::vector<double> a, p, r, f;
    for (const FoldResult& fr : per_fold) {
      a.push_back(fr.metrics.accuracy);
      p.push_back(fr.metrics.precision);
      r.push_back(fr.metrics.recall);
      f.push_back(fr.metrics.f1);
    }
    accuracy = summarize(a);
    precision = summarize(p);
    recall = summarize(r);
    f1 = summarize(f);
  }
};

inline nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["experiment"] = report.experiment;
  j["protocol"] = report.protocol;
  j["repetitions"] = report.repetitions;
  j["class_count"] = report.class_count;
  j["chance_level"] = report.class_count > 0 ? 1.0 / report.class_count : 0.0;
  j["per_fold"] = nlohmann::json::array();
  for (const FoldResult& fr : report.per_fold) {
    nlohmann::json e;
    e["repetition"] = fr.repetition;
    e["fold"] = fr.fold;
    if (fr.group >= 0) e["group"] = fr.group;
    e["test_size"] = fr.test_size;
    e["accuracy"] = fr.metrics.accuracy;
    e["weighted_precision"] = fr.metrics.precision;
    e["weighted_recall"] = fr.metrics.recall;
    e["weighted_f1"] = fr.metrics.f1;
    e["confusion"] = fr.metrics.confusion;
    j["per_fold"].push_back(e);
  }
  auto summary = [](const MetricsSummary& s) {
    return nlohmann::json{{"mean", s.mean}, {"std", s.stddev}};
  };
  j["aggregate"] = {{"accuracy", summary(report.accuracy)},
                    {"weighted_precision", summary(report.precision)},
                    {"weighted_recall", summary(report.recall)},
                    {"weighted_f1", summary(report.f1)}};
  return j;
}

}  // namespace neurotopo::eval
