#include <algorithm>
#include <numeric>

#include "lmroute/error.hpp"
#include "lmroute/evaluation.hpp"

namespace lmroute {
namespace {

void check_inputs(std::span<const double> scores, std::span<const int> truth) {
  if (scores.size() != truth.size()) {
    throw InputError("metrics: " + std::to_string(scores.size()) + " predictions but " +
                     std::to_string(truth.size()) + " labels");
  }
  if (scores.empty()) throw InputError("metrics: empty input");
  for (int y : truth) {
    if (y != 0 && y != 1) throw InputError("metrics: labels must be 0 or 1");
  }
}

std::size_t count_positive(std::span<const int> truth) {
  return static_cast<std::size_t>(std::count(truth.begin(), truth.end(), 1));
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

}  // namespace

ConfusionCounts confusion(std::span<const double> predictions, std::span<const int> truth, double threshold) {
  check_inputs(predictions, truth);
  ConfusionCounts cm;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    const bool predicted = predictions[n] >= threshold;
    if (truth[n] == 1) {
      predicted ? ++cm.tp : ++cm.fn;
    } else {
      predicted ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

double roc_auc(std::span<const double> scores, std::span<const int> truth) {
  check_inputs(scores, truth);
  const auto n = scores.size();
  const auto positives = count_positive(truth);
  const auto negatives = n - positives;
  if (positives == 0 || negatives == 0) throw InputError("ROC-AUC is undefined for single-class labels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tied run [lo, hi) shares the midrank (lo + 1 + hi) / 2.
  double positive_rank_sum = 0.0;
  for (std::size_t lo = 0; lo < n;) {
    auto hi = lo + 1;
    while (hi < n && scores[order[hi]] == scores[order[lo]]) ++hi;
    const double midrank = static_cast<double>(lo + 1 + hi) / 2.0;
    for (auto t = lo; t < hi; ++t) {
      if (truth[order[t]] == 1) positive_rank_sum += midrank;
    }
    lo = hi;
  }
  const auto p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double average_precision(std::span<const double> scores, std::span<const int> truth) {
  check_inputs(scores, truth);
  const auto n = scores.size();
  const auto positives = count_positive(truth);
  if (positives == 0 || positives == n) throw InputError("PR-AUC is undefined for single-class labels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double previous_recall = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t lo = 0; lo < n;) {
    auto hi = lo;
    while (hi < n && scores[order[hi]] == scores[order[lo]]) {
      tp += static_cast<std::size_t>(truth[order[hi]]);
      ++hi;
    }
    seen = hi;
    const double recall = ratio(tp, positives);
    ap += (recall - previous_recall) * ratio(tp, seen);
    previous_recall = recall;
    lo = hi;
  }
  return ap;
}

MetaMetrics meta_metrics(std::span<const double> predictions, std::span<const int> truth, double threshold,
                         AucPolicy auc) {
  const auto cm = confusion(predictions, truth, threshold);
  MetaMetrics m;
  m.n = truth.size();
  m.meta_accuracy = ratio(cm.tp + cm.tn, m.n);

  // Class 1 and class 0, each treated as the positive class in turn.
  const double precision1 = ratio(cm.tp, cm.tp + cm.fp);
  const double recall1 = ratio(cm.tp, cm.tp + cm.fn);
  const double precision0 = ratio(cm.tn, cm.tn + cm.fn);
  const double recall0 = ratio(cm.tn, cm.tn + cm.fp);
  m.macro_precision = (precision0 + precision1) / 2.0;
  m.macro_recall = (recall0 + recall1) / 2.0;
  m.macro_f1 = (f1(precision0, recall0) + f1(precision1, recall1)) / 2.0;

  const auto positives = count_positive(truth);
  const bool single_class = positives == 0 || positives == truth.size();
  if (single_class) {
    if (auc == AucPolicy::Require) throw InputError("ROC-AUC and PR-AUC are undefined for single-class labels");
  } else {
    m.roc_auc = roc_auc(predictions, truth);
    m.pr_auc = average_precision(predictions, truth);
  }
  return m;
}

}  // namespace lmroute
