#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmroute/grid.hpp"
#include "lmroute/prediction.hpp"
#include "lmroute/registry.hpp"
#include "lmroute/strategies.hpp"

namespace lmroute {

// Observed solve indicators per (model, query); scores binarized at 0.5.
class GroundTruth {
 public:
  // Records for pairs outside the registry or batch are ignored.
  static GroundTruth from_records(std::span<const RunRecord> records, const ModelRegistry& reg,
                                  std::span<const Query> batch);

  std::size_t models() const noexcept { return models_; }
  std::size_t queries() const noexcept { return query_ids_.size(); }
  const std::string& query_id(std::size_t j) const { return query_ids_[j]; }

  bool covered(std::size_t model, std::size_t query) const { return cell(model, query) >= 0; }
  bool fully_covered() const;

  // 0 or 1; throws MissingPairError when the pair has no record.
  int solved(std::size_t model, std::size_t query) const;

  // Throws MissingPairError for the first uncovered pair.
  void require_full_coverage() const;

  // The indicators as a 0/1 prediction matrix (requires full coverage).
  PredictionMatrix as_predictions() const;

 private:
  GroundTruth(std::vector<std::string> model_ids, std::vector<std::string> query_ids, std::vector<std::int8_t> cells)
      : models_(model_ids.size()), model_ids_(std::move(model_ids)), query_ids_(std::move(query_ids)),
        cells_(std::move(cells)) {}

  std::int8_t cell(std::size_t model, std::size_t query) const { return cells_[model * queries() + query]; }

  std::size_t models_ = 0;
  std::vector<std::string> model_ids_;
  std::vector<std::string> query_ids_;
  std::vector<std::int8_t> cells_;  // -1 = no record
};

// Cheapest solving model per query (ties -> lower size_rank); unsolvable
// queries stay unassigned. Reported p is the 0/1 indicator.
AssignmentReport oracle_assign(const ModelRegistry& reg, const GroundTruth& truth, const CostMatrix& c);

struct RealizedOutcome {
  std::size_t n_queries = 0;
  std::size_t n_assigned = 0;
  std::size_t n_solved = 0;
  double accuracy = 0.0;                // solved / all queries; unassigned count as wrong
  double accuracy_assigned_only = 0.0;  // solved / assigned; 0 when nothing is assigned
  double total_cost_usd = 0.0;          // assigned pairs only
  double avg_cost_per_query_usd = 0.0;  // total / all queries
};

RealizedOutcome realized_accuracy_cost(const Assignment& assignment, const GroundTruth& truth, const CostMatrix& c);

struct ConfusionCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

ConfusionCounts confusion(std::span<const double> predictions, std::span<const int> truth, double threshold);

// Mann-Whitney statistic with midranks. Throws InputError for single-class truth.
double roc_auc(std::span<const double> scores, std::span<const int> truth);

// Average precision: sum over distinct score thresholds of (delta recall) * precision.
double average_precision(std::span<const double> scores, std::span<const int> truth);

struct MetaMetrics {
  std::size_t n = 0;
  double meta_accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> roc_auc;
  std::optional<double> pr_auc;
};

enum class AucPolicy {
  Require,  // single-class truth is an error
  Omit,     // single-class truth leaves the AUCs empty
};

MetaMetrics meta_metrics(std::span<const double> predictions, std::span<const int> truth,
                         double threshold = kSolveThreshold, AucPolicy auc = AucPolicy::Require);

struct FlatPairs {
  std::vector<double> predictions;
  std::vector<int> truth;
  std::vector<std::size_t> model;  // row of each pair
  std::vector<std::size_t> query;  // column of each pair
};

// Model-major flattening of every (model, query) pair; needs full coverage.
FlatPairs flatten(const PredictionMatrix& p, const GroundTruth& truth);

struct SweepPoint {
  double budget_usd = 0.0;
  double avg_cost_per_query_usd = 0.0;
  double accuracy = 0.0;
  std::size_t n_assigned = 0;
  double accuracy_assigned_only = 0.0;
};

enum class CostStrategy { Greedy, CostIlp };

// One point per budget, in input order. ilp carries the time limit and
// tolerance used for CostIlp runs; its budget field is ignored.
std::vector<SweepPoint> sweep_cost_strategies(const ModelRegistry& reg, const PredictionMatrix& p,
                                              const CostMatrix& c, const GroundTruth& truth,
                                              std::span<const double> budgets, CostStrategy strategy,
                                              const CostIlp& ilp = {});

enum class GroupBy { Dataset, Task, Model };

std::string to_string(GroupBy g);

// Groups sorted by name. Dataset/task grouping throws InputError when a query lacks the tag.
std::map<std::string, MetaMetrics> stratified_meta_metrics(const PredictionMatrix& p, const GroundTruth& truth,
                                                           const ModelRegistry& reg, std::span<const Query> batch,
                                                           GroupBy group_by, double threshold = kSolveThreshold);

// Model grouping buckets queries by their assigned model ("(unassigned)" for none).
std::map<std::string, RealizedOutcome> stratified_realized(const Assignment& assignment, const GroundTruth& truth,
                                                           const CostMatrix& c, const ModelRegistry& reg,
                                                           std::span<const Query> batch, GroupBy group_by);

std::map<std::string, CalibrationCurve> stratified_calibration(const PredictionMatrix& p, const GroundTruth& truth,
                                                               const ModelRegistry& reg, std::span<const Query> batch,
                                                               GroupBy group_by, std::size_t n_bins);

}  // namespace lmroute
