#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lmroute/grid.hpp"
#include "lmroute/mckp.hpp"
#include "lmroute/registry.hpp"

// Assignment strategies. They see the registry and the two matrices only, so
// dataset/task tags on queries cannot influence routing.
namespace lmroute {

// choice[j] = model index for query j, or nullopt when the query is not sent.
struct Assignment {
  std::vector<std::optional<std::size_t>> choice;

  std::size_t assigned_count() const;
  bool operator==(const Assignment&) const = default;
};

struct SingleModel {
  std::string model_id;
};
struct PerformanceMax {};
enum class Fallback { Smallest, Largest };
struct Threshold {
  double threshold = 0.5;
  Fallback fallback = Fallback::Smallest;
};
struct Greedy {
  double budget_usd = 0.0;
};
struct CostIlp {
  double budget_usd = 0.0;
  std::optional<std::chrono::milliseconds> time_limit;
  double tolerance = mckp::kDefaultTolerance;
};
struct PerfIlp {
  double min_total_performance = 0.0;
  std::optional<std::chrono::milliseconds> time_limit;
  double tolerance = mckp::kDefaultTolerance;
};

using StrategySpec = std::variant<SingleModel, PerformanceMax, Threshold, Greedy, CostIlp, PerfIlp>;

// Throws InputError when a parameter is out of range.
void validate(const StrategySpec& spec);
std::string strategy_name(const StrategySpec& spec);

struct SolverStatus {
  enum class Kind { Optimal, Incumbent, NotApplicable };
  Kind kind = Kind::NotApplicable;
  double bound = 0.0;  // set for Incumbent: best known bound on the optimum
  std::optional<mckp::SearchStats> stats;
};

std::string to_string(SolverStatus::Kind kind);

struct QueryOutcome {
  std::size_t query = 0;
  std::optional<std::size_t> model;
  double p = 0.0;     // 0 when unassigned
  double cost = 0.0;  // 0 when unassigned
};

struct AssignmentReport {
  Assignment assignment;
  double predicted_total_performance = 0.0;
  double estimated_total_cost = 0.0;
  std::vector<QueryOutcome> per_query;
  SolverStatus solver_status;
};

// Per-query rows and totals for an assignment.
AssignmentReport make_report(Assignment assignment, const PredictionMatrix& p, const CostMatrix& c,
                             SolverStatus status = {});

AssignmentReport assign_single_model(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                                     const std::string& model_id);

// Argmax p per query; ties -> lower cost -> lower size_rank -> lower index.
AssignmentReport assign_performance_max(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c);

// Cheapest model with p >= threshold (ties -> lower size_rank); otherwise the
// smallest or largest model.
AssignmentReport assign_threshold(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                                  double threshold, Fallback fallback);

// Batch order, argmax model per query, stop at the first query whose choice
// does not fit the remaining budget; that query and all later ones stay unassigned.
AssignmentReport assign_greedy(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                               double budget_usd);

// max sum p subject to sum c <= budget, at most one model per query.
AssignmentReport assign_cost_ilp(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                                 const CostIlp& params);

// min sum c subject to sum p >= floor. Throws InfeasibleError with the
// attainable maximum when the floor cannot be met.
AssignmentReport assign_perf_ilp(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                                 const PerfIlp& params);

AssignmentReport route(const StrategySpec& spec, const ModelRegistry& reg, const PredictionMatrix& p,
                       const CostMatrix& c);

// Options per query: one per model with (cost, p) and id = model index.
mckp::Instance to_mckp(const PredictionMatrix& p, const CostMatrix& c, mckp::Direction direction);

}  // namespace lmroute
