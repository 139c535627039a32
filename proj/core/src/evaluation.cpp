#include "lmroute/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "lmroute/error.hpp"

namespace lmroute {
namespace {

void check_shape(const GroundTruth& truth, const CostMatrix& c, std::size_t queries) {
  if (truth.models() != c.models() || truth.queries() != c.queries() || truth.queries() != queries) {
    throw InputError("ground truth, costs and assignment disagree on dimensions");
  }
}

const std::string& tag_of(const Query& q, GroupBy group_by) {
  const auto& tag = group_by == GroupBy::Dataset ? q.dataset : q.task;
  if (!tag) throw InputError("query '" + q.id + "' has no " + to_string(group_by) + " tag");
  return *tag;
}

// Group key of pair (model i, query j).
std::string pair_key(const ModelRegistry& reg, std::span<const Query> batch, GroupBy group_by, std::size_t i,
                     std::size_t j) {
  return group_by == GroupBy::Model ? reg[i].id : tag_of(batch[j], group_by);
}

void check_batch(const PredictionMatrix& p, const GroundTruth& truth, const ModelRegistry& reg,
                 std::span<const Query> batch) {
  if (p.models() != reg.size() || truth.models() != reg.size() || p.queries() != batch.size() ||
      truth.queries() != batch.size()) {
    throw InputError("predictions, ground truth, registry and batch disagree on dimensions");
  }
}

std::map<std::string, FlatPairs> group_pairs(const PredictionMatrix& p, const GroundTruth& truth,
                                             const ModelRegistry& reg, std::span<const Query> batch,
                                             GroupBy group_by) {
  check_batch(p, truth, reg, batch);
  const auto flat = flatten(p, truth);
  std::map<std::string, FlatPairs> groups;
  for (std::size_t n = 0; n < flat.truth.size(); ++n) {
    auto& g = groups[pair_key(reg, batch, group_by, flat.model[n], flat.query[n])];
    g.predictions.push_back(flat.predictions[n]);
    g.truth.push_back(flat.truth[n]);
  }
  return groups;
}

RealizedOutcome realize(const Assignment& assignment, const GroundTruth& truth, const CostMatrix& c,
                        std::span<const std::size_t> queries) {
  RealizedOutcome out;
  out.n_queries = queries.size();
  for (auto j : queries) {
    const auto& model = assignment.choice[j];
    if (!model) continue;
    if (*model >= truth.models()) throw InputError("assignment references model index out of range");
    ++out.n_assigned;
    out.n_solved += static_cast<std::size_t>(truth.solved(*model, j));
    out.total_cost_usd += c(*model, j);
  }
  if (out.n_queries > 0) {
    const auto m = static_cast<double>(out.n_queries);
    out.accuracy = static_cast<double>(out.n_solved) / m;
    out.avg_cost_per_query_usd = out.total_cost_usd / m;
  }
  if (out.n_assigned > 0) {
    out.accuracy_assigned_only = static_cast<double>(out.n_solved) / static_cast<double>(out.n_assigned);
  }
  return out;
}

}  // namespace

GroundTruth GroundTruth::from_records(std::span<const RunRecord> records, const ModelRegistry& reg,
                                      std::span<const Query> batch) {
  validate_batch(batch);
  validate_records(records);
  std::unordered_map<std::string_view, std::size_t> query_index;
  for (std::size_t j = 0; j < batch.size(); ++j) query_index.emplace(batch[j].id, j);

  std::vector<std::int8_t> cells(reg.size() * batch.size(), -1);
  for (const auto& r : records) {
    const auto model = reg.index_of(r.model_id);
    const auto query = query_index.find(r.query_id);
    if (!model || query == query_index.end()) continue;
    cells[*model * batch.size() + query->second] = r.score >= kSolveThreshold ? 1 : 0;
  }
  std::vector<std::string> model_ids;
  for (const auto& m : reg.models()) model_ids.push_back(m.id);
  std::vector<std::string> query_ids;
  for (const auto& q : batch) query_ids.push_back(q.id);
  return GroundTruth(std::move(model_ids), std::move(query_ids), std::move(cells));
}

bool GroundTruth::fully_covered() const {
  return std::none_of(cells_.begin(), cells_.end(), [](std::int8_t v) { return v < 0; });
}

int GroundTruth::solved(std::size_t model, std::size_t query) const {
  const auto v = cell(model, query);
  if (v < 0) throw MissingPairError(model_ids_[model], query_ids_[query]);
  return v;
}

void GroundTruth::require_full_coverage() const {
  for (std::size_t n = 0; n < cells_.size(); ++n) {
    if (cells_[n] < 0) throw MissingPairError(model_ids_[n / queries()], query_ids_[n % queries()]);
  }
}

PredictionMatrix GroundTruth::as_predictions() const {
  require_full_coverage();
  return PredictionMatrix(models_, queries(), std::vector<double>(cells_.begin(), cells_.end()));
}

AssignmentReport oracle_assign(const ModelRegistry& reg, const GroundTruth& truth, const CostMatrix& c) {
  check_shape(truth, c, c.queries());
  if (truth.models() != reg.size()) throw InputError("ground truth rows do not match the registry");
  truth.require_full_coverage();
  Assignment a;
  for (std::size_t j = 0; j < truth.queries(); ++j) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < reg.size(); ++i) {
      if (truth.solved(i, j) != 1) continue;
      if (!best || c(i, j) < c(*best, j) || (c(i, j) == c(*best, j) && reg[i].size_rank < reg[*best].size_rank)) {
        best = i;
      }
    }
    a.choice.push_back(best);
  }
  return make_report(std::move(a), truth.as_predictions(), c);
}

RealizedOutcome realized_accuracy_cost(const Assignment& assignment, const GroundTruth& truth, const CostMatrix& c) {
  check_shape(truth, c, assignment.choice.size());
  std::vector<std::size_t> all(assignment.choice.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return realize(assignment, truth, c, all);
}

FlatPairs flatten(const PredictionMatrix& p, const GroundTruth& truth) {
  if (p.models() != truth.models() || p.queries() != truth.queries()) {
    throw InputError("predictions and ground truth disagree on dimensions");
  }
  truth.require_full_coverage();
  FlatPairs flat;
  for (std::size_t i = 0; i < p.models(); ++i) {
    for (std::size_t j = 0; j < p.queries(); ++j) {
      flat.predictions.push_back(p(i, j));
      flat.truth.push_back(truth.solved(i, j));
      flat.model.push_back(i);
      flat.query.push_back(j);
    }
  }
  return flat;
}

std::vector<SweepPoint> sweep_cost_strategies(const ModelRegistry& reg, const PredictionMatrix& p,
                                              const CostMatrix& c, const GroundTruth& truth,
                                              std::span<const double> budgets, CostStrategy strategy,
                                              const CostIlp& ilp) {
  if (budgets.empty()) throw InputError("sweep needs at least one budget");
  std::vector<SweepPoint> points;
  points.reserve(budgets.size());
  for (double budget : budgets) {
    if (!(budget >= 0.0) || !std::isfinite(budget)) throw InputError("sweep budgets must be finite and >= 0");
    auto params = ilp;
    params.budget_usd = budget;
    const auto report = strategy == CostStrategy::Greedy ? assign_greedy(reg, p, c, budget)
                                                         : assign_cost_ilp(reg, p, c, params);
    const auto realized = realized_accuracy_cost(report.assignment, truth, c);
    points.push_back({budget, realized.avg_cost_per_query_usd, realized.accuracy, realized.n_assigned,
                      realized.accuracy_assigned_only});
  }
  return points;
}

std::string to_string(GroupBy g) {
  switch (g) {
    case GroupBy::Dataset: return "dataset";
    case GroupBy::Task: return "task";
    case GroupBy::Model: return "model";
  }
  return "unknown";
}

std::map<std::string, MetaMetrics> stratified_meta_metrics(const PredictionMatrix& p, const GroundTruth& truth,
                                                           const ModelRegistry& reg, std::span<const Query> batch,
                                                           GroupBy group_by, double threshold) {
  const auto groups = group_pairs(p, truth, reg, batch, group_by);
  std::map<std::string, MetaMetrics> out;
  for (const auto& [name, g] : groups) out.emplace(name, meta_metrics(g.predictions, g.truth, threshold, AucPolicy::Omit));
  return out;
}

std::map<std::string, RealizedOutcome> stratified_realized(const Assignment& assignment, const GroundTruth& truth,
                                                           const CostMatrix& c, const ModelRegistry& reg,
                                                           std::span<const Query> batch, GroupBy group_by) {
  check_shape(truth, c, batch.size());
  if (assignment.choice.size() != batch.size()) throw InputError("assignment does not cover the batch");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (group_by == GroupBy::Model) {
      const auto& model = assignment.choice[j];
      members[model ? reg[*model].id : std::string("(unassigned)")].push_back(j);
    } else {
      members[tag_of(batch[j], group_by)].push_back(j);
    }
  }
  std::map<std::string, RealizedOutcome> out;
  for (const auto& [name, queries] : members) out.emplace(name, realize(assignment, truth, c, queries));
  return out;
}

std::map<std::string, CalibrationCurve> stratified_calibration(const PredictionMatrix& p, const GroundTruth& truth,
                                                               const ModelRegistry& reg, std::span<const Query> batch,
                                                               GroupBy group_by, std::size_t n_bins) {
  const auto groups = group_pairs(p, truth, reg, batch, group_by);
  std::map<std::string, CalibrationCurve> out;
  for (const auto& [name, g] : groups) out.emplace(name, calibration_curve(g.predictions, g.truth, n_bins));
  return out;
}

}  // namespace lmroute
