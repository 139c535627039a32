#include "lmroute/strategies.hpp"

#include <cmath>

#include "lmroute/error.hpp"

namespace lmroute {
namespace {

void check_shapes(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c) {
  if (p.models() != reg.size() || c.models() != reg.size()) {
    throw InputError("matrices must have one row per registry model (" + std::to_string(reg.size()) + ")");
  }
  if (p.queries() != c.queries()) {
    throw InputError("prediction and cost matrices cover different numbers of queries");
  }
}

// Argmax p for one query; ties go to lower cost, then lower size_rank.
std::size_t best_predicted(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c, std::size_t j) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < reg.size(); ++i) {
    if (p(i, j) != p(best, j)) {
      if (p(i, j) > p(best, j)) best = i;
    } else if (c(i, j) != c(best, j)) {
      if (c(i, j) < c(best, j)) best = i;
    } else if (reg[i].size_rank < reg[best].size_rank) {
      best = i;
    }
  }
  return best;
}

bool nonnegative(double v) { return std::isfinite(v) && v >= 0.0; }

void check_time_limit(const std::optional<std::chrono::milliseconds>& limit) {
  if (limit && limit->count() < 0) throw InputError("time limit must be >= 0 ms");
}

SolverStatus status_of(const mckp::Solution& s) {
  SolverStatus status;
  status.kind = s.status == mckp::SolveStatus::Optimal ? SolverStatus::Kind::Optimal : SolverStatus::Kind::Incumbent;
  status.bound = s.bound;
  status.stats = s.stats;
  return status;
}

Assignment to_assignment(const mckp::Solution& s) {
  Assignment a;
  a.choice.reserve(s.picks.size());
  for (int pick : s.picks) {
    a.choice.push_back(pick == mckp::kNullOption ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(pick)));
  }
  return a;
}

}  // namespace

std::size_t Assignment::assigned_count() const {
  std::size_t n = 0;
  for (const auto& c : choice) n += c.has_value() ? 1 : 0;
  return n;
}

void validate(const StrategySpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SingleModel>) {
          if (s.model_id.empty()) throw InputError("single-model strategy needs a model id");
        } else if constexpr (std::is_same_v<T, Threshold>) {
          if (!(s.threshold >= 0.0 && s.threshold <= 1.0)) throw InputError("threshold must lie in [0,1]");
        } else if constexpr (std::is_same_v<T, Greedy>) {
          if (!nonnegative(s.budget_usd)) throw InputError("budget must be finite and >= 0");
        } else if constexpr (std::is_same_v<T, CostIlp>) {
          if (!nonnegative(s.budget_usd)) throw InputError("budget must be finite and >= 0");
          if (!nonnegative(s.tolerance)) throw InputError("tolerance must be >= 0");
          check_time_limit(s.time_limit);
        } else if constexpr (std::is_same_v<T, PerfIlp>) {
          if (!nonnegative(s.min_total_performance)) throw InputError("minimum performance must be finite and >= 0");
          if (!nonnegative(s.tolerance)) throw InputError("tolerance must be >= 0");
          check_time_limit(s.time_limit);
        }
      },
      spec);
}

std::string strategy_name(const StrategySpec& spec) {
  static const char* const kNames[] = {"single", "perfmax", "threshold", "greedy", "cost-ilp", "perf-ilp"};
  return kNames[spec.index()];
}

std::string to_string(SolverStatus::Kind kind) {
  switch (kind) {
    case SolverStatus::Kind::Optimal: return "optimal";
    case SolverStatus::Kind::Incumbent: return "incumbent";
    case SolverStatus::Kind::NotApplicable: return "not_applicable";
  }
  return "unknown";
}

AssignmentReport make_report(Assignment assignment, const PredictionMatrix& p, const CostMatrix& c,
                             SolverStatus status) {
  if (assignment.choice.size() != p.queries()) throw InputError("assignment does not cover the batch");
  AssignmentReport report;
  report.per_query.reserve(assignment.choice.size());
  for (std::size_t j = 0; j < assignment.choice.size(); ++j) {
    QueryOutcome row{j, assignment.choice[j], 0.0, 0.0};
    if (row.model) {
      if (*row.model >= p.models()) throw InputError("assignment references model index out of range");
      row.p = p(*row.model, j);
      row.cost = c(*row.model, j);
      report.predicted_total_performance += row.p;
      report.estimated_total_cost += row.cost;
    }
    report.per_query.push_back(row);
  }
  report.assignment = std::move(assignment);
  report.solver_status = std::move(status);
  return report;
}

AssignmentReport assign_single_model(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                                     const std::string& model_id) {
  check_shapes(reg, p, c);
  const auto model = reg.require_index(model_id);
  return make_report(Assignment{std::vector<std::optional<std::size_t>>(p.queries(), model)}, p, c);
}

AssignmentReport assign_performance_max(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c) {
  check_shapes(reg, p, c);
  Assignment a;
  for (std::size_t j = 0; j < p.queries(); ++j) a.choice.emplace_back(best_predicted(reg, p, c, j));
  return make_report(std::move(a), p, c);
}

AssignmentReport assign_threshold(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                                  double threshold, Fallback fallback) {
  check_shapes(reg, p, c);
  validate(Threshold{threshold, fallback});
  const auto fallback_model = fallback == Fallback::Smallest ? reg.smallest() : reg.largest();
  Assignment a;
  for (std::size_t j = 0; j < p.queries(); ++j) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < reg.size(); ++i) {
      if (p(i, j) < threshold) continue;
      if (!best || c(i, j) < c(*best, j) || (c(i, j) == c(*best, j) && reg[i].size_rank < reg[*best].size_rank)) {
        best = i;
      }
    }
    a.choice.emplace_back(best.value_or(fallback_model));
  }
  return make_report(std::move(a), p, c);
}

AssignmentReport assign_greedy(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                               double budget_usd) {
  check_shapes(reg, p, c);
  validate(Greedy{budget_usd});
  Assignment a{std::vector<std::optional<std::size_t>>(p.queries())};
  double spent = 0.0;
  for (std::size_t j = 0; j < p.queries(); ++j) {
    const auto model = best_predicted(reg, p, c, j);
    if (spent + c(model, j) > budget_usd) break;
    spent += c(model, j);
    a.choice[j] = model;
  }
  return make_report(std::move(a), p, c);
}

mckp::Instance to_mckp(const PredictionMatrix& p, const CostMatrix& c, mckp::Direction direction) {
  mckp::Instance instance;
  instance.direction = direction;
  instance.groups.resize(p.queries());
  for (std::size_t j = 0; j < p.queries(); ++j) {
    auto& group = instance.groups[j];
    group.reserve(p.models());
    for (std::size_t i = 0; i < p.models(); ++i) group.push_back({static_cast<int>(i), c(i, j), p(i, j)});
  }
  return instance;
}

AssignmentReport assign_cost_ilp(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                                 const CostIlp& params) {
  check_shapes(reg, p, c);
  validate(params);
  const auto solution = mckp::solve(to_mckp(p, c, mckp::MaxValueUnderCostCap{params.budget_usd}),
                                    {params.time_limit, params.tolerance});
  return make_report(to_assignment(solution), p, c, status_of(solution));
}

AssignmentReport assign_perf_ilp(const ModelRegistry& reg, const PredictionMatrix& p, const CostMatrix& c,
                                 const PerfIlp& params) {
  check_shapes(reg, p, c);
  validate(params);
  const auto solution = mckp::solve(to_mckp(p, c, mckp::MinCostOverValueFloor{params.min_total_performance}),
                                    {params.time_limit, params.tolerance});
  return make_report(to_assignment(solution), p, c, status_of(solution));
}

AssignmentReport route(const StrategySpec& spec, const ModelRegistry& reg, const PredictionMatrix& p,
                       const CostMatrix& c) {
  return std::visit(
      [&](const auto& s) -> AssignmentReport {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SingleModel>) return assign_single_model(reg, p, c, s.model_id);
        else if constexpr (std::is_same_v<T, PerformanceMax>) return assign_performance_max(reg, p, c);
        else if constexpr (std::is_same_v<T, Threshold>) return assign_threshold(reg, p, c, s.threshold, s.fallback);
        else if constexpr (std::is_same_v<T, Greedy>) return assign_greedy(reg, p, c, s.budget_usd);
        else if constexpr (std::is_same_v<T, CostIlp>) return assign_cost_ilp(reg, p, c, s);
        else return assign_perf_ilp(reg, p, c, s);
      },
      spec);
}

}  // namespace lmroute
