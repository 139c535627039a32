#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

// Exact solver for multiple-choice knapsack problems with one resource row:
// each group picks at most one option (or the implicit null option at cost 0,
// value 0) and a single cost cap or value floor couples the groups.
namespace lmroute::mckp {

inline constexpr int kNullOption = -1;
inline constexpr double kDefaultTolerance = 1e-9;

struct Option {
  int id = 0;  // >= 0, unique within its group
  double cost = 0.0;
  double value = 0.0;

  bool operator==(const Option&) const = default;
};

// maximize sum(value) s.t. sum(cost) <= cap
struct MaxValueUnderCostCap {
  double cap = 0.0;
};

// minimize sum(cost) s.t. sum(value) >= floor
struct MinCostOverValueFloor {
  double floor = 0.0;
};

using Direction = std::variant<MaxValueUnderCostCap, MinCostOverValueFloor>;

struct Instance {
  std::vector<std::vector<Option>> groups;
  Direction direction = MaxValueUnderCostCap{};

  // Throws InputError on negative or non-finite data, or duplicate/negative ids.
  void validate() const;

  bool maximizing() const noexcept { return std::holds_alternative<MaxValueUnderCostCap>(direction); }
};

enum class SolveStatus { Optimal, Incumbent };

struct SearchStats {
  std::uint64_t nodes = 0;
  std::uint64_t pruned_by_bound = 0;
  std::uint64_t pruned_by_capacity = 0;
  std::uint64_t incumbent_updates = 0;
  std::uint64_t groups_fixed = 0;  // settled before branching
  double elapsed_ms = 0.0;
};

struct Solution {
  std::vector<int> picks;  // per group, an option id or kNullOption
  double objective = 0.0;
  // Upper bound (max direction) or lower bound (min direction) on the optimum.
  double bound = 0.0;
  SolveStatus status = SolveStatus::Optimal;
  SearchStats stats;
};

struct SolveOptions {
  std::optional<std::chrono::milliseconds> time_limit;
  double tolerance = kDefaultTolerance;
};

// Removes options dominated by another option of the same group or by the
// null option (cost >= and value <= with one side strict). Of two identical
// options the lower id survives; the null option beats any (0, 0) option.
Instance prune_dominated(const Instance& instance);

// LP-relaxation bound over the convex hulls of the undecided groups, given
// option ids for the first prefix_decisions.size() groups. Upper bound for
// the max direction (-inf if the prefix already breaks the cap); lower bound
// for the min direction (+inf if the floor cannot be reached).
double lp_bound(const Instance& instance, std::span<const int> prefix_decisions,
                double tolerance = kDefaultTolerance);

// Depth-first branch and bound. Throws InfeasibleError when a value floor
// exceeds the sum of per-group maxima.
Solution solve(const Instance& instance, const SolveOptions& options = {});

double total_cost(const Instance& instance, std::span<const int> picks);
double total_value(const Instance& instance, std::span<const int> picks);

// Picks are valid ids and meet the cap/floor within tolerance.
bool is_feasible(const Instance& instance, std::span<const int> picks,
                 double tolerance = kDefaultTolerance);

std::string describe(const Solution& solution);

}  // namespace lmroute::mckp
