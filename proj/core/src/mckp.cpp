#include "lmroute/mckp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "lmroute/error.hpp"

namespace lmroute::mckp {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Non-dominated options of one group by ascending cost; values strictly
// increase along the front and all exceed the null option's 0.
std::vector<Option> pareto_front(std::span<const Option> options) {
  std::vector<Option> sorted(options.begin(), options.end());
  std::sort(sorted.begin(), sorted.end(), [](const Option& a, const Option& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.value != b.value) return a.value > b.value;
    return a.id < b.id;
  });
  std::vector<Option> front;
  double best = 0.0;
  for (const auto& o : sorted) {
    if (o.value > best) {
      front.push_back(o);
      best = o.value;
    }
  }
  return front;
}

struct Increment {
  std::size_t group = 0;
  std::size_t step = 0;
  double dcost = 0.0;
  double dvalue = 0.0;
  double efficiency = 0.0;
  int end_id = kNullOption;
};

// Upper concave hull from the origin through a Pareto front, as increments.
void append_hull_increments(std::size_t group, const std::vector<Option>& front, std::vector<Increment>& out) {
  struct Point {
    double cost, value;
    int id;
  };
  std::vector<Point> hull{{0.0, 0.0, kNullOption}};
  for (const auto& o : front) {
    const Point p{o.cost, o.value, o.id};
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.cost - a.cost) * (p.value - a.value) - (b.value - a.value) * (p.cost - a.cost);
      if (cross < 0.0) break;
      hull.pop_back();
    }
    hull.push_back(p);
  }
  double previous = kInf;
  for (std::size_t t = 1; t < hull.size(); ++t) {
    Increment inc;
    inc.group = group;
    inc.step = t;
    inc.dcost = hull[t].cost - hull[t - 1].cost;
    inc.dvalue = hull[t].value - hull[t - 1].value;
    inc.efficiency = inc.dcost > 0.0 ? inc.dvalue / inc.dcost : kInf;
    // Division can round a nearly collinear pair out of order.
    inc.efficiency = std::min(inc.efficiency, previous);
    previous = inc.efficiency;
    inc.end_id = hull[t].id;
    out.push_back(inc);
  }
}

// LP relaxation over the hulls of groups at positions >= depth, plus greedy
// integral completions used as incumbents.
class Relaxation {
 public:
  explicit Relaxation(const std::vector<std::vector<Option>>& fronts) : blocked_(fronts.size(), 0) {
    for (std::size_t g = 0; g < fronts.size(); ++g) append_hull_increments(g, fronts[g], increments_);
    std::sort(increments_.begin(), increments_.end(), [](const Increment& a, const Increment& b) {
      if (a.efficiency != b.efficiency) return a.efficiency > b.efficiency;
      if (a.group != b.group) return a.group < b.group;
      return a.step < b.step;
    });
  }

  // Extra value reachable with the remaining capacity.
  double max_value(std::size_t depth, double capacity) const {
    capacity = std::max(capacity, 0.0);
    double value = 0.0;
    for (const auto& inc : increments_) {
      if (inc.group < depth) continue;
      if (inc.dcost <= capacity) {
        capacity -= inc.dcost;
        value += inc.dvalue;
      } else {
        value += inc.dvalue * (capacity / inc.dcost);
        break;
      }
    }
    return value;
  }

  // Extra cost needed to gain `need` more value; +inf when unreachable.
  double min_cost(std::size_t depth, double need, double tolerance) const {
    double cost = 0.0;
    for (const auto& inc : increments_) {
      if (need <= tolerance) break;
      if (inc.group < depth) continue;
      if (inc.dvalue <= need) {
        need -= inc.dvalue;
        cost += inc.dcost;
      } else {
        cost += inc.dcost * (need / inc.dvalue);
        need = 0.0;
      }
    }
    return need <= tolerance ? cost : kInf;
  }

  // Lagrange multiplier of the cost row at the LP optimum: the efficiency of
  // the increment the fill stops in, 0 when everything fits.
  double cost_multiplier(double capacity) const {
    capacity = std::max(capacity, 0.0);
    for (const auto& inc : increments_) {
      if (inc.dcost > capacity) return inc.efficiency;
      capacity -= inc.dcost;
    }
    return 0.0;
  }

  // Cost per unit of value at the LP optimum of the floor problem; nullopt
  // when the floor is out of reach.
  std::optional<double> value_multiplier(double need, double tolerance) const {
    if (need <= tolerance) return 0.0;
    for (const auto& inc : increments_) {
      need -= inc.dvalue;
      if (need <= tolerance) return std::isinf(inc.efficiency) ? 0.0 : 1.0 / inc.efficiency;
    }
    return std::nullopt;
  }

  // Takes every increment that still fits, skipping the rest of a group once
  // one of its increments does not. Writes vertex ids into completion[depth..].
  double greedy_max(std::size_t depth, double capacity, std::vector<int>& completion) {
    capacity = std::max(capacity, 0.0);
    std::fill(blocked_.begin() + static_cast<std::ptrdiff_t>(depth), blocked_.end(), 0);
    std::fill(completion.begin() + static_cast<std::ptrdiff_t>(depth), completion.end(), kNullOption);
    double value = 0.0;
    for (const auto& inc : increments_) {
      if (inc.group < depth || blocked_[inc.group]) continue;
      if (inc.dcost <= capacity) {
        capacity -= inc.dcost;
        value += inc.dvalue;
        completion[inc.group] = inc.end_id;
      } else {
        blocked_[inc.group] = 1;
      }
    }
    return value;
  }

  // LP order with the last increment rounded up; +inf when unreachable.
  double greedy_min(std::size_t depth, double need, double tolerance, std::vector<int>& completion) const {
    std::fill(completion.begin() + static_cast<std::ptrdiff_t>(depth), completion.end(), kNullOption);
    double cost = 0.0;
    for (const auto& inc : increments_) {
      if (need <= tolerance) break;
      if (inc.group < depth) continue;
      need -= inc.dvalue;
      cost += inc.dcost;
      completion[inc.group] = inc.end_id;
    }
    return need <= tolerance ? cost : kInf;
  }

 private:
  std::vector<Increment> increments_;
  std::vector<char> blocked_;
};

// 1-opt descent for the floor problem over per-group fronts: repeatedly move
// one group to its cheapest option that keeps the floor. Picks are option ids
// (or kNullOption) per group; returns the resulting cost, +inf if the floor
// is missed and no single change reaches it.
double improve_min(const std::vector<std::vector<Option>>& fronts, double floor, double tolerance,
                   std::vector<int>& picks) {
  const auto count = fronts.size();
  std::vector<Option> current(count, Option{kNullOption, 0.0, 0.0});
  double cost = 0.0;
  double value = 0.0;
  for (std::size_t g = 0; g < count; ++g) {
    for (const auto& o : fronts[g]) {
      if (o.id == picks[g]) current[g] = o;
    }
    cost += current[g].cost;
    value += current[g].value;
  }
  auto apply = [&](std::size_t g, const Option& o) {
    cost += o.cost - current[g].cost;
    value += o.value - current[g].value;
    current[g] = o;
    picks[g] = o.id;
  };

  if (value < floor - tolerance) {
    std::optional<std::pair<std::size_t, Option>> cheapest;
    double cheapest_cost = kInf;
    for (std::size_t g = 0; g < count; ++g) {
      for (const auto& o : fronts[g]) {
        const double c = cost - current[g].cost + o.cost;
        if (value - current[g].value + o.value >= floor - tolerance && c < cheapest_cost) {
          cheapest_cost = c;
          cheapest.emplace(g, o);
        }
      }
    }
    if (!cheapest) return kInf;
    apply(cheapest->first, cheapest->second);
  }

  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t g = 0; g < count; ++g) {
      const double slack = value - current[g].value - (floor - tolerance);
      Option best = current[g];
      if (slack >= 0.0 && best.cost > 0.0) best = Option{kNullOption, 0.0, 0.0};
      for (const auto& o : fronts[g]) {
        if (o.value >= -slack && o.cost < best.cost) best = o;
      }
      if (best.cost < current[g].cost) {
        apply(g, best);
        changed = true;
      }
    }
  }
  return cost;
}

const Option* find_option(const std::vector<Option>& group, int id) {
  auto it = std::find_if(group.begin(), group.end(), [&](const Option& o) { return o.id == id; });
  return it == group.end() ? nullptr : &*it;
}

template <class Fn>
double sum_over_picks(const Instance& instance, std::span<const int> picks, Fn&& field) {
  if (picks.size() != instance.groups.size()) {
    throw InputError("expected " + std::to_string(instance.groups.size()) + " picks, got " +
                     std::to_string(picks.size()));
  }
  double total = 0.0;
  for (std::size_t g = 0; g < picks.size(); ++g) {
    if (picks[g] == kNullOption) continue;
    const auto* o = find_option(instance.groups[g], picks[g]);
    if (!o) throw InputError("group " + std::to_string(g) + " has no option " + std::to_string(picks[g]));
    total += field(*o);
  }
  return total;
}

class Search {
 public:
  Search(const Instance& instance, const SolveOptions& options, Clock::time_point start)
      : instance_(instance), options_(options), start_(start) {
    const auto count = instance.groups.size();
    std::vector<std::vector<Option>> fronts(count);
    for (std::size_t g = 0; g < count; ++g) {
      fronts[g] = pareto_front(instance.groups[g]);
      if (!fronts[g].empty()) attainable_ += fronts[g].back().value;
    }
    if (instance.maximizing()) {
      limit_ = std::get<MaxValueUnderCostCap>(instance.direction).cap;
      incumbent_ = 0.0;
    } else {
      limit_ = std::get<MinCostOverValueFloor>(instance.direction).floor;
      if (attainable_ < limit_ - options.tolerance) throw InfeasibleError(limit_, attainable_);
      incumbent_ = kInf;
    }
    best_picks_.assign(count, kNullOption);

    Relaxation root(fronts);
    const double greedy = instance.maximizing()
                              ? root.greedy_max(0, limit_, best_picks_)
                              : (root.greedy_min(0, limit_, options.tolerance, best_picks_),
                                 improve_min(fronts, limit_, options.tolerance, best_picks_));
    if (std::isfinite(greedy)) {
      incumbent_ = greedy;
      ++stats_.incumbent_updates;
    } else {
      std::fill(best_picks_.begin(), best_picks_.end(), kNullOption);
    }

    multiplier_ = instance.maximizing() ? std::optional<double>(root.cost_multiplier(limit_))
                                        : root.value_multiplier(limit_, options.tolerance);
    auto candidates = reduce(fronts);
    fixed_picks_.assign(count, kNullOption);
    std::vector<std::size_t> free_groups;
    for (std::size_t g = 0; g < count; ++g) {
      if (candidates[g].empty()) {
        // No option of this group leads past the incumbent, so nothing does.
        settled_ = true;
      } else if (candidates[g].size() == 1) {
        fixed_picks_[g] = candidates[g].front().id;
        base_cost_ += candidates[g].front().cost;
        base_value_ += candidates[g].front().value;
        ++stats_.groups_fixed;
      } else {
        free_groups.push_back(g);
      }
    }

    // Candidates are a cost-ascending subsequence of the front, null option last.
    auto best_value = [&](std::size_t g) { return candidates[g].front().id == kNullOption ? 0.0 : fronts[g].back().value; };
    std::stable_sort(free_groups.begin(), free_groups.end(),
                     [&](std::size_t a, std::size_t b) { return best_value(a) > best_value(b); });
    order_ = free_groups;
    std::vector<std::vector<Option>> ordered(order_.size());
    branches_.resize(order_.size());
    for (std::size_t pos = 0; pos < order_.size(); ++pos) {
      for (const auto& o : candidates[order_[pos]]) {
        if (o.id != kNullOption) ordered[pos].push_back(o);
      }
      branches_[pos].assign(ordered[pos].rbegin(), ordered[pos].rend());
      if (candidates[order_[pos]].back().id == kNullOption) branches_[pos].push_back(Option{kNullOption, 0.0, 0.0});
      if (multiplier_) {
        std::stable_sort(branches_[pos].begin(), branches_[pos].end(),
                         [&](const Option& a, const Option& b) { return better_reduced(a, b); });
      }
    }
    relaxation_.emplace(ordered);
    path_.assign(order_.size(), kNullOption);
    completion_.assign(order_.size(), kNullOption);
  }

  Solution run() {
    const auto count = order_.size();
    bool timed_out = false;
    const bool fixed_fit = !instance_.maximizing() || base_cost_ <= limit_ + options_.tolerance;
    if (!settled_ && fixed_fit) {
      if (auto root = evaluate(0, base_cost_, base_value_); root && count > 0) {
        stack_.push_back({0, 0, base_cost_, base_value_, *root});
      }
    }

    while (!stack_.empty()) {
      if (options_.time_limit && Clock::now() - start_ >= *options_.time_limit) {
        timed_out = true;
        break;
      }
      auto& frame = stack_.back();
      if (frame.next >= branches_[frame.depth].size() || !promising(frame.bound)) {
        stack_.pop_back();
        continue;
      }
      const auto& option = branches_[frame.depth][frame.next++];
      const double cost = frame.cost + option.cost;
      const double value = frame.value + option.value;
      if (instance_.maximizing() && cost > limit_ + options_.tolerance) {
        ++stats_.pruned_by_capacity;
        continue;
      }
      const auto depth = frame.depth + 1;
      path_[frame.depth] = option.id;
      if (auto bound = evaluate(depth, cost, value); bound && depth < count) {
        stack_.push_back({depth, 0, cost, value, *bound});
      }
    }

    // Rounding can leave the floor unreachable through the hulls even though
    // the per-group maxima sum to it.
    if (!std::isfinite(incumbent_)) throw InfeasibleError(limit_, attainable_);

    Solution solution;
    solution.picks = best_picks_;
    solution.objective = instance_.maximizing() ? total_value(instance_, solution.picks)
                                                : total_cost(instance_, solution.picks);
    if (timed_out) {
      solution.status = SolveStatus::Incumbent;
      solution.bound = solution.objective;
      for (const auto& f : stack_) {
        solution.bound = instance_.maximizing() ? std::max(solution.bound, f.bound) : std::min(solution.bound, f.bound);
      }
    } else {
      solution.status = SolveStatus::Optimal;
      solution.bound = solution.objective;
    }
    stats_.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    solution.stats = stats_;
    return solution;
  }

 private:
  struct Frame {
    std::size_t depth;
    std::size_t next;
    double cost;
    double value;
    double bound;
  };

  // Reduced-cost fixing at the root. With the LP multiplier of the coupling
  // row, the Lagrangian bound of forcing option o into group g is
  // L - best_g + r_o; options whose bound cannot beat the incumbent by more
  // than the tolerance are dropped. Survivors per group, null option last.
  std::vector<std::vector<Option>> reduce(const std::vector<std::vector<Option>>& fronts) const {
    const auto count = fronts.size();
    std::vector<std::vector<Option>> kept(count);
    const Option null_option{kNullOption, 0.0, 0.0};
    if (!multiplier_ || !std::isfinite(incumbent_)) {
      for (std::size_t g = 0; g < count; ++g) {
        kept[g] = fronts[g];
        kept[g].push_back(null_option);
      }
      return kept;
    }
    const bool maximizing = instance_.maximizing();

    std::vector<double> best(count, 0.0);
    double lagrangian = *multiplier_ * limit_;
    for (std::size_t g = 0; g < count; ++g) {
      for (const auto& o : fronts[g]) best[g] = maximizing ? std::max(best[g], reduced(o)) : std::min(best[g], reduced(o));
      lagrangian += best[g];
    }
    for (std::size_t g = 0; g < count; ++g) {
      auto survives = [&](const Option& o) { return promising(lagrangian - best[g] + reduced(o)); };
      for (const auto& o : fronts[g]) {
        if (survives(o)) kept[g].push_back(o);
      }
      if (survives(null_option)) kept[g].push_back(null_option);
    }
    return kept;
  }

  // Reduced profit (max direction) or reduced cost (min direction) of an
  // option under the root LP multiplier.
  double reduced(const Option& o) const {
    return instance_.maximizing() ? o.value - *multiplier_ * o.cost : o.cost - *multiplier_ * o.value;
  }

  bool better_reduced(const Option& a, const Option& b) const {
    return instance_.maximizing() ? reduced(a) > reduced(b) : reduced(a) < reduced(b);
  }

  bool promising(double bound) const {
    return instance_.maximizing() ? bound > incumbent_ + options_.tolerance
                                  : bound < incumbent_ - options_.tolerance;
  }

  void adopt(std::size_t depth, double objective) {
    incumbent_ = objective;
    best_picks_ = fixed_picks_;
    for (std::size_t pos = 0; pos < order_.size(); ++pos) best_picks_[order_[pos]] = pos < depth ? path_[pos] : completion_[pos];
    ++stats_.incumbent_updates;
  }

  // Bound of the node whose first `depth` groups are fixed by path_, or
  // nullopt when it cannot beat the incumbent. Also tries a greedy completion.
  std::optional<double> evaluate(std::size_t depth, double cost, double value) {
    ++stats_.nodes;
    double bound = 0.0;
    if (instance_.maximizing()) {
      const double room = limit_ - cost;
      bound = value + relaxation_->max_value(depth, room);
      if (!promising(bound)) {
        ++stats_.pruned_by_bound;
        return std::nullopt;
      }
      const double greedy = value + relaxation_->greedy_max(depth, room, completion_);
      if (greedy > incumbent_) adopt(depth, greedy);
    } else {
      const double need = limit_ - value;
      bound = cost + relaxation_->min_cost(depth, need, options_.tolerance);
      if (!promising(bound)) {
        ++stats_.pruned_by_bound;
        return std::nullopt;
      }
      const double greedy = cost + relaxation_->greedy_min(depth, need, options_.tolerance, completion_);
      if (greedy < incumbent_) adopt(depth, greedy);
    }
    if (!promising(bound)) {
      ++stats_.pruned_by_bound;
      return std::nullopt;
    }
    return bound;
  }

  const Instance& instance_;
  const SolveOptions& options_;
  Clock::time_point start_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<Option>> branches_;
  std::optional<Relaxation> relaxation_;
  double attainable_ = 0.0;
  double limit_ = 0.0;
  double incumbent_ = 0.0;
  std::vector<int> best_picks_;
  std::vector<int> fixed_picks_;  // per group; free groups stay null
  double base_cost_ = 0.0;
  double base_value_ = 0.0;
  bool settled_ = false;
  std::optional<double> multiplier_;
  std::vector<int> path_;
  std::vector<int> completion_;
  std::vector<Frame> stack_;
  SearchStats stats_;
};

}  // namespace

void Instance::validate() const {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::unordered_set<int> ids;
    for (const auto& o : groups[g]) {
      if (o.id < 0) throw InputError("group " + std::to_string(g) + ": option ids must be >= 0");
      if (!ids.insert(o.id).second) {
        throw InputError("group " + std::to_string(g) + ": duplicate option id " + std::to_string(o.id));
      }
      if (!std::isfinite(o.cost) || o.cost < 0.0 || !std::isfinite(o.value) || o.value < 0.0) {
        throw InputError("group " + std::to_string(g) + ", option " + std::to_string(o.id) +
                         ": cost and value must be finite and >= 0");
      }
    }
  }
  const double limit = std::visit([](const auto& d) {
    if constexpr (std::is_same_v<std::decay_t<decltype(d)>, MaxValueUnderCostCap>) return d.cap;
    else return d.floor;
  }, direction);
  if (!std::isfinite(limit) || limit < 0.0) throw InputError("cost cap / value floor must be finite and >= 0");
}

Instance prune_dominated(const Instance& instance) {
  instance.validate();
  Instance pruned{{}, instance.direction};
  pruned.groups.reserve(instance.groups.size());
  for (const auto& group : instance.groups) {
    const auto front = pareto_front(group);
    std::vector<Option> kept;
    for (const auto& o : group) {
      if (std::any_of(front.begin(), front.end(), [&](const Option& f) { return f.id == o.id; })) kept.push_back(o);
    }
    pruned.groups.push_back(std::move(kept));
  }
  return pruned;
}

double lp_bound(const Instance& instance, std::span<const int> prefix_decisions, double tolerance) {
  instance.validate();
  const auto count = instance.groups.size();
  if (prefix_decisions.size() > count) throw InputError("more decisions than groups");

  std::vector<std::vector<Option>> fronts(count);
  for (std::size_t g = 0; g < count; ++g) fronts[g] = pareto_front(instance.groups[g]);
  const Relaxation relaxation(fronts);

  double cost = 0.0;
  double value = 0.0;
  for (std::size_t g = 0; g < prefix_decisions.size(); ++g) {
    if (prefix_decisions[g] == kNullOption) continue;
    const auto* o = find_option(instance.groups[g], prefix_decisions[g]);
    if (!o) throw InputError("group " + std::to_string(g) + " has no option " + std::to_string(prefix_decisions[g]));
    cost += o->cost;
    value += o->value;
  }
  const auto depth = prefix_decisions.size();
  if (const auto* max = std::get_if<MaxValueUnderCostCap>(&instance.direction)) {
    if (cost > max->cap + tolerance) return -kInf;
    return value + relaxation.max_value(depth, max->cap - cost);
  }
  const auto& min = std::get<MinCostOverValueFloor>(instance.direction);
  return cost + relaxation.min_cost(depth, min.floor - value, tolerance);
}

Solution solve(const Instance& instance, const SolveOptions& options) {
  const auto start = Clock::now();
  instance.validate();
  if (!(options.tolerance >= 0.0)) throw InputError("tolerance must be >= 0");
  Search search(instance, options, start);
  return search.run();
}

double total_cost(const Instance& instance, std::span<const int> picks) {
  return sum_over_picks(instance, picks, [](const Option& o) { return o.cost; });
}

double total_value(const Instance& instance, std::span<const int> picks) {
  return sum_over_picks(instance, picks, [](const Option& o) { return o.value; });
}

bool is_feasible(const Instance& instance, std::span<const int> picks, double tolerance) {
  try {
    if (const auto* max = std::get_if<MaxValueUnderCostCap>(&instance.direction)) {
      return total_cost(instance, picks) <= max->cap + tolerance;
    }
    return total_value(instance, picks) >= std::get<MinCostOverValueFloor>(instance.direction).floor - tolerance;
  } catch (const InputError&) {
    return false;
  }
}

std::string describe(const Solution& solution) {
  std::ostringstream out;
  out << "status=" << (solution.status == SolveStatus::Optimal ? "optimal" : "incumbent")
      << " objective=" << solution.objective << " bound=" << solution.bound
      << " gap=" << std::abs(solution.bound - solution.objective) << " nodes=" << solution.stats.nodes
      << " pruned_bound=" << solution.stats.pruned_by_bound
      << " pruned_capacity=" << solution.stats.pruned_by_capacity
      << " groups_fixed=" << solution.stats.groups_fixed
      << " incumbent_updates=" << solution.stats.incumbent_updates << " elapsed_ms=" << solution.stats.elapsed_ms;
  return out.str();
}

}  // namespace lmroute::mckp
