#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "lmroute/error.hpp"
#include "lmroute/strategies.hpp"

using namespace lmroute;
using std::optional;
using std::size_t;

namespace {

// k models with the given ranks and unit prices; p and c are given model-major.
struct Small {
  ModelRegistry reg;
  PredictionMatrix p;
  CostMatrix c;
};

Small small(std::vector<int> ranks, std::vector<double> p, std::vector<double> c) {
  std::vector<ModelSpec> specs;
  for (size_t i = 0; i < ranks.size(); ++i) specs.push_back({"m" + std::to_string(i), 1.0, 0.0, ranks[i]});
  const size_t m = p.size() / ranks.size();
  return {ModelRegistry(std::move(specs)), PredictionMatrix(ranks.size(), m, std::move(p)),
          CostMatrix(ranks.size(), m, std::move(c))};
}

using Choice = std::vector<optional<size_t>>;

}  // namespace

TEST_CASE("assign_single_model") {
  const auto f = testing::micro_fixture();
  const auto r = assign_single_model(f.reg, f.p, f.c, "large");
  CHECK(r.assignment.choice == Choice{1, 1});
  CHECK(r.predicted_total_performance == doctest::Approx(1.5));
  CHECK(r.estimated_total_cost == doctest::Approx(8.0));
  CHECK(r.solver_status.kind == SolverStatus::Kind::NotApplicable);
  CHECK_THROWS_AS(assign_single_model(f.reg, f.p, f.c, "nope"), InputError);
}

TEST_CASE("assign_performance_max tie-breaks") {
  {
    auto s = small({0, 1}, {0.2, 0.9}, {1, 1});
    CHECK(assign_performance_max(s.reg, s.p, s.c).assignment.choice == Choice{1});
  }
  {
    auto s = small({0, 1}, {0.7, 0.7}, {1, 4});
    CHECK(assign_performance_max(s.reg, s.p, s.c).assignment.choice == Choice{0});
  }
  {
    auto s = small({0, 1}, {0.7, 0.7}, {4, 1});
    CHECK(assign_performance_max(s.reg, s.p, s.c).assignment.choice == Choice{1});
  }
  {
    auto s = small({1, 0}, {0.7, 0.7}, {2, 2});
    CHECK(assign_performance_max(s.reg, s.p, s.c).assignment.choice == Choice{1});
  }
}

TEST_CASE("assign_threshold") {
  {
    auto s = small({0, 1}, {0.9, 0.8}, {1, 10});
    CHECK(assign_threshold(s.reg, s.p, s.c, 0.5, Fallback::Smallest).assignment.choice == Choice{0});
  }
  {
    auto s = small({0, 1}, {0.1, 0.2}, {1, 10});
    CHECK(assign_threshold(s.reg, s.p, s.c, 0.5, Fallback::Largest).assignment.choice == Choice{1});
    CHECK(assign_threshold(s.reg, s.p, s.c, 0.5, Fallback::Smallest).assignment.choice == Choice{0});
  }
  {
    auto s = small({1, 0}, {0.6, 0.6}, {3, 3});
    CHECK(assign_threshold(s.reg, s.p, s.c, 0.5, Fallback::Smallest).assignment.choice == Choice{1});
  }
  {
    // Qualifying means p >= threshold.
    auto s = small({0, 1}, {0.5, 0.9}, {1, 2});
    CHECK(assign_threshold(s.reg, s.p, s.c, 0.5, Fallback::Largest).assignment.choice == Choice{0});
  }
  auto s = small({0, 1}, {0.5, 0.9}, {1, 2});
  CHECK_THROWS_AS(assign_threshold(s.reg, s.p, s.c, 1.5, Fallback::Largest), InputError);
}

TEST_CASE("assign_greedy") {
  const auto f = testing::micro_fixture();
  SUBCASE("unconstrained equals perfmax") {
    CHECK(assign_greedy(f.reg, f.p, f.c, 100).assignment == assign_performance_max(f.reg, f.p, f.c).assignment);
  }
  SUBCASE("zero budget") {
    const auto r = assign_greedy(f.reg, f.p, f.c, 0);
    CHECK(r.assignment.assigned_count() == 0);
    CHECK(r.estimated_total_cost == 0.0);
  }
  SUBCASE("hard stop") {
    auto s = small({0}, {0.5, 0.5}, {3, 3});
    CHECK(assign_greedy(s.reg, s.p, s.c, 4).assignment.choice == Choice{0, std::nullopt});
    // A later cheap query is not picked up after the stop.
    auto t = small({0}, {0.5, 0.5, 0.5}, {1, 5, 1});
    CHECK(assign_greedy(t.reg, t.p, t.c, 4).assignment.choice == Choice{0, std::nullopt, std::nullopt});
  }
  CHECK_THROWS_AS(assign_greedy(f.reg, f.p, f.c, -1), InputError);
}

TEST_CASE("ILP strategies on the worked instance") {
  const auto f = testing::micro_fixture();
  {
    const auto r = assign_cost_ilp(f.reg, f.p, f.c, {5.0});
    CHECK(r.assignment.choice == Choice{1, 0});
    CHECK(r.predicted_total_performance == doctest::Approx(1.4));
    CHECK(r.estimated_total_cost == doctest::Approx(5.0));
    CHECK(r.solver_status.kind == SolverStatus::Kind::Optimal);
    REQUIRE(r.solver_status.stats.has_value());
  }
  {
    const auto r = assign_cost_ilp(f.reg, f.p, f.c, {0.0});
    CHECK(r.assignment.assigned_count() == 0);
    CHECK(r.predicted_total_performance == 0.0);
  }
  {
    const auto r = assign_cost_ilp(f.reg, f.p, f.c, {100.0});
    CHECK(r.predicted_total_performance ==
          doctest::Approx(assign_performance_max(f.reg, f.p, f.c).predicted_total_performance));
  }
  {
    const auto r = assign_perf_ilp(f.reg, f.p, f.c, {1.4});
    CHECK(r.estimated_total_cost == doctest::Approx(5.0));
    CHECK(r.assignment.choice == Choice{1, 0});
  }
  {
    const auto r = assign_perf_ilp(f.reg, f.p, f.c, {0.7});
    CHECK(r.estimated_total_cost == doctest::Approx(2.0));
    CHECK(r.predicted_total_performance == doctest::Approx(0.7));
    CHECK(r.assignment.choice == Choice{0, 0});
  }
  try {
    assign_perf_ilp(f.reg, f.p, f.c, {2.0});
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.attainable() == doctest::Approx(1.5));
  }
}

TEST_CASE("route dispatches and validates") {
  const auto f = testing::micro_fixture();
  CHECK(route(SingleModel{"small"}, f.reg, f.p, f.c).assignment.choice == Choice{0, 0});
  CHECK(route(PerformanceMax{}, f.reg, f.p, f.c).assignment.choice == Choice{1, 1});
  CHECK(route(CostIlp{5.0}, f.reg, f.p, f.c).predicted_total_performance == doctest::Approx(1.4));
  CHECK(strategy_name(PerfIlp{}) == "perf-ilp");
  CHECK(strategy_name(Threshold{}) == "threshold");
  CHECK_THROWS_AS(validate(Greedy{-1}), InputError);
  CHECK_THROWS_AS(validate(PerfIlp{-0.5}), InputError);
  CHECK_THROWS_AS(validate(Threshold{-0.1}), InputError);
  CHECK_NOTHROW(validate(CostIlp{0.0}));
}

TEST_CASE("strategy invariants on synthetic pools") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto f = testing::synthetic_fixture(seed, 60);
    const auto pmax = assign_performance_max(f.reg, f.p, f.c);
    const double full = pmax.estimated_total_cost;
    double previous = -1.0;
    for (int step = 0; step <= 10; ++step) {
      const double budget = full * step / 10.0;
      const auto g = assign_greedy(f.reg, f.p, f.c, budget);
      const auto ilp = assign_cost_ilp(f.reg, f.p, f.c, {budget});
      CAPTURE(seed);
      CAPTURE(budget);
      CHECK(g.estimated_total_cost <= budget + 1e-9);
      CHECK(ilp.estimated_total_cost <= budget + 1e-9);
      CHECK(ilp.predicted_total_performance + 1e-9 >= g.predicted_total_performance);
      CHECK(ilp.predicted_total_performance + 1e-9 >= previous);
      previous = ilp.predicted_total_performance;
      for (const auto& c : ilp.assignment.choice) {
        if (c) CHECK(*c < f.reg.size());
      }
    }
    CHECK(previous == doctest::Approx(pmax.predicted_total_performance));

    const double target = 0.6 * pmax.predicted_total_performance;
    const auto floor = assign_perf_ilp(f.reg, f.p, f.c, {target});
    CHECK(floor.predicted_total_performance + 1e-9 >= target);
    CHECK(floor.estimated_total_cost <= pmax.estimated_total_cost + 1e-9);
  }
}

TEST_CASE("routing ignores dataset and task tags") {
  const auto f = testing::synthetic_fixture(9, 40);
  auto retagged = f.batch;
  for (auto& q : retagged) {
    q.dataset = "other";
    q.task.reset();
  }
  const auto c2 = build_cost_matrix(f.reg, retagged);
  CHECK(c2 == f.c);
  CHECK(assign_cost_ilp(f.reg, f.p, c2, {0.01}).assignment == assign_cost_ilp(f.reg, f.p, f.c, {0.01}).assignment);
}
