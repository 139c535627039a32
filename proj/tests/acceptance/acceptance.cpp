// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "brute_force.hpp"
#include "cli.hpp"
#include "fixtures.hpp"
#include "lmroute/error.hpp"
#include "lmroute/evaluation.hpp"
#include "lmroute/io.hpp"
#include "lmroute/mckp.hpp"
#include "lmroute/prediction.hpp"
#include "lmroute/registry.hpp"
#include "lmroute/strategies.hpp"
#include "pair_count.hpp"

namespace {

using namespace lmroute;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

bool same_to_12_digits(double got, double want) {
  return std::abs(got - want) <= 5e-13 * std::abs(want);
}

Verdict ilp_exactness() {
  Verdict v;
  const auto start = Clock::now();
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> m_dist(1, 8), k_dist(1, 4);
    std::uniform_real_distribution<double> cost(0.0001, 0.01), value(0.0, 1.0), frac(0.1, 1.0);
    const int m = m_dist(rng), k = k_dist(rng);
    std::vector<std::vector<mckp::Option>> groups(static_cast<std::size_t>(m));
    std::vector<std::vector<testing::BruteOption>> brute(static_cast<std::size_t>(m));
    double max_cost = 0.0, max_value = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      double gc = 0.0, gv = 0.0;
      for (int o = 0; o < k; ++o) {
        const double c = cost(rng), p = value(rng);
        groups[g].push_back({o, c, p});
        brute[g].push_back({c, p});
        gc = std::max(gc, c);
        gv = std::max(gv, p);
      }
      max_cost += gc;
      max_value += gv;
    }
    const double cap = frac(rng) * max_cost;
    const double floor = frac(rng) * max_value;

    const auto cap_solution = mckp::solve({groups, mckp::MaxValueUnderCostCap{cap}});
    const auto cap_truth = testing::brute_max_value(brute, cap);
    const double d1 = std::abs(cap_solution.objective - cap_truth.objective);

    const auto floor_solution = mckp::solve({groups, mckp::MinCostOverValueFloor{floor}});
    const auto floor_truth = testing::brute_min_cost(brute, floor);
    const double d2 = floor_truth.feasible ? std::abs(floor_solution.objective - floor_truth.objective) : 1.0;

    worst = std::max({worst, d1, d2});
    v.require(d1 <= 1e-9, fmt("seed %.0f max direction off by %.3g", static_cast<double>(seed), d1));
    v.require(d2 <= 1e-9, fmt("seed %.0f min direction off by %.3g", static_cast<double>(seed), d2));
    v.require(cap_solution.status == mckp::SolveStatus::Optimal && floor_solution.status == mckp::SolveStatus::Optimal,
              "solver did not prove optimality");
    instances += 2;
  }
  const double elapsed = seconds_since(start);
  v.require(elapsed < 10.0, fmt("took %.2f s", elapsed));
  if (v.pass) v.detail = std::to_string(instances) + " instances, max |diff| " + fmt("%.3g, %.2f s", worst, elapsed);
  return v;
}

Verdict micro_instance() {
  Verdict v;
  const auto f = testing::micro_fixture();
  const auto cap = assign_cost_ilp(f.reg, f.p, f.c, {5.0});
  v.require(std::abs(cap.predicted_total_performance - 1.4) <= 1e-9 && std::abs(cap.estimated_total_cost - 5.0) <= 1e-9,
            fmt("cost-ilp budget 5 gave value %.10g cost %.10g", cap.predicted_total_performance,
                cap.estimated_total_cost));
  const auto floor = assign_perf_ilp(f.reg, f.p, f.c, {0.7});
  v.require(std::abs(floor.estimated_total_cost - 2.0) <= 1e-9,
            fmt("perf-ilp floor 0.7 gave cost %.10g", floor.estimated_total_cost));
  try {
    assign_perf_ilp(f.reg, f.p, f.c, {2.0});
    v.require(false, "perf-ilp floor 2.0 was not infeasible");
  } catch (const InfeasibleError& e) {
    v.require(std::abs(e.attainable() - 1.5) <= 1e-9, fmt("attainable reported as %.10g", e.attainable()));
  }
  if (v.pass) v.detail = "value 1.4 at budget 5; cost 2 at floor 0.7; floor 2.0 infeasible (max 1.5)";
  return v;
}

Verdict strategy_dominance() {
  Verdict v;
  const auto start = Clock::now();
  const auto f = testing::synthetic_fixture(2024, 200);
  const double top = assign_performance_max(f.reg, f.p, f.c).estimated_total_cost;
  std::vector<double> budgets;
  for (int s = 0; s < 20; ++s) budgets.push_back(top * s / 19.0);

  double widest_gap = 0.0;
  for (double b : budgets) {
    const auto g = assign_greedy(f.reg, f.p, f.c, b);
    const auto ilp = assign_cost_ilp(f.reg, f.p, f.c, {b});
    v.require(ilp.predicted_total_performance + 1e-9 >= g.predicted_total_performance,
              fmt("budget %.6g: ilp below greedy by %.3g", b, g.predicted_total_performance - ilp.predicted_total_performance));
    widest_gap = std::max(widest_gap, ilp.predicted_total_performance - g.predicted_total_performance);
  }

  const auto perfect = testing::with_perfect_predictions(f);
  const auto curve = sweep_cost_strategies(perfect.reg, perfect.p, perfect.c, perfect.truth, budgets,
                                           CostStrategy::CostIlp);
  for (std::size_t n = 1; n < curve.size(); ++n) {
    v.require(curve[n].accuracy >= curve[n - 1].accuracy,
              fmt("accuracy fell from %.6g to %.6g", curve[n - 1].accuracy, curve[n].accuracy));
  }
  if (v.pass) {
    v.detail = fmt("20 budgets, max ilp-greedy gap %.4g; perfect-prediction accuracy 0 -> %.4g", widest_gap,
                   curve.back().accuracy) +
               fmt(", %.2f s", seconds_since(start));
  }
  return v;
}

Verdict oracle_properties() {
  Verdict v;
  const auto f = testing::synthetic_fixture(2024, 200);
  const auto oracle = oracle_assign(f.reg, f.truth, f.c);
  const double oracle_acc = realized_accuracy_cost(oracle.assignment, f.truth, f.c).accuracy;
  double best_single = 0.0;
  for (const auto& m : f.reg.models()) {
    const double acc = realized_accuracy_cost(assign_single_model(f.reg, f.p, f.c, m.id).assignment, f.truth, f.c).accuracy;
    best_single = std::max(best_single, acc);
    v.require(oracle_acc >= acc, "oracle below single model " + m.id);
  }
  const auto perfect = testing::with_perfect_predictions(f);
  std::size_t compared = 0;
  for (auto fb : {Fallback::Smallest, Fallback::Largest}) {
    const auto th = assign_threshold(perfect.reg, perfect.p, perfect.c, 0.5, fb);
    for (std::size_t j = 0; j < f.batch.size(); ++j) {
      if (!oracle.assignment.choice[j]) continue;
      ++compared;
      v.require(th.assignment.choice[j] == oracle.assignment.choice[j], "threshold differs from oracle on " + f.batch[j].id);
    }
  }
  if (v.pass) {
    v.detail = fmt("oracle accuracy %.4g >= best single %.4g", oracle_acc, best_single) + "; " +
               std::to_string(compared / 2) + " solvable queries match thresholding";
  }
  return v;
}

Verdict cost_formula() {
  Verdict v;
  const auto reg = testing::priced_registry();
  const Query q100{"q", "", 100, {}, {}};
  const Query q0{"q", "", 0, {}, {}};
  v.require(same_to_12_digits(estimate_cost(reg[3], q100), 0.0021682), "davinci-002 at 100 tokens");
  v.require(same_to_12_digits(estimate_cost(reg[0], q100), 0.00004274), "ada-001 at 100 tokens");
  v.require(estimate_cost(ModelSpec{"free", 0.0, 12.0, 0}, q100) == 0.0, "zero price");
  // avg_output x price / 1000 for a 0-token query.
  const double column[] = {2.74e-6, 3.59e-6, 1.402e-5, 1.682e-4};
  const QueryBatch batch{q0};
  const auto c = build_cost_matrix(reg, batch);
  for (std::size_t i = 0; i < reg.size(); ++i) {
    v.require(same_to_12_digits(c(i, 0), column[i]), "0-token column, model " + reg[i].id);
  }
  if (v.pass) v.detail = "6 hand values agree to 12 significant digits";
  return v;
}

Verdict metrics_exactness() {
  Verdict v;
  struct Case {
    std::vector<double> p;
    std::vector<int> y;
    double accuracy, precision, recall, f1;
  };
  // Expected values worked out from the confusion matrix of each case.
  const Case cases[] = {
      {{0.9, 0.1, 0.8, 0.7}, {1, 0, 0, 1}, 0.75, 5.0 / 6.0, 0.75, (0.8 + 2.0 / 3.0) / 2.0},
      {{1, 1}, {1, 0}, 0.5, 0.25, 0.5, 1.0 / 3.0},
      // tp 3, tn 4, fp 1, fn 2
      {{0.6, 0.7, 0.9, 0.2, 0.4, 0.1, 0.3, 0.0, 0.45, 0.55},
       {1, 1, 1, 1, 1, 0, 0, 0, 0, 0},
       0.7,
       (3.0 / 4.0 + 4.0 / 6.0) / 2.0,
       (3.0 / 5.0 + 4.0 / 5.0) / 2.0,
       (2.0 * 0.75 * 0.6 / 1.35 + 2.0 * (4.0 / 6.0) * 0.8 / (4.0 / 6.0 + 0.8)) / 2.0},
  };
  for (const auto& c : cases) {
    const auto m = meta_metrics(c.p, c.y, 0.5, AucPolicy::Omit);
    v.require(std::abs(m.meta_accuracy - c.accuracy) <= 1e-15, fmt("accuracy %.17g vs %.17g", m.meta_accuracy, c.accuracy));
    v.require(std::abs(m.macro_precision - c.precision) <= 1e-15, fmt("precision %.17g vs %.17g", m.macro_precision, c.precision));
    v.require(std::abs(m.macro_recall - c.recall) <= 1e-15, fmt("recall %.17g vs %.17g", m.macro_recall, c.recall));
    v.require(std::abs(m.macro_f1 - c.f1) <= 1e-15, fmt("f1 %.17g vs %.17g", m.macro_f1, c.f1));
  }
  v.require(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}) == 0.75, "roc_auc example");

  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> level(0, 19);
  std::vector<double> s(200);
  std::vector<int> y(200);
  for (std::size_t n = 0; n < s.size(); ++n) {
    s[n] = level(rng) / 20.0;
    y[n] = static_cast<int>(rng() % 2);
  }
  const double auc = roc_auc(s, y);
  const double pairs = testing::pair_count_auc(s, y);
  v.require(auc == pairs, fmt("roc_auc %.17g vs pair count %.17g", auc, pairs));

  std::vector<double> p;
  std::vector<int> outcome;
  const std::pair<double, int> groups[] = {{0.0, 1}, {0.125, 8}, {0.25, 4}, {0.375, 8}, {0.5, 2},
                                           {0.625, 8}, {0.75, 4}, {0.875, 8}, {1.0, 1}};
  for (const auto& [value, n] : groups) {
    const int positives = static_cast<int>(value * n);
    for (int k = 0; k < n; ++k) {
      p.push_back(value);
      outcome.push_back(k < positives ? 1 : 0);
    }
  }
  const auto curve = calibration_curve(p, outcome, 10);
  v.require(curve.bins.size() == std::size(groups), "calibrated fixture bin count");
  for (const auto& b : curve.bins) {
    v.require(b.mean_prediction == b.positive_fraction, fmt("bin off diagonal: %.17g vs %.17g", b.mean_prediction, b.positive_fraction));
  }
  if (v.pass) v.detail = fmt("3 confusion fixtures exact; AUC %.6g equals pair count on 200 points; %.0f bins on diagonal", auc, static_cast<double>(curve.bins.size()));
  return v;
}

Verdict logistic_trainer() {
  Verdict v;
  const auto sep = testing::separable_fixture();
  const auto result = train_logistic(sep.runs, sep.reg, sep.batch, {50, 0.01, 0});
  for (std::size_t e = 1; e < result.losses.size(); ++e) {
    v.require(result.losses[e] < result.losses[e - 1], fmt("loss did not decrease at epoch %.0f (%.17g)", static_cast<double>(e), result.losses[e]));
  }
  const auto p = predict_logistic(result.model, sep.reg, sep.batch);
  const auto truth = GroundTruth::from_records(sep.runs, sep.reg, sep.batch);
  const auto flat = flatten(p, truth);
  const auto m = meta_metrics(flat.predictions, flat.truth);
  v.require(flat.predictions.size() == 100, "fixture is not 100 pairs");
  v.require(m.meta_accuracy == 1.0, fmt("meta-accuracy %.6g", m.meta_accuracy));
  if (v.pass) v.detail = fmt("loss %.6g -> %.6g over 50 epochs, meta-accuracy 1", result.losses.front(), result.losses.back());
  return v;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lmroute");
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

Verdict determinism() {
  Verdict v;
  const auto dir = testing::scratch_dir("acceptance_determinism");
  testing::write_fixture(testing::synthetic_fixture(7, 200), dir);
  const std::vector<std::string> common{"--models", (dir / "models.json").string(), "--queries",
                                        (dir / "queries.jsonl").string(), "--predictions",
                                        (dir / "predictions.jsonl").string()};
  const std::vector<std::vector<std::string>> strategies{
      {"--strategy", "single", "--model-id", "text-curie-001"},
      {"--strategy", "perfmax"},
      {"--strategy", "threshold", "--threshold", "0.6", "--fallback", "largest"},
      {"--strategy", "greedy", "--budget", "0.05"},
      {"--strategy", "cost-ilp", "--budget", "0.05"},
      {"--strategy", "perf-ilp", "--min-performance", "80"},
  };
  int files = 0;
  for (const auto& s : strategies) {
    std::string outputs[2];
    for (int rep = 0; rep < 2; ++rep) {
      const auto out = dir / ("assign" + std::to_string(rep) + ".jsonl");
      const auto summary = dir / ("summary" + std::to_string(rep) + ".json");
      auto args = std::vector<std::string>{"assign"};
      args.insert(args.end(), common.begin(), common.end());
      args.insert(args.end(), s.begin(), s.end());
      args.insert(args.end(), {"--out", out.string(), "--summary", summary.string()});
      v.require(run_cli(args) == 0, "assign failed for " + s[1]);
      outputs[rep] = io::read_file(out) + io::read_file(summary);
    }
    v.require(outputs[0] == outputs[1], "assign output differs for " + s[1]);
    ++files;
  }
  std::string sweeps[2];
  for (int rep = 0; rep < 2; ++rep) {
    const auto out = dir / ("sweep" + std::to_string(rep) + ".csv");
    auto args = std::vector<std::string>{"sweep"};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), {"--runs", (dir / "runs.jsonl").string(), "--budget-min", "0", "--budget-max", "0.2",
                             "--budget-steps", "10", "--out", out.string()});
    v.require(run_cli(args) == 0, "sweep failed");
    sweeps[rep] = io::read_file(out);
  }
  v.require(sweeps[0] == sweeps[1], "sweep output differs");
  if (v.pass) v.detail = std::to_string(files) + " assign strategies and one 10-budget sweep repeat byte for byte";
  return v;
}

Verdict time_limit() {
  Verdict v;
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> cost(0.0001, 0.01), value(0.0, 1.0);
  mckp::Instance inst;
  double total = 0.0;
  for (int g = 0; g < 2000; ++g) {
    auto& group = inst.groups.emplace_back();
    for (int o = 0; o < 4; ++o) {
      group.push_back({o, cost(rng), value(rng)});
      total += group.back().cost;
    }
  }
  inst.direction = mckp::MaxValueUnderCostCap{total / 8.0};
  const auto start = Clock::now();
  const auto s = mckp::solve(inst, {std::chrono::milliseconds(1), mckp::kDefaultTolerance});
  const double elapsed = seconds_since(start);
  v.require(s.status == mckp::SolveStatus::Incumbent, "status was not Incumbent");
  v.require(mckp::is_feasible(inst, s.picks), "incumbent violates the cap");
  v.require(s.objective <= s.bound + 1e-9, fmt("objective %.10g above bound %.10g", s.objective, s.bound));
  v.require(elapsed < 0.001 + 1.0, fmt("returned after %.3f s", elapsed));
  if (v.pass) {
    v.detail = fmt("objective %.6g <= bound %.6g", s.objective, s.bound) + fmt(", returned after %.1f ms", elapsed * 1e3);
  }
  return v;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"ilp-exactness", ilp_exactness},
      {"worked-micro-instance", micro_instance},
      {"strategy-dominance", strategy_dominance},
      {"oracle-properties", oracle_properties},
      {"cost-formula", cost_formula},
      {"metrics-exactness", metrics_exactness},
      {"logistic-trainer", logistic_trainer},
      {"determinism", determinism},
      {"time-limit-feasibility", time_limit},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %-24s %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    failures += v.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
