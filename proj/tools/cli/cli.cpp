#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lmroute/error.hpp"
#include "lmroute/evaluation.hpp"
#include "lmroute/io.hpp"
#include "lmroute/prediction.hpp"
#include "lmroute/registry.hpp"
#include "lmroute/strategies.hpp"

namespace lmroute::cli {
namespace {

using ojson = nlohmann::ordered_json;

struct RunConfig {
  std::string models;
  std::string queries;
  std::string predictions;
  std::string predictor;
  std::string runs;
  std::string train_queries;
  std::string assignment;
  std::string out;
  std::string summary;
  bool majority = false;

  std::vector<std::string> strategies;
  std::string model_id;
  double threshold = 0.5;
  std::string fallback = "smallest";
  std::optional<double> budget;
  std::optional<double> min_performance;
  std::optional<long> time_limit_ms;
  double tolerance = mckp::kDefaultTolerance;

  std::vector<double> budgets;
  std::optional<double> budget_min;
  std::optional<double> budget_max;
  std::size_t budget_steps = 20;

  std::string group_by;
  std::size_t n_bins = 10;
  std::uint64_t seed = 0;
  std::size_t epochs = 200;
  double learning_rate = 0.1;

  bool meta = false;
  bool realized = false;
  bool verbose = false;
};

double rounded(double x) { return io::round_significant(x, 10); }

std::optional<std::chrono::milliseconds> time_limit(const RunConfig& cfg) {
  if (!cfg.time_limit_ms) return std::nullopt;
  if (*cfg.time_limit_ms < 0) throw InputError("--time-limit-ms must be nonnegative");
  return std::chrono::milliseconds(*cfg.time_limit_ms);
}

std::string require_path(const std::string& path, const char* flag) {
  if (path.empty()) throw InputError(std::string(flag) + " is required");
  return path;
}

ModelRegistry load_registry(const RunConfig& cfg) {
  return io::parse_registry(io::read_file(require_path(cfg.models, "--models")));
}

QueryBatch load_queries(const std::string& path, const char* flag) {
  auto batch = io::parse_queries(io::read_file(require_path(path, flag)));
  validate_batch(batch);
  return batch;
}

std::vector<RunRecord> load_runs(const RunConfig& cfg) {
  auto runs = io::parse_run_records(io::read_file(require_path(cfg.runs, "--runs")));
  validate_records(runs);
  return runs;
}

PredictionMatrix load_predictions(const RunConfig& cfg, const ModelRegistry& reg, const QueryBatch& batch) {
  const int sources = !cfg.predictor.empty() + !cfg.predictions.empty() + cfg.majority;
  if (sources != 1) throw InputError("give exactly one of --predictions, --predictor, --majority");
  if (!cfg.predictor.empty()) {
    return predict_logistic(io::parse_logistic_model(io::read_file(cfg.predictor)), reg, batch);
  }
  if (!cfg.predictions.empty()) return predict_table(io::read_file(cfg.predictions), reg, batch);
  const auto training = cfg.train_queries.empty() ? batch : load_queries(cfg.train_queries, "--train-queries");
  return predict_dummy_majority(load_runs(cfg), training, batch, reg);
}

std::optional<GroupBy> parse_group_by(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name == "dataset") return GroupBy::Dataset;
  if (name == "task") return GroupBy::Task;
  if (name == "model") return GroupBy::Model;
  throw InputError("unknown --group-by '" + name + "'");
}

StrategySpec make_strategy(const std::string& name, const RunConfig& cfg) {
  const auto need = [](const std::optional<double>& v, const char* flag) {
    if (!v) throw InputError(std::string(flag) + " is required for this strategy");
    return *v;
  };
  StrategySpec spec;
  if (name == "single") {
    if (cfg.model_id.empty()) throw InputError("--model-id is required for strategy 'single'");
    spec = SingleModel{cfg.model_id};
  } else if (name == "perfmax") {
    spec = PerformanceMax{};
  } else if (name == "threshold") {
    if (cfg.fallback != "smallest" && cfg.fallback != "largest") {
      throw InputError("--fallback must be 'smallest' or 'largest'");
    }
    spec = Threshold{cfg.threshold, cfg.fallback == "largest" ? Fallback::Largest : Fallback::Smallest};
  } else if (name == "greedy") {
    spec = Greedy{need(cfg.budget, "--budget")};
  } else if (name == "cost-ilp") {
    spec = CostIlp{need(cfg.budget, "--budget"), time_limit(cfg), cfg.tolerance};
  } else if (name == "perf-ilp") {
    spec = PerfIlp{need(cfg.min_performance, "--min-performance"), time_limit(cfg), cfg.tolerance};
  } else {
    throw InputError("unknown strategy '" + name + "'");
  }
  validate(spec);
  return spec;
}

std::string assignment_jsonl(const AssignmentReport& report, const ModelRegistry& reg, const QueryBatch& batch) {
  std::string text;
  for (const auto& row : report.per_query) {
    ojson line;
    line["query_id"] = batch[row.query].id;
    line["model_id"] = row.model ? ojson(reg[*row.model].id) : ojson(nullptr);
    line["p"] = rounded(row.p);
    line["cost_usd"] = rounded(row.cost);
    text += line.dump() + '\n';
  }
  return text;
}

ojson summary_json(const std::string& strategy, const AssignmentReport& report) {
  ojson s;
  s["strategy"] = strategy;
  s["n_queries"] = report.assignment.choice.size();
  s["n_assigned"] = report.assignment.assigned_count();
  s["total_predicted_performance"] = rounded(report.predicted_total_performance);
  s["total_cost_usd"] = rounded(report.estimated_total_cost);
  s["solver_status"] = to_string(report.solver_status.kind);
  if (report.solver_status.kind == SolverStatus::Kind::Incumbent) s["bound"] = rounded(report.solver_status.bound);
  return s;
}

void print_search(std::ostream& err, const AssignmentReport& report) {
  const auto& st = report.solver_status;
  if (!st.stats) return;
  err << "search: nodes=" << st.stats->nodes << " pruned_by_bound=" << st.stats->pruned_by_bound
      << " pruned_by_capacity=" << st.stats->pruned_by_capacity
      << " incumbent_updates=" << st.stats->incumbent_updates << " groups_fixed=" << st.stats->groups_fixed
      << " elapsed_ms=" << st.stats->elapsed_ms;
  if (st.kind == SolverStatus::Kind::Incumbent) err << " bound=" << st.bound;
  err << '\n';
}

ojson metrics_json(const MetaMetrics& m) {
  ojson j;
  j["n"] = m.n;
  j["meta_accuracy"] = rounded(m.meta_accuracy);
  j["macro_precision"] = rounded(m.macro_precision);
  j["macro_recall"] = rounded(m.macro_recall);
  j["macro_f1"] = rounded(m.macro_f1);
  j["roc_auc"] = m.roc_auc ? ojson(rounded(*m.roc_auc)) : ojson(nullptr);
  j["pr_auc"] = m.pr_auc ? ojson(rounded(*m.pr_auc)) : ojson(nullptr);
  return j;
}

ojson realized_json(const RealizedOutcome& r) {
  ojson j;
  j["n_queries"] = r.n_queries;
  j["n_assigned"] = r.n_assigned;
  j["n_solved"] = r.n_solved;
  j["accuracy"] = rounded(r.accuracy);
  j["accuracy_assigned_only"] = rounded(r.accuracy_assigned_only);
  j["total_cost_usd"] = rounded(r.total_cost_usd);
  j["avg_cost_per_query_usd"] = rounded(r.avg_cost_per_query_usd);
  return j;
}

void emit(const RunConfig& cfg, std::ostream& out, const std::string& content) {
  if (cfg.out.empty()) {
    out << content;
  } else {
    io::write_file_atomic(cfg.out, content);
  }
}

Assignment load_assignment(const std::string& path, const ModelRegistry& reg, const QueryBatch& batch) {
  std::map<std::string, std::optional<std::size_t>> by_query;
  std::istringstream in(io::read_file(require_path(path, "--assignment")));
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto query = j.at("query_id").get<std::string>();
      std::optional<std::size_t> model;
      if (!j.at("model_id").is_null()) model = reg.require_index(j.at("model_id").get<std::string>());
      if (!by_query.emplace(query, model).second) throw InputError("duplicate query '" + query + "'");
    } catch (const nlohmann::json::exception& e) {
      throw InputError("line " + std::to_string(number) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  Assignment a;
  for (const auto& q : batch) {
    const auto it = by_query.find(q.id);
    if (it == by_query.end()) throw InputError("assignment has no entry for query '" + q.id + "'");
    a.choice.push_back(it->second);
  }
  return a;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  const auto reg = load_registry(cfg);
  const auto batch = load_queries(cfg.queries, "--queries");
  const auto p = load_predictions(cfg, reg, batch);
  emit(cfg, out, io::serialize_predictions(p, reg, batch));
  return kOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto reg = load_registry(cfg);
  const auto batch = load_queries(cfg.queries, "--queries");
  const auto runs = load_runs(cfg);
  const auto result = train_logistic(runs, reg, batch, {cfg.epochs, cfg.learning_rate, cfg.seed});
  io::write_file_atomic(require_path(cfg.out, "--out"), io::serialize_logistic_model(result.model));
  out << "initial_loss " << io::format_decimal(result.losses.front()) << '\n'
      << "final_loss " << io::format_decimal(result.losses.back()) << '\n';
  return kOk;
}

int cmd_assign(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.strategies.size() != 1) throw InputError("assign takes exactly one --strategy");
  const auto reg = load_registry(cfg);
  const auto batch = load_queries(cfg.queries, "--queries");
  const auto spec = make_strategy(cfg.strategies.front(), cfg);
  const auto p = load_predictions(cfg, reg, batch);
  const auto c = build_cost_matrix(reg, batch);
  const auto report = route(spec, reg, p, c);

  io::write_file_atomic(require_path(cfg.out, "--out"), assignment_jsonl(report, reg, batch));
  const auto summary = summary_json(strategy_name(spec), report);
  if (!cfg.summary.empty()) io::write_file_atomic(cfg.summary, summary.dump(2) + '\n');
  if (cfg.verbose) print_search(err, report);
  out << summary.dump() << '\n';
  return kOk;
}

std::vector<double> sweep_budgets(const RunConfig& cfg) {
  const bool range = cfg.budget_min || cfg.budget_max;
  if (range == !cfg.budgets.empty()) throw InputError("give either --budgets or --budget-min/--budget-max");
  if (!range) return cfg.budgets;
  if (!cfg.budget_min || !cfg.budget_max) throw InputError("--budget-min and --budget-max go together");
  if (*cfg.budget_max < *cfg.budget_min) throw InputError("--budget-max is below --budget-min");
  if (cfg.budget_steps < 1) throw InputError("--budget-steps must be at least 1");
  if (cfg.budget_steps == 1) return {*cfg.budget_min};
  std::vector<double> budgets;
  const double span = *cfg.budget_max - *cfg.budget_min;
  for (std::size_t s = 0; s < cfg.budget_steps; ++s) {
    budgets.push_back(*cfg.budget_min + span * static_cast<double>(s) / static_cast<double>(cfg.budget_steps - 1));
  }
  return budgets;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  std::vector<std::pair<std::string, CostStrategy>> kinds;
  for (const auto& name : cfg.strategies.empty() ? std::vector<std::string>{"greedy", "cost-ilp"} : cfg.strategies) {
    if (name == "greedy") {
      kinds.emplace_back(name, CostStrategy::Greedy);
    } else if (name == "cost-ilp") {
      kinds.emplace_back(name, CostStrategy::CostIlp);
    } else {
      throw InputError("sweep supports strategies 'greedy' and 'cost-ilp', not '" + name + "'");
    }
  }
  const auto budgets = sweep_budgets(cfg);
  const auto reg = load_registry(cfg);
  const auto batch = load_queries(cfg.queries, "--queries");
  const auto p = load_predictions(cfg, reg, batch);
  const auto c = build_cost_matrix(reg, batch);
  const auto truth = GroundTruth::from_records(load_runs(cfg), reg, batch);
  truth.require_full_coverage();

  std::vector<std::vector<SweepPoint>> curves;
  for (const auto& [name, kind] : kinds) {
    curves.push_back(sweep_cost_strategies(reg, p, c, truth, budgets, kind, CostIlp{0.0, time_limit(cfg), cfg.tolerance}));
  }
  std::string csv = "budget_usd,avg_cost_per_query_usd,accuracy,n_assigned,strategy,accuracy_assigned_only\n";
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    for (std::size_t s = 0; s < kinds.size(); ++s) {
      const auto& pt = curves[s][b];
      csv += io::format_decimal(pt.budget_usd) + ',' + io::format_decimal(pt.avg_cost_per_query_usd) + ',' +
             io::format_decimal(pt.accuracy) + ',' + std::to_string(pt.n_assigned) + ',' + kinds[s].first + ',' +
             io::format_decimal(pt.accuracy_assigned_only) + '\n';
    }
  }
  emit(cfg, out, csv);
  return kOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.meta == cfg.realized) throw InputError("give exactly one of --meta or --realized");
  const auto reg = load_registry(cfg);
  const auto batch = load_queries(cfg.queries, "--queries");
  const auto truth = GroundTruth::from_records(load_runs(cfg), reg, batch);
  const auto group_by = parse_group_by(cfg.group_by);

  ojson doc;
  if (cfg.meta) {
    const auto p = load_predictions(cfg, reg, batch);
    const auto flat = flatten(p, truth);
    doc = metrics_json(meta_metrics(flat.predictions, flat.truth));
    if (group_by) {
      ojson groups = ojson::object();
      for (const auto& [name, m] : stratified_meta_metrics(p, truth, reg, batch, *group_by)) {
        groups[name] = metrics_json(m);
      }
      doc["stratified"] = {{"group_by", to_string(*group_by)}, {"groups", groups}};
    }
  } else {
    const auto assignment = load_assignment(cfg.assignment, reg, batch);
    const auto c = build_cost_matrix(reg, batch);
    doc = realized_json(realized_accuracy_cost(assignment, truth, c));
    if (group_by) {
      ojson groups = ojson::object();
      for (const auto& [name, r] : stratified_realized(assignment, truth, c, reg, batch, *group_by)) {
        groups[name] = realized_json(r);
      }
      doc["stratified"] = {{"group_by", to_string(*group_by)}, {"groups", groups}};
    }
  }
  emit(cfg, out, doc.dump(2) + '\n');
  return kOk;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& out) {
  const auto reg = load_registry(cfg);
  const auto batch = load_queries(cfg.queries, "--queries");
  const auto truth = GroundTruth::from_records(load_runs(cfg), reg, batch);
  truth.require_full_coverage();
  const auto c = build_cost_matrix(reg, batch);
  const auto report = oracle_assign(reg, truth, c);
  io::write_file_atomic(require_path(cfg.out, "--out"), assignment_jsonl(report, reg, batch));
  auto summary = realized_json(realized_accuracy_cost(report.assignment, truth, c));
  if (!cfg.summary.empty()) io::write_file_atomic(cfg.summary, summary.dump(2) + '\n');
  out << summary.dump() << '\n';
  return kOk;
}

std::string calibration_rows(const CalibrationCurve& curve, const std::string& prefix) {
  std::string rows;
  for (const auto& b : curve.bins) {
    rows += prefix + std::to_string(b.index) + ',' + io::format_decimal(b.mean_prediction) + ',' +
            io::format_decimal(b.positive_fraction) + ',' + std::to_string(b.count) + '\n';
  }
  return rows;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out) {
  const auto reg = load_registry(cfg);
  const auto batch = load_queries(cfg.queries, "--queries");
  const auto truth = GroundTruth::from_records(load_runs(cfg), reg, batch);
  const auto p = load_predictions(cfg, reg, batch);
  const auto group_by = parse_group_by(cfg.group_by);
  std::string csv;
  if (group_by) {
    csv = "group,bin,mean_prediction,positive_fraction,count\n";
    for (const auto& [name, curve] : stratified_calibration(p, truth, reg, batch, *group_by, cfg.n_bins)) {
      csv += calibration_rows(curve, name + ',');
    }
  } else {
    const auto flat = flatten(p, truth);
    csv = "bin,mean_prediction,positive_fraction,count\n" +
          calibration_rows(calibration_curve(flat.predictions, flat.truth, cfg.n_bins), "");
  }
  emit(cfg, out, csv);
  return kOk;
}

void add_inputs(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--models", cfg.models, "Model registry (JSON)");
  cmd->add_option("--queries", cfg.queries, "Query batch (JSONL)");
}

void add_prediction_source(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--predictions", cfg.predictions, "Predictions table (JSONL)");
  cmd->add_option("--predictor", cfg.predictor, "Trained logistic predictor (JSON)");
  cmd->add_flag("--majority", cfg.majority, "Per-dataset majority baseline trained on --runs");
  cmd->add_option("--train-queries", cfg.train_queries, "Queries the --majority runs refer to (default --queries)");
}

void add_strategy(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--model-id", cfg.model_id, "Model for strategy 'single'");
  cmd->add_option("--threshold", cfg.threshold, "Qualifying probability for strategy 'threshold'");
  cmd->add_option("--fallback", cfg.fallback, "smallest|largest when no model qualifies");
  cmd->add_option("--budget", cfg.budget, "Total batch budget in USD");
  cmd->add_option("--min-performance", cfg.min_performance, "Required total predicted performance");
  cmd->add_option("--time-limit-ms", cfg.time_limit_ms, "Branch-and-bound time limit");
  cmd->add_option("--tolerance", cfg.tolerance, "Feasibility tolerance");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Cost-aware routing of queries to language models", "lmroute"};
  app.require_subcommand(1);

  auto* predict = app.add_subcommand("predict", "Write a full predictions table");
  add_inputs(predict, cfg);
  add_prediction_source(predict, cfg);
  predict->add_option("--runs", cfg.runs, "Training runs for --majority");
  predict->add_option("--out", cfg.out, "Output file (default stdout)");

  auto* train = app.add_subcommand("train-predictor", "Fit the logistic predictor");
  add_inputs(train, cfg);
  train->add_option("--runs", cfg.runs, "Observed runs (JSONL)");
  train->add_option("--out", cfg.out, "Trained predictor file");
  train->add_option("--epochs", cfg.epochs, "Gradient descent epochs");
  train->add_option("--learning-rate", cfg.learning_rate, "Step size");
  train->add_option("--seed", cfg.seed, "Record shuffling seed");

  auto* assign = app.add_subcommand("assign", "Assign each query to at most one model");
  add_inputs(assign, cfg);
  add_prediction_source(assign, cfg);
  assign->add_option("--runs", cfg.runs, "Training runs for --majority");
  assign->add_option("--strategy", cfg.strategies, "single|perfmax|threshold|greedy|cost-ilp|perf-ilp");
  add_strategy(assign, cfg);
  assign->add_option("--out", cfg.out, "Per-query assignment (JSONL)");
  assign->add_option("--summary", cfg.summary, "Summary file (JSON)");
  assign->add_flag("--verbose", cfg.verbose, "Print search statistics to stderr");

  auto* sweep = app.add_subcommand("sweep", "Realized accuracy and cost over a range of budgets");
  add_inputs(sweep, cfg);
  add_prediction_source(sweep, cfg);
  sweep->add_option("--runs", cfg.runs, "Observed runs (JSONL)");
  sweep->add_option("--strategy", cfg.strategies, "greedy|cost-ilp, repeatable (default both)");
  sweep->add_option("--budgets", cfg.budgets, "Comma-separated total budgets in USD")->delimiter(',');
  sweep->add_option("--budget-min", cfg.budget_min, "Lowest budget of an evenly spaced range");
  sweep->add_option("--budget-max", cfg.budget_max, "Highest budget of the range");
  sweep->add_option("--budget-steps", cfg.budget_steps, "Number of budgets in the range");
  sweep->add_option("--time-limit-ms", cfg.time_limit_ms, "Branch-and-bound time limit per budget");
  sweep->add_option("--tolerance", cfg.tolerance, "Feasibility tolerance");
  sweep->add_option("--out", cfg.out, "Output CSV (default stdout)");

  auto* evaluate = app.add_subcommand("evaluate", "Meta-metrics of predictions or realized outcome of an assignment");
  add_inputs(evaluate, cfg);
  add_prediction_source(evaluate, cfg);
  evaluate->add_option("--runs", cfg.runs, "Observed runs (JSONL)");
  evaluate->add_option("--assignment", cfg.assignment, "Assignment written by 'assign' (for --realized)");
  evaluate->add_flag("--meta", cfg.meta, "Score predictions against observed runs");
  evaluate->add_flag("--realized", cfg.realized, "Score an assignment against observed runs");
  evaluate->add_option("--group-by", cfg.group_by, "dataset|task|model");
  evaluate->add_option("--out", cfg.out, "Output JSON (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "Cheapest solving model per query from observed runs");
  add_inputs(oracle, cfg);
  oracle->add_option("--runs", cfg.runs, "Observed runs (JSONL)");
  oracle->add_option("--out", cfg.out, "Per-query assignment (JSONL)");
  oracle->add_option("--summary", cfg.summary, "Summary file (JSON)");

  auto* calibrate = app.add_subcommand("calibrate", "Reliability curve of predictions");
  add_inputs(calibrate, cfg);
  add_prediction_source(calibrate, cfg);
  calibrate->add_option("--runs", cfg.runs, "Observed runs (JSONL)");
  calibrate->add_option("--n-bins", cfg.n_bins, "Equal-width bins");
  calibrate->add_option("--group-by", cfg.group_by, "dataset|task|model");
  calibrate->add_option("--out", cfg.out, "Output CSV (default stdout)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  try {
    if (predict->parsed()) return cmd_predict(cfg, out);
    if (train->parsed()) return cmd_train(cfg, out);
    if (assign->parsed()) return cmd_assign(cfg, out, err);
    if (sweep->parsed()) return cmd_sweep(cfg, out);
    if (evaluate->parsed()) return cmd_evaluate(cfg, out);
    if (oracle->parsed()) return cmd_oracle(cfg, out);
    if (calibrate->parsed()) return cmd_calibrate(cfg, out);
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << "\nattainable_max " << io::format_decimal(e.attainable()) << '\n';
    return kInfeasible;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace lmroute::cli
