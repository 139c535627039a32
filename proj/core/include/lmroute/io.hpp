#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lmroute/prediction.hpp"
#include "lmroute/registry.hpp"

// Readers and writers for the on-disk formats. Parse errors are InputError
// with a "line N:" prefix for line-delimited formats.
namespace lmroute::io {

// JSON array of {"id", "price_per_1k_usd", "avg_output_tokens", "size_rank"}.
ModelRegistry parse_registry(std::string_view json);

// JSONL of {"id", "text", "tokens"?, "dataset"?, "task"?}.
QueryBatch parse_queries(std::string_view jsonl);

struct PredictionEntry {
  std::string query_id;
  std::string model_id;
  double p = 0.0;
};

// JSONL of {"query_id", "model_id", "p"}. Range checks are left to the caller.
std::vector<PredictionEntry> parse_prediction_entries(std::string_view jsonl);

// JSONL of {"query_id", "model_id", "score"}.
std::vector<RunRecord> parse_run_records(std::string_view jsonl);

// JSON {"feature_spec": [...], "weights": [...], "bias": number}.
LogisticPredictorModel parse_logistic_model(std::string_view json);
std::string serialize_logistic_model(const LogisticPredictorModel& model);

// Predictions table, query-major: for each query, one line per model.
std::string serialize_predictions(const PredictionMatrix& p, const ModelRegistry& reg,
                                  std::span<const Query> batch);

// Rounds to the given number of significant decimal digits.
double round_significant(double value, int digits = 10);

// "%.10g"-style text for CSV cells.
std::string format_decimal(double value);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace lmroute::io
