#include "lmroute/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "lmroute/error.hpp"

namespace lmroute::io {
namespace {

using nlohmann::json;

[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
  throw InputError("line " + std::to_string(line) + ": " + msg);
}

// Calls fn(object, line_number) for every non-blank line.
template <class Fn>
void for_each_jsonl_object(std::string_view content, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_line(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) fail_line(line_no, "expected a JSON object");
    fn(obj, line_no);
  }
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    fail_line(line, std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

double require_number(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    fail_line(line, std::string("field '") + key + "' must be a number");
  }
  return it->get<double>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail_line(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

json parse_document(std::string_view content) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

ModelRegistry parse_registry(std::string_view content) {
  const auto doc = parse_document(content);
  if (!doc.is_array()) throw InputError("model registry must be a JSON array");
  std::vector<ModelSpec> models;
  for (std::size_t n = 0; n < doc.size(); ++n) {
    const auto& obj = doc[n];
    // Entries are numbered from 1, like lines.
    if (!obj.is_object()) fail_line(n + 1, "model entry must be an object");
    ModelSpec m;
    m.id = require_string(obj, "id", n + 1);
    m.price_per_1k_usd = require_number(obj, "price_per_1k_usd", n + 1);
    m.avg_output_tokens = require_number(obj, "avg_output_tokens", n + 1);
    auto rank = obj.find("size_rank");
    if (rank == obj.end() || !rank->is_number_integer()) fail_line(n + 1, "field 'size_rank' must be an integer");
    m.size_rank = rank->get<int>();
    models.push_back(std::move(m));
  }
  return ModelRegistry(std::move(models));
}

QueryBatch parse_queries(std::string_view content) {
  QueryBatch batch;
  for_each_jsonl_object(content, [&](const json& obj, std::size_t line) {
    Query q;
    q.id = require_string(obj, "id", line);
    q.text = require_string(obj, "text", line);
    if (auto it = obj.find("tokens"); it != obj.end() && !it->is_null()) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
        fail_line(line, "field 'tokens' must be a nonnegative integer");
      }
      q.token_count = it->get<std::int64_t>();
    }
    q.dataset = optional_string(obj, "dataset", line);
    q.task = optional_string(obj, "task", line);
    batch.push_back(std::move(q));
  });
  validate_batch(batch);
  return batch;
}

std::vector<PredictionEntry> parse_prediction_entries(std::string_view content) {
  std::vector<PredictionEntry> entries;
  for_each_jsonl_object(content, [&](const json& obj, std::size_t line) {
    entries.push_back({require_string(obj, "query_id", line), require_string(obj, "model_id", line),
                       require_number(obj, "p", line)});
  });
  return entries;
}

std::vector<RunRecord> parse_run_records(std::string_view content) {
  std::vector<RunRecord> records;
  for_each_jsonl_object(content, [&](const json& obj, std::size_t line) {
    RunRecord r{require_string(obj, "query_id", line), require_string(obj, "model_id", line),
                require_number(obj, "score", line)};
    if (!(r.score >= 0.0 && r.score <= 1.0)) fail_line(line, "score must lie in [0,1]");
    records.push_back(std::move(r));
  });
  validate_records(records);
  return records;
}

LogisticPredictorModel parse_logistic_model(std::string_view content) {
  const auto doc = parse_document(content);
  LogisticPredictorModel model;
  try {
    model.feature_spec = doc.at("feature_spec").get<std::vector<std::string>>();
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.bias = doc.at("bias").get<double>();
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid predictor file: ") + e.what());
  }
  model.validate();
  return model;
}

std::string serialize_logistic_model(const LogisticPredictorModel& model) {
  // Full precision so a reloaded model predicts identically.
  json doc;
  doc["feature_spec"] = model.feature_spec;
  doc["weights"] = model.weights;
  doc["bias"] = model.bias;
  return doc.dump(2) + "\n";
}

std::string serialize_predictions(const PredictionMatrix& p, const ModelRegistry& reg,
                                  std::span<const Query> batch) {
  std::string out;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    for (std::size_t i = 0; i < reg.size(); ++i) {
      nlohmann::ordered_json line;
      line["query_id"] = batch[j].id;
      line["model_id"] = reg[i].id;
      line["p"] = round_significant(p(i, j));
      out += line.dump();
      out += '\n';
    }
  }
  return out;
}

double round_significant(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

std::string format_decimal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw InputError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot replace '" + path.string() + "'");
  }
}

}  // namespace lmroute::io
