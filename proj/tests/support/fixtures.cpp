#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "lmroute/io.hpp"

namespace lmroute::testing {

ModelRegistry priced_registry() {
  return ModelRegistry({{"text-ada-001", 0.0004, 6.85, 0},
                        {"text-babbage-001", 0.0005, 7.18, 1},
                        {"text-curie-001", 0.002, 7.01, 2},
                        {"text-davinci-002", 0.02, 8.41, 3}});
}

Fixture micro_fixture() {
  ModelRegistry reg({{"small", 1.0, 0.0, 0}, {"large", 4.0, 0.0, 1}});
  QueryBatch batch{{"q0", "first query", 1000, "alpha", "qa"}, {"q1", "second query", 1000, "beta", "qa"}};
  // Rows = models: small [0.2, 0.5], large [0.9, 0.6].
  PredictionMatrix p(2, 2, {0.2, 0.5, 0.9, 0.6});
  auto c = build_cost_matrix(reg, batch);
  std::vector<RunRecord> runs{{"q0", "small", 0.0}, {"q0", "large", 1.0}, {"q1", "small", 1.0}, {"q1", "large", 1.0}};
  auto truth = GroundTruth::from_records(runs, reg, batch);
  return {std::move(reg), std::move(batch), std::move(runs), std::move(p), std::move(c), std::move(truth)};
}

Fixture synthetic_fixture(std::uint64_t seed, std::size_t queries) {
  auto reg = priced_registry();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.15);
  std::uniform_int_distribution<int> tokens(20, 400);

  static const char* const kDatasets[] = {"arith", "trivia", "sentiment"};
  static const char* const kTasks[] = {"reasoning", "qa", "classification"};
  static const double kAbility[] = {0.35, 0.45, 0.6, 0.8};

  const auto k = reg.size();
  QueryBatch batch;
  std::vector<RunRecord> runs;
  std::vector<double> p(k * queries);
  for (std::size_t j = 0; j < queries; ++j) {
    const auto d = static_cast<std::size_t>(unit(rng) * 3.0) % 3;
    const double difficulty = unit(rng);
    Query q;
    q.id = "q" + std::to_string(j);
    q.text = std::string(kDatasets[d]) + " item " + std::to_string(j) + (d == 0 ? " what is 3+4?" : " text");
    q.token_count = tokens(rng);
    q.dataset = kDatasets[d];
    q.task = kTasks[d];
    for (std::size_t i = 0; i < k; ++i) {
      const bool solved = difficulty + noise(rng) < kAbility[i];
      runs.push_back({q.id, reg[i].id, solved ? 1.0 : 0.0});
      const double z = 6.0 * (kAbility[i] - difficulty) + 2.0 * noise(rng);
      p[i * queries + j] = std::round(sigmoid(z) * 1e6) / 1e6;
    }
    batch.push_back(std::move(q));
  }
  PredictionMatrix pm(k, queries, std::move(p));
  auto c = build_cost_matrix(reg, batch);
  auto truth = GroundTruth::from_records(runs, reg, batch);
  return {std::move(reg), std::move(batch), std::move(runs), std::move(pm), std::move(c), std::move(truth)};
}

Fixture with_perfect_predictions(Fixture f) {
  f.p = f.truth.as_predictions();
  return f;
}

SeparableSet separable_fixture() {
  ModelRegistry reg({{"small", 0.001, 5.0, 0}, {"large", 0.01, 5.0, 1}});
  QueryBatch batch;
  std::vector<RunRecord> runs;
  for (int j = 0; j < 50; ++j) {
    const bool digit = j % 2 == 0;
    // Same length and token count for every query: only the digit separates.
    std::string text = "sample text ";
    text += digit ? std::string(1, static_cast<char>('0' + j % 10)) : std::string(1, static_cast<char>('a' + j % 26));
    Query q{"s" + std::to_string(j), text, 5, "synthetic", "toy"};
    for (const auto& m : reg.models()) runs.push_back({q.id, m.id, digit ? 1.0 : 0.0});
    batch.push_back(std::move(q));
  }
  return {std::move(reg), std::move(batch), std::move(runs)};
}

std::string registry_json(const ModelRegistry& reg) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& m : reg.models()) {
    doc.push_back({{"id", m.id},
                   {"price_per_1k_usd", m.price_per_1k_usd},
                   {"avg_output_tokens", m.avg_output_tokens},
                   {"size_rank", m.size_rank}});
  }
  return doc.dump(2) + "\n";
}

std::string queries_jsonl(const QueryBatch& batch) {
  std::string out;
  for (const auto& q : batch) {
    nlohmann::json line{{"id", q.id}, {"text", q.text}};
    if (q.token_count) line["tokens"] = *q.token_count;
    if (q.dataset) line["dataset"] = *q.dataset;
    if (q.task) line["task"] = *q.task;
    out += line.dump() + "\n";
  }
  return out;
}

std::string runs_jsonl(const std::vector<RunRecord>& runs) {
  std::string out;
  for (const auto& r : runs) {
    out += nlohmann::json{{"query_id", r.query_id}, {"model_id", r.model_id}, {"score", r.score}}.dump() + "\n";
  }
  return out;
}

void write_fixture(const Fixture& f, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "models.json", registry_json(f.reg));
  io::write_file_atomic(dir / "queries.jsonl", queries_jsonl(f.batch));
  io::write_file_atomic(dir / "predictions.jsonl", io::serialize_predictions(f.p, f.reg, f.batch));
  io::write_file_atomic(dir / "runs.jsonl", runs_jsonl(f.runs));
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lmroute_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lmroute::testing
