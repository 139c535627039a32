#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lmroute/evaluation.hpp"
#include "lmroute/grid.hpp"
#include "lmroute/prediction.hpp"
#include "lmroute/registry.hpp"

namespace lmroute::testing {

// Four priced models with nonzero average output lengths.
ModelRegistry priced_registry();

struct Fixture {
  ModelRegistry reg;
  QueryBatch batch;
  std::vector<RunRecord> runs;
  PredictionMatrix p;
  CostMatrix c;
  GroundTruth truth;
};

// Two models with costs 1 and 4 on both queries; values [[0.2,0.9],[0.5,0.6]]
// by query. Truth: q0 solved by the large model only, q1 by both.
Fixture micro_fixture();

// Seeded synthetic pool: priced_registry models, `queries` queries with dataset/task
// tags, latent difficulty driving both truth and noisy predictions.
Fixture synthetic_fixture(std::uint64_t seed, std::size_t queries = 200);

// Same fixture with p replaced by the 0/1 ground truth.
Fixture with_perfect_predictions(Fixture f);

// 50 equal-length queries x 2 models; label = query contains a digit.
struct SeparableSet {
  ModelRegistry reg;
  QueryBatch batch;
  std::vector<RunRecord> runs;
};
SeparableSet separable_fixture();

// models.json, queries.jsonl, predictions.jsonl, runs.jsonl
void write_fixture(const Fixture& f, const std::filesystem::path& dir);

std::string registry_json(const ModelRegistry& reg);
std::string queries_jsonl(const QueryBatch& batch);
std::string runs_jsonl(const std::vector<RunRecord>& runs);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace lmroute::testing
