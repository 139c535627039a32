#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmroute/grid.hpp"

namespace lmroute {

// One candidate model. size_rank orders the pool by capability, 0 = smallest.
struct ModelSpec {
  std::string id;
  double price_per_1k_usd = 0.0;
  double avg_output_tokens = 0.0;
  int size_rank = 0;

  bool operator==(const ModelSpec&) const = default;
};

// Ordered, validated model pool: nonempty, unique ids, nonnegative prices and
// output lengths, size ranks forming a permutation of 0..k-1.
class ModelRegistry {
 public:
  explicit ModelRegistry(std::vector<ModelSpec> models);

  std::size_t size() const noexcept { return models_.size(); }
  const ModelSpec& operator[](std::size_t i) const noexcept { return models_[i]; }
  std::span<const ModelSpec> models() const noexcept { return models_; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  std::size_t require_index(std::string_view id) const;

  // Index of the model with size_rank 0 / size_rank k-1.
  std::size_t smallest() const noexcept { return by_rank_.front(); }
  std::size_t largest() const noexcept { return by_rank_.back(); }

 private:
  std::vector<ModelSpec> models_;
  std::vector<std::size_t> by_rank_;
};

struct Query {
  std::string id;
  std::string text;
  std::optional<std::int64_t> token_count;
  // Reporting tags only; routing never reads them.
  std::optional<std::string> dataset;
  std::optional<std::string> task;
};

using QueryBatch = std::vector<Query>;

// Throws InputError on an empty batch, a duplicate id or a negative token count.
void validate_batch(std::span<const Query> batch);

// Precomputed count when present, otherwise ceil(bytes / 4).
std::int64_t count_tokens(const Query& q);

// USD: price_per_1k * (input tokens + average output tokens) / 1000.
double estimate_cost(const ModelSpec& model, const Query& q);

CostMatrix build_cost_matrix(const ModelRegistry& reg, std::span<const Query> batch);

}  // namespace lmroute
