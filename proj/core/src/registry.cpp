#include "lmroute/registry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lmroute/error.hpp"

namespace lmroute {

ModelRegistry::ModelRegistry(std::vector<ModelSpec> models) : models_(std::move(models)) {
  if (models_.empty()) throw InputError("model registry is empty");

  const auto k = models_.size();
  std::unordered_set<std::string> ids;
  by_rank_.assign(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& m = models_[i];
    if (m.id.empty()) throw InputError("model " + std::to_string(i) + " has an empty id");
    if (!ids.insert(m.id).second) throw InputError("duplicate model id '" + m.id + "'");
    if (!std::isfinite(m.price_per_1k_usd) || m.price_per_1k_usd < 0.0) {
      throw InputError("model '" + m.id + "': price_per_1k_usd must be finite and >= 0");
    }
    if (!std::isfinite(m.avg_output_tokens) || m.avg_output_tokens < 0.0) {
      throw InputError("model '" + m.id + "': avg_output_tokens must be finite and >= 0");
    }
    if (m.size_rank < 0 || static_cast<std::size_t>(m.size_rank) >= k) {
      throw InputError("model '" + m.id + "': size_rank must lie in 0.." + std::to_string(k - 1));
    }
    auto& slot = by_rank_[static_cast<std::size_t>(m.size_rank)];
    if (slot != k) {
      throw InputError("models '" + models_[slot].id + "' and '" + m.id + "' share size_rank " +
                       std::to_string(m.size_rank));
    }
    slot = i;
  }
}

std::optional<std::size_t> ModelRegistry::index_of(std::string_view id) const {
  auto it = std::find_if(models_.begin(), models_.end(), [&](const ModelSpec& m) { return m.id == id; });
  if (it == models_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - models_.begin());
}

std::size_t ModelRegistry::require_index(std::string_view id) const {
  if (auto i = index_of(id)) return *i;
  throw InputError("unknown model id '" + std::string(id) + "'");
}

void validate_batch(std::span<const Query> batch) {
  if (batch.empty()) throw InputError("query batch is empty");
  std::unordered_set<std::string_view> ids;
  for (const auto& q : batch) {
    if (!ids.insert(q.id).second) throw InputError("duplicate query id '" + q.id + "'");
    if (q.token_count && *q.token_count < 0) {
      throw InputError("query '" + q.id + "': token count must be >= 0");
    }
  }
}

std::int64_t count_tokens(const Query& q) {
  if (q.token_count) return *q.token_count;
  const auto bytes = static_cast<std::int64_t>(q.text.size());
  return (bytes + 3) / 4;
}

double estimate_cost(const ModelSpec& model, const Query& q) {
  const double tokens = static_cast<double>(count_tokens(q)) + model.avg_output_tokens;
  return model.price_per_1k_usd * tokens / 1000.0;
}

CostMatrix build_cost_matrix(const ModelRegistry& reg, std::span<const Query> batch) {
  validate_batch(batch);
  const auto k = reg.size();
  const auto m = batch.size();
  std::vector<double> values(k * m);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < m; ++j) values[i * m + j] = estimate_cost(reg[i], batch[j]);
  }
  return CostMatrix(k, m, std::move(values));
}

}  // namespace lmroute
