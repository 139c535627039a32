#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lmroute/error.hpp"

namespace lmroute {

struct CostTag {
  static constexpr const char* kName = "cost";
  static bool admissible(double v) { return std::isfinite(v) && v >= 0.0; }
};

struct PerformanceTag {
  static constexpr const char* kName = "prediction";
  static bool admissible(double v) { return v >= 0.0 && v <= 1.0; }
};

// Dense, immutable (model, query) grid. Row = model, column = query.
// Every entry is checked against Tag::admissible on construction.
template <class Tag>
class ModelQueryGrid {
 public:
  ModelQueryGrid() = default;

  ModelQueryGrid(std::size_t models, std::size_t queries, std::vector<double> values)
      : models_(models), queries_(queries), values_(std::move(values)) {
    if (values_.size() != models_ * queries_) {
      throw InputError(std::string(Tag::kName) + " grid: expected " +
                       std::to_string(models_ * queries_) + " entries, got " +
                       std::to_string(values_.size()));
    }
    for (std::size_t n = 0; n < values_.size(); ++n) {
      if (!Tag::admissible(values_[n])) {
        throw InputError(std::string(Tag::kName) + " entry (model " + std::to_string(n / queries_) +
                         ", query " + std::to_string(n % queries_) +
                         ") out of range: " + std::to_string(values_[n]));
      }
    }
  }

  static ModelQueryGrid filled(std::size_t models, std::size_t queries, double value) {
    return ModelQueryGrid(models, queries, std::vector<double>(models * queries, value));
  }

  std::size_t models() const noexcept { return models_; }
  std::size_t queries() const noexcept { return queries_; }

  double operator()(std::size_t model, std::size_t query) const noexcept {
    return values_[model * queries_ + query];
  }

  std::span<const double> row(std::size_t model) const noexcept {
    return std::span<const double>(values_).subspan(model * queries_, queries_);
  }

  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const ModelQueryGrid&) const = default;

 private:
  std::size_t models_ = 0;
  std::size_t queries_ = 0;
  std::vector<double> values_;
};

using CostMatrix = ModelQueryGrid<CostTag>;
using PredictionMatrix = ModelQueryGrid<PerformanceTag>;

}  // namespace lmroute
