#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmroute/grid.hpp"
#include "lmroute/registry.hpp"

namespace lmroute {

// Labels and the majority baseline binarize scores at this threshold.
inline constexpr double kSolveThreshold = 0.5;

// Observed performance of one model on one query; binary metrics give 0 or 1.
struct RunRecord {
  std::string query_id;
  std::string model_id;
  double score = 0.0;
};

// Throws InputError on a score outside [0,1] or a repeated (query, model) pair.
void validate_records(std::span<const RunRecord> records);

// Looks up every (model, query) pair in a predictions table (JSONL content).
// Entries for pairs outside the registry/batch are ignored.
// Throws MissingPairError for an absent pair, InputError for p outside [0,1].
PredictionMatrix predict_table(std::string_view predictions_jsonl, const ModelRegistry& reg,
                               std::span<const Query> batch);

// Feature layout shared by the featurizer and trained models.
std::vector<std::string> feature_names(const ModelRegistry& reg);
inline constexpr std::size_t kTextFeatureCount = 4;

// [log(1+tokens), log(1+chars), has '?', has digit, one-hot model (k entries)].
std::vector<double> featurize(const Query& q, std::size_t model, const ModelRegistry& reg);

struct LogisticPredictorModel {
  std::vector<std::string> feature_spec;
  std::vector<double> weights;
  double bias = 0.0;

  // Zero weights over the registry's feature layout.
  static LogisticPredictorModel zeros(const ModelRegistry& reg);

  // Throws InputError when lengths differ or a parameter is non-finite.
  void validate() const;

  // sigmoid(w . x + b); x must have feature_spec.size() entries.
  double probability(std::span<const double> features) const;

  bool operator==(const LogisticPredictorModel&) const = default;
};

double sigmoid(double z);

struct TrainingOptions {
  std::size_t epochs = 200;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
};

struct TrainingResult {
  LogisticPredictorModel model;
  // losses[0] is the loss of the zero model; losses[e] the loss after epoch e.
  std::vector<double> losses;
};

// Mean logistic loss over records (labels binarized at kSolveThreshold).
double logistic_loss(const LogisticPredictorModel& model, std::span<const RunRecord> records,
                     const ModelRegistry& reg, std::span<const Query> batch);

// Full-batch gradient descent from zero weights. The seed only fixes the
// record visiting order. Throws InputError on unknown ids or bad options,
// NumericalError when the loss becomes non-finite.
TrainingResult train_logistic(std::span<const RunRecord> records, const ModelRegistry& reg,
                              std::span<const Query> batch, const TrainingOptions& options);

// Throws InputError when the model's feature layout does not fit the registry.
PredictionMatrix predict_logistic(const LogisticPredictorModel& model, const ModelRegistry& reg,
                                  std::span<const Query> batch);

// Per (dataset, model) majority label of the training records, ties toward 1.
// Every query needs a dataset tag, and training must cover each group used.
PredictionMatrix predict_dummy_majority(std::span<const RunRecord> records,
                                        std::span<const Query> training_queries,
                                        std::span<const Query> batch, const ModelRegistry& reg);

struct CalibrationBin {
  std::size_t index = 0;
  double mean_prediction = 0.0;
  double positive_fraction = 0.0;
  std::size_t count = 0;

  bool operator==(const CalibrationBin&) const = default;
};

struct CalibrationCurve {
  std::size_t n_bins = 0;
  std::vector<CalibrationBin> bins;  // populated bins only, by index
};

// Equal-width bins [b/n, (b+1)/n), the last one closed at 1.
CalibrationCurve calibration_curve(std::span<const double> predictions,
                                   std::span<const int> outcomes, std::size_t n_bins = 10);

}  // namespace lmroute
