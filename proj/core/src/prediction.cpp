#include "lmroute/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <utility>

#include "lmroute/error.hpp"
#include "lmroute/io.hpp"

namespace lmroute {
namespace {

std::unordered_map<std::string_view, std::size_t> index_queries(std::span<const Query> batch) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t j = 0; j < batch.size(); ++j) index.emplace(batch[j].id, j);
  return index;
}

// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

int binarize(double score) { return score >= kSolveThreshold ? 1 : 0; }

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

struct Sample {
  std::vector<double> x;
  int y = 0;
};

std::vector<Sample> build_samples(std::span<const RunRecord> records, const ModelRegistry& reg,
                                  std::span<const Query> batch) {
  const auto query_index = index_queries(batch);
  std::vector<Sample> samples;
  samples.reserve(records.size());
  for (const auto& r : records) {
    auto q = query_index.find(r.query_id);
    if (q == query_index.end()) throw InputError("run record references unknown query '" + r.query_id + "'");
    const auto model = reg.require_index(r.model_id);
    samples.push_back({featurize(batch[q->second], model, reg), binarize(r.score)});
  }
  return samples;
}

double mean_loss(const LogisticPredictorModel& model, std::span<const Sample> samples) {
  double total = 0.0;
  for (const auto& s : samples) {
    double z = model.bias;
    for (std::size_t f = 0; f < s.x.size(); ++f) z += model.weights[f] * s.x[f];
    total += s.y == 1 ? softplus(-z) : softplus(z);
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void validate_records(std::span<const RunRecord> records) {
  std::set<std::pair<std::string_view, std::string_view>> seen;
  for (const auto& r : records) {
    if (!(r.score >= 0.0 && r.score <= 1.0)) {
      throw InputError("run record (" + r.query_id + ", " + r.model_id + "): score outside [0,1]");
    }
    if (!seen.emplace(r.query_id, r.model_id).second) {
      throw InputError("duplicate run record for query '" + r.query_id + "' and model '" + r.model_id + "'");
    }
  }
}

PredictionMatrix predict_table(std::string_view predictions_jsonl, const ModelRegistry& reg,
                               std::span<const Query> batch) {
  validate_batch(batch);
  const auto k = reg.size();
  const auto m = batch.size();
  const auto query_index = index_queries(batch);
  std::vector<double> values(k * m, 0.0);
  std::vector<bool> seen(k * m, false);

  for (const auto& e : io::parse_prediction_entries(predictions_jsonl)) {
    const auto model = reg.index_of(e.model_id);
    const auto query = query_index.find(e.query_id);
    if (!model || query == query_index.end()) continue;
    if (!(e.p >= 0.0 && e.p <= 1.0)) {
      throw InputError("prediction for model '" + e.model_id + "' and query '" + e.query_id +
                       "' outside [0,1]: " + std::to_string(e.p));
    }
    const auto cell = *model * m + query->second;
    if (seen[cell]) {
      throw InputError("duplicate prediction for model '" + e.model_id + "' and query '" + e.query_id + "'");
    }
    seen[cell] = true;
    values[cell] = e.p;
  }
  for (std::size_t cell = 0; cell < seen.size(); ++cell) {
    if (!seen[cell]) throw MissingPairError(reg[cell / m].id, batch[cell % m].id);
  }
  return PredictionMatrix(k, m, std::move(values));
}

std::vector<std::string> feature_names(const ModelRegistry& reg) {
  std::vector<std::string> names{"log1p_tokens", "log1p_chars", "has_question_mark", "has_digit"};
  for (const auto& m : reg.models()) names.push_back("model=" + m.id);
  return names;
}

std::vector<double> featurize(const Query& q, std::size_t model, const ModelRegistry& reg) {
  std::vector<double> x(kTextFeatureCount + reg.size(), 0.0);
  x[0] = std::log1p(static_cast<double>(count_tokens(q)));
  x[1] = std::log1p(static_cast<double>(utf8_length(q.text)));
  x[2] = q.text.find('?') != std::string::npos ? 1.0 : 0.0;
  x[3] = std::any_of(q.text.begin(), q.text.end(), [](char c) { return c >= '0' && c <= '9'; }) ? 1.0 : 0.0;
  x[kTextFeatureCount + model] = 1.0;
  return x;
}

LogisticPredictorModel LogisticPredictorModel::zeros(const ModelRegistry& reg) {
  LogisticPredictorModel model;
  model.feature_spec = feature_names(reg);
  model.weights.assign(model.feature_spec.size(), 0.0);
  return model;
}

void LogisticPredictorModel::validate() const {
  if (weights.size() != feature_spec.size()) {
    throw InputError("predictor has " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(feature_spec.size()) + " features");
  }
  if (!std::isfinite(bias) || !std::all_of(weights.begin(), weights.end(), [](double w) { return std::isfinite(w); })) {
    throw InputError("predictor parameters must be finite");
  }
}

double LogisticPredictorModel::probability(std::span<const double> features) const {
  if (features.size() != weights.size()) {
    throw InputError("feature vector has " + std::to_string(features.size()) + " entries, model expects " +
                     std::to_string(weights.size()));
  }
  double z = bias;
  for (std::size_t f = 0; f < features.size(); ++f) z += weights[f] * features[f];
  return sigmoid(z);
}

double logistic_loss(const LogisticPredictorModel& model, std::span<const RunRecord> records,
                     const ModelRegistry& reg, std::span<const Query> batch) {
  model.validate();
  const auto samples = build_samples(records, reg, batch);
  if (samples.empty()) throw InputError("no run records");
  return mean_loss(model, samples);
}

TrainingResult train_logistic(std::span<const RunRecord> records, const ModelRegistry& reg,
                              std::span<const Query> batch, const TrainingOptions& options) {
  if (options.epochs < 1) throw InputError("epochs must be >= 1");
  if (!(options.learning_rate > 0.0) || !std::isfinite(options.learning_rate)) {
    throw InputError("learning rate must be a finite positive number");
  }
  validate_batch(batch);
  validate_records(records);
  auto samples = build_samples(records, reg, batch);
  if (samples.empty()) throw InputError("no run records to train on");

  std::mt19937_64 rng(options.seed);
  std::shuffle(samples.begin(), samples.end(), rng);

  TrainingResult result{LogisticPredictorModel::zeros(reg), {}};
  auto& model = result.model;
  const auto dims = model.weights.size();
  const auto n = static_cast<double>(samples.size());
  result.losses.reserve(options.epochs + 1);
  result.losses.push_back(mean_loss(model, samples));

  std::vector<double> grad(dims);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0.0;
    for (const auto& s : samples) {
      double z = model.bias;
      for (std::size_t f = 0; f < dims; ++f) z += model.weights[f] * s.x[f];
      const double err = sigmoid(z) - static_cast<double>(s.y);
      for (std::size_t f = 0; f < dims; ++f) grad[f] += err * s.x[f];
      grad_bias += err;
    }
    for (std::size_t f = 0; f < dims; ++f) model.weights[f] -= options.learning_rate * grad[f] / n;
    model.bias -= options.learning_rate * grad_bias / n;

    const double loss = mean_loss(model, samples);
    if (!std::isfinite(loss) || !std::isfinite(model.bias) ||
        !std::all_of(model.weights.begin(), model.weights.end(), [](double w) { return std::isfinite(w); })) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch), epoch);
    }
    result.losses.push_back(loss);
  }
  return result;
}

PredictionMatrix predict_logistic(const LogisticPredictorModel& model, const ModelRegistry& reg,
                                  std::span<const Query> batch) {
  model.validate();
  if (model.feature_spec != feature_names(reg)) {
    throw InputError("predictor features (" + std::to_string(model.feature_spec.size()) +
                     ") do not match the registry layout (" + std::to_string(kTextFeatureCount + reg.size()) + ")");
  }
  validate_batch(batch);
  const auto k = reg.size();
  const auto m = batch.size();
  std::vector<double> values(k * m);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < m; ++j) values[i * m + j] = model.probability(featurize(batch[j], i, reg));
  }
  return PredictionMatrix(k, m, std::move(values));
}

PredictionMatrix predict_dummy_majority(std::span<const RunRecord> records,
                                        std::span<const Query> training_queries,
                                        std::span<const Query> batch, const ModelRegistry& reg) {
  validate_batch(batch);
  validate_records(records);
  std::unordered_map<std::string_view, std::string_view> dataset_of;
  for (const auto& q : training_queries) {
    if (!q.dataset) throw InputError("training query '" + q.id + "' has no dataset tag");
    dataset_of.emplace(q.id, *q.dataset);
  }

  // (dataset, model) -> (positives, total)
  std::map<std::pair<std::string_view, std::size_t>, std::pair<std::size_t, std::size_t>> groups;
  for (const auto& r : records) {
    auto ds = dataset_of.find(r.query_id);
    if (ds == dataset_of.end()) throw InputError("run record references unknown query '" + r.query_id + "'");
    auto& [pos, total] = groups[{ds->second, reg.require_index(r.model_id)}];
    pos += static_cast<std::size_t>(binarize(r.score));
    ++total;
  }

  const auto k = reg.size();
  const auto m = batch.size();
  std::vector<double> values(k * m);
  for (std::size_t j = 0; j < m; ++j) {
    if (!batch[j].dataset) throw InputError("query '" + batch[j].id + "' has no dataset tag");
    for (std::size_t i = 0; i < k; ++i) {
      auto g = groups.find({*batch[j].dataset, i});
      if (g == groups.end()) {
        throw InputError("no training records for dataset '" + *batch[j].dataset + "' and model '" + reg[i].id + "'");
      }
      const auto [pos, total] = g->second;
      values[i * m + j] = 2 * pos >= total ? 1.0 : 0.0;
    }
  }
  return PredictionMatrix(k, m, std::move(values));
}

}  // namespace lmroute
