#include <algorithm>
#include <cmath>

#include "lmroute/error.hpp"
#include "lmroute/prediction.hpp"

namespace lmroute {

CalibrationCurve calibration_curve(std::span<const double> predictions, std::span<const int> outcomes,
                                   std::size_t n_bins) {
  if (predictions.size() != outcomes.size()) {
    throw InputError("calibration: " + std::to_string(predictions.size()) + " predictions but " +
                     std::to_string(outcomes.size()) + " outcomes");
  }
  if (predictions.empty()) throw InputError("calibration: empty input");
  if (n_bins < 1) throw InputError("calibration: n_bins must be >= 1");

  std::vector<double> sum(n_bins, 0.0);
  std::vector<std::size_t> positives(n_bins, 0);
  std::vector<std::size_t> count(n_bins, 0);
  const auto width = static_cast<double>(n_bins);
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    const double p = predictions[n];
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("calibration: prediction outside [0,1]");
    if (outcomes[n] != 0 && outcomes[n] != 1) throw InputError("calibration: outcomes must be 0 or 1");
    const auto b = std::min(static_cast<std::size_t>(std::floor(p * width)), n_bins - 1);
    sum[b] += p;
    positives[b] += static_cast<std::size_t>(outcomes[n]);
    ++count[b];
  }

  CalibrationCurve curve{n_bins, {}};
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    const auto c = static_cast<double>(count[b]);
    curve.bins.push_back({b, sum[b] / c, static_cast<double>(positives[b]) / c, count[b]});
  }
  return curve;
}

}  // namespace lmroute
