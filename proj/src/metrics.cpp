#include "ltl/metrics.hpp"

namespace ltl {

ConfusionMatrix confusion_matrix(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) throw ContractError("confusion_matrix: length mismatch");
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= kNumClasses || predicted[i] >= kNumClasses)
      throw ContractError("confusion_matrix: label out of range");
    ++m[truth[i]][predicted[i]];
  }
  return m;
}

Scores score(const ConfusionMatrix& m) {
  std::size_t total = 0, trace = 0;
  for (std::size_t r = 0; r < kNumClasses; ++r) {
    trace += m[r][r];
    for (std::size_t c = 0; c < kNumClasses; ++c) total += m[r][c];
  }
  if (total == 0) throw ContractError("score: empty confusion matrix");

  double f1_sum = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      row += m[k][j];
      col += m[j][k];
    }
    const double tp = static_cast<double>(m[k][k]);
    const double precision = col ? tp / static_cast<double>(col) : 0.0;
    const double recall = row ? tp / static_cast<double>(row) : 0.0;
    f1_sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return Scores{static_cast<double>(trace) / static_cast<double>(total), f1_sum / kNumClasses};
}

}  // namespace ltl
