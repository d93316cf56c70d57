#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "ltl/types.hpp"

namespace ltl {

// Rows are true labels, columns predictions.
using ConfusionMatrix = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

struct Scores {
  double micro_f1 = 0.0;  // equals accuracy for single-label multi-class data
  double macro_f1 = 0.0;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);
Scores score(const ConfusionMatrix& m);

}  // namespace ltl
