#pragma once

#include <string>
#include <vector>

#include "urlformer/train.hpp"

namespace urlformer {

// Self-contained SVG line charts over the epoch history: train and
// validation accuracy, train and validation loss. Deterministic output.
std::string accuracy_svg(const std::vector<EpochRecord>& history);
std::string loss_svg(const std::vector<EpochRecord>& history);

}  // namespace urlformer
