#pragma once

#include <functional>
#include <span>
#include <vector>

#include "spectralx/classifier.hpp"

namespace spectralx::detail {

// Target-class probability for `rows` signals produced on demand by `fill`,
// queried in chunks of at most `chunk` rows.
std::vector<double> target_probabilities(const Classifier& model, int target, std::size_t rows,
                                         std::size_t length, std::size_t chunk,
                                         const std::function<void(std::size_t, std::span<double>)>& fill);

}  // namespace spectralx::detail
