#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "decor/wafer.hpp"

namespace decor {

// Iterative stratification over the label sets. Returns (train, test)
// index lists, each sorted ascending. Deterministic given seed.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const std::vector<DefectLabelSet>& labels, double test_fraction, std::uint64_t seed);

std::pair<Dataset, Dataset> multilabel_stratified_split(const Dataset& ds,
                                                        double test_fraction,
                                                        std::uint64_t seed);

}  // namespace decor
