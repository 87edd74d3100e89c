#include "decor/split.hpp"

#include <algorithm>
#include <array>
#include <cstddef>

#include "decor/common.hpp"

namespace decor {
namespace {

// Pick between train (0) and test (1) by the given scores: larger wins,
// exact ties fall through to the next criterion, the last resort is a coin
// flip from the split's own stream.
int pick_subset(const std::array<double, 2>& primary, const std::array<double, 2>& secondary,
                Rng& rng) {
  if (primary[0] != primary[1]) return primary[0] > primary[1] ? 0 : 1;
  if (secondary[0] != secondary[1]) return secondary[0] > secondary[1] ? 0 : 1;
  return static_cast<int>(rng.below(2));
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split_indices(
    const std::vector<DefectLabelSet>& labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw config_error("test_fraction must lie strictly between 0 and 1");
  }
  if (labels.empty()) {
    throw config_error("cannot split an empty dataset");
  }

  const std::size_t n = labels.size();
  Rng rng(seed);

  // Remaining capacity of each subset, and remaining per-label demand.
  std::array<double, 2> capacity = {static_cast<double>(n) * (1.0 - test_fraction),
                                    static_cast<double>(n) * test_fraction};
  std::array<std::array<double, kDefectTypeCount>, 2> demand{};
  for (const DefectLabelSet& ls : labels) {
    for (int m = 0; m < kDefectTypeCount; ++m) {
      if (ls.has(static_cast<Defect>(m))) {
        demand[0][m] += 1.0 - test_fraction;
        demand[1][m] += test_fraction;
      }
    }
  }

  std::vector<int> assigned(n, -1);
  const auto place = [&](std::size_t i, int subset) {
    assigned[i] = subset;
    capacity[subset] -= 1.0;
    for (int m = 0; m < kDefectTypeCount; ++m) {
      if (labels[i].has(static_cast<Defect>(m))) demand[subset][m] -= 1.0;
    }
  };

  // Labeled examples first: repeatedly take the label with the fewest
  // unassigned examples (lowest index on ties) and deal out its examples.
  for (;;) {
    int scarce = -1;
    std::size_t scarce_count = 0;
    for (int m = 0; m < kDefectTypeCount; ++m) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assigned[i] < 0 && labels[i].has(static_cast<Defect>(m))) ++count;
      }
      if (count > 0 && (scarce < 0 || count < scarce_count)) {
        scarce = m;
        scarce_count = count;
      }
    }
    if (scarce < 0) break;

    const auto label = static_cast<Defect>(scarce);
    for (std::size_t i = 0; i < n; ++i) {
      if (assigned[i] >= 0 || !labels[i].has(label)) continue;
      const std::array<double, 2> label_demand = {demand[0][scarce], demand[1][scarce]};
      place(i, pick_subset(label_demand, capacity, rng));
    }
  }

  // Label-free examples go wherever the most room is left.
  for (std::size_t i = 0; i < n; ++i) {
    if (assigned[i] >= 0) continue;
    place(i, pick_subset(capacity, capacity, rng));
  }

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i) {
    (assigned[i] == 0 ? out.first : out.second).push_back(i);
  }
  return out;
}

std::pair<Dataset, Dataset> multilabel_stratified_split(const Dataset& ds, double test_fraction,
                                                        std::uint64_t seed) {
  std::vector<DefectLabelSet> labels;
  labels.reserve(ds.maps.size());
  for (const WaferMap& map : ds.maps) labels.push_back(map.labels);

  const auto [train_idx, test_idx] = stratified_split_indices(labels, test_fraction, seed);

  const auto take = [&](const std::vector<std::size_t>& idx) {
    Dataset subset;
    subset.provenance = ds.provenance;
    subset.seed = ds.seed;
    subset.maps.reserve(idx.size());
    for (std::size_t i : idx) subset.maps.push_back(ds.maps[i]);
    return subset;
  };
  return {take(train_idx), take(test_idx)};
}

}  // namespace decor
