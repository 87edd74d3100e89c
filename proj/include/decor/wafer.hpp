#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "decor/grid.hpp"

namespace decor {

// Die states on a wafer map.
inline constexpr std::uint8_t kCellOffWafer = 0;
inline constexpr std::uint8_t kCellNormal = 1;
inline constexpr std::uint8_t kCellDefect = 2;

// Base defect types, canonical bit order.
enum class Defect : int {
  Center = 0,
  Donut = 1,
  EdgeLoc = 2,
  EdgeRing = 3,
  Loc = 4,
  NearFull = 5,
  Scratch = 6,
  Random = 7,
};

inline constexpr int kDefectTypeCount = 8;
// Index used for defect-free (normal) wafers when a single category is needed.
inline constexpr int kNormalCategory = 8;

inline const std::array<std::string, kDefectTypeCount>& defect_names() {
  static const std::array<std::string, kDefectTypeCount> names = {
      "center", "donut", "edge-loc", "edge-ring",
      "loc",    "near-full", "scratch", "random"};
  return names;
}

// One bit per base defect type; 0 means a normal (defect-free) pattern.
class DefectLabelSet {
 public:
  DefectLabelSet() = default;
  explicit DefectLabelSet(std::uint8_t mask) : mask_(mask) {}

  std::uint8_t mask() const { return mask_; }
  bool empty() const { return mask_ == 0; }
  bool has(Defect d) const { return (mask_ >> (int)d) & 1u; }
  void add(Defect d) { mask_ |= (std::uint8_t)(1u << (int)d); }

  int count() const {
    int n = 0;
    for (int b = 0; b < kDefectTypeCount; ++b) n += (mask_ >> b) & 1;
    return n;
  }

  std::vector<int> bits() const {
    std::vector<int> out;
    for (int b = 0; b < kDefectTypeCount; ++b)
      if ((mask_ >> b) & 1) out.push_back(b);
    return out;
  }

  bool operator==(const DefectLabelSet&) const = default;

 private:
  std::uint8_t mask_ = 0;
};

struct WaferMap {
  Grid<std::uint8_t> cells;  // values in {0,1,2}
  DefectLabelSet labels;

  int height() const { return cells.height(); }
  int width() const { return cells.width(); }
  bool operator==(const WaferMap&) const = default;
};

// Normalized image with pixels in [0,1].
using ImageTensor = Grid<float>;

struct Dataset {
  std::vector<WaferMap> maps;
  std::string provenance;
  std::uint64_t seed = 0;

  std::size_t size() const { return maps.size(); }
  bool empty() const { return maps.empty(); }
};

}  // namespace decor
