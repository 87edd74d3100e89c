#pragma once

#include <cstdint>
#include <vector>

#include "decor/common.hpp"
#include "decor/wafer.hpp"

namespace decor {

struct PatternSpec {
  DefectLabelSet combo;  // empty mask = normal wafer
  int count = 0;
};

// Geometry knobs for the drawn patterns, as fractions of the wafer
// radius unless noted. Defaults emulate the usual look of each class.
struct PatternGeometry {
  double center_radius = 0.25;
  double donut_inner = 0.35;
  double donut_outer = 0.60;
  int ring_thickness_min = 2;   // dies
  int ring_thickness_max = 3;
  double edge_loc_span_min = 0.70;  // radians
  double edge_loc_span_max = 1.40;
  int edge_loc_thickness_min = 2;  // dies
  int edge_loc_thickness_max = 4;
  double loc_radius_min = 0.10;
  double loc_radius_max = 0.18;
  double near_full_min = 0.90;
  double near_full_max = 0.98;
  int scratch_width_min = 1;  // dies
  int scratch_width_max = 2;
  double scratch_length_min = 0.8;
  double scratch_length_max = 1.6;
  double random_rate = 0.10;
};

struct GeneratorSpec {
  int size = 32;                      // dies per side, even, >= 16
  std::vector<PatternSpec> patterns;  // ordered; drawn in order
  double noise_rate = 0.0;            // fraction of on-wafer dies flipped
  PatternGeometry geometry;
};

// Deterministic for fixed (spec, seed). Every pattern is stamped at a
// uniformly random D4 orientation; Scratch/Loc/Edge-Loc additionally
// draw a continuous placement angle.
Dataset generate_synthetic(const GeneratorSpec& spec, std::uint64_t seed);

// True if the die at (r,c) lies inside the inscribed wafer disk.
bool on_wafer(int size, int r, int c);

}  // namespace decor
