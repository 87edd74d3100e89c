#pragma once

#include <vector>

#include "decor/wafer.hpp"

namespace decor {

// Parameters for normalize_and_mask. blur_kernel of 0 or 1 disables the
// blur; otherwise the kernel must be odd.
struct MaskBlurConfig {
  int blur_kernel = 5;
  double blur_sigma = 1.0;
  int edge_margin = 2;  // dies trimmed off the wafer radius
};

// Full per-map preprocessing used by the pipeline: scale + edge mask at
// native resolution, nearest-neighbor resize, then blur at target size.
struct ImageConfig {
  int target_size = 32;
  int edge_margin = 2;
  int blur_kernel = 5;
  double blur_sigma = 1.0;
};

// Normalized 1-D Gaussian taps (sum 1), kernel must be odd and >= 1.
std::vector<double> gaussian_taps(int kernel, double sigma);

// Separable Gaussian blur with symmetric (reflect) border handling.
ImageTensor gaussian_blur(const ImageTensor& img, int kernel, double sigma);

// Cells scaled {0,1,2} -> {0, 0.5, 1}, pixels outside the inscribed
// circle of radius (min(h,w)/2 - edge_margin) zeroed, then blurred.
ImageTensor normalize_and_mask(const WaferMap& map, const MaskBlurConfig& cfg);

// Nearest-neighbor resampling to target x target; target >= 8.
ImageTensor resize_nearest(const ImageTensor& img, int target);

ImageTensor preprocess_map(const WaferMap& map, const ImageConfig& cfg);

// Order-preserving; per-map work may run on multiple workers.
std::vector<ImageTensor> preprocess_dataset(const Dataset& ds, const ImageConfig& cfg);

}  // namespace decor
