#include "decor/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "decor/common.hpp"

namespace decor {

std::vector<double> gaussian_taps(int kernel, double sigma) {
  if (kernel < 1 || kernel % 2 == 0)
    throw config_error("blur kernel must be odd and positive, got " + std::to_string(kernel));
  if (sigma <= 0.0) throw config_error("blur sigma must be positive");
  const int half = kernel / 2;
  std::vector<double> taps((std::size_t)kernel);
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    double w = std::exp(-(double)(i * i) / (2.0 * sigma * sigma));
    taps[(std::size_t)(i + half)] = w;
    sum += w;
  }
  for (auto& w : taps) w /= sum;
  return taps;
}

namespace {

// Symmetric reflection: ... 1 0 | 0 1 ... n-2 n-1 | n-1 n-2 ...
int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

}  // namespace

ImageTensor gaussian_blur(const ImageTensor& img, int kernel, double sigma) {
  if (kernel <= 1) return img;
  const auto taps = gaussian_taps(kernel, sigma);
  const int half = kernel / 2;
  const int h = img.height(), w = img.width();

  ImageTensor rows(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t)
        acc += taps[(std::size_t)(t + half)] * img(r, reflect(c + t, w));
      rows(r, c) = (float)acc;
    }

  ImageTensor out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t)
        acc += taps[(std::size_t)(t + half)] * rows(reflect(r + t, h), c);
      out(r, c) = (float)acc;
    }
  return out;
}

ImageTensor normalize_and_mask(const WaferMap& map, const MaskBlurConfig& cfg) {
  const int h = map.height(), w = map.width();
  ImageTensor img(h, w);
  const double half_h = h / 2.0, half_w = w / 2.0;
  const double radius = std::min(half_h, half_w) - cfg.edge_margin;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double x = c + 0.5 - half_w, y = r + 0.5 - half_h;
      if (x * x + y * y > radius * radius)
        img(r, c) = 0.0f;
      else
        img(r, c) = (float)map.cells(r, c) * 0.5f;
    }
  return gaussian_blur(img, cfg.blur_kernel, cfg.blur_sigma);
}

ImageTensor resize_nearest(const ImageTensor& img, int target) {
  if (target < 8) throw config_error("resize target must be >= 8, got " + std::to_string(target));
  const int h = img.height(), w = img.width();
  if (h == target && w == target) return img;
  ImageTensor out(target, target);
  for (int r = 0; r < target; ++r) {
    int sr = (int)((std::int64_t)r * h / target);
    for (int c = 0; c < target; ++c) {
      int sc = (int)((std::int64_t)c * w / target);
      out(r, c) = img(sr, sc);
    }
  }
  return out;
}

ImageTensor preprocess_map(const WaferMap& map, const ImageConfig& cfg) {
  MaskBlurConfig native{/*blur_kernel=*/0, /*blur_sigma=*/1.0, cfg.edge_margin};
  ImageTensor img = normalize_and_mask(map, native);
  img = resize_nearest(img, cfg.target_size);
  return gaussian_blur(img, cfg.blur_kernel, cfg.blur_sigma);
}

std::vector<ImageTensor> preprocess_dataset(const Dataset& ds, const ImageConfig& cfg) {
  std::vector<ImageTensor> out(ds.size());
  parallel_for(ds.size(), [&](std::size_t i) { out[i] = preprocess_map(ds.maps[i], cfg); });
  return out;
}

}  // namespace decor
