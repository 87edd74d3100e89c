#include "decor/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "decor/bytes.hpp"
#include "decor/common.hpp"

namespace decor {
namespace {

constexpr int kBorder = 2;  // red frame width, pixels

void cell_color(std::uint8_t cell, std::uint8_t rgb[3]) {
  const std::uint8_t level = cell == kCellNormal ? 128 : cell == kCellDefect ? 255 : 0;
  rgb[0] = rgb[1] = rgb[2] = level;
}

}  // namespace

void render_montage(const Dataset& ds, const Assignments& assignments,
                    const OutlierReport& report, int cluster,
                    const std::filesystem::path& out_path) {
  if (ds.size() != assignments.hard.size()) {
    throw shape_error("dataset and assignment sizes differ");
  }
  if (cluster < 0 || cluster >= assignments.k) {
    throw config_error("unknown cluster id " + std::to_string(cluster + 1) + " (assignment has " +
                       std::to_string(assignments.k) + " clusters)");
  }

  std::vector<int> members;
  for (std::size_t i = 0; i < assignments.hard.size(); ++i) {
    if (assignments.hard[i] == cluster) members.push_back(static_cast<int>(i));
  }
  if (members.empty()) {
    throw config_error("cluster " + std::to_string(cluster + 1) + " has no members");
  }

  const int tile_h = ds.maps[members.front()].height();
  const int tile_w = ds.maps[members.front()].width();
  for (int i : members) {
    if (ds.maps[i].height() != tile_h || ds.maps[i].width() != tile_w) {
      throw shape_error("montage maps must share one grid shape");
    }
  }

  const int count = static_cast<int>(members.size());
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
  const int rows = (count + cols - 1) / cols;
  const int width = cols * tile_w;
  const int height = rows * tile_h;

  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height * 3, 0);
  auto px = [&](int r, int c) { return &pixels[(static_cast<std::size_t>(r) * width + c) * 3]; };

  for (int m = 0; m < count; ++m) {
    const int sample = members[m];
    const WaferMap& map = ds.maps[sample];
    const int r0 = (m / cols) * tile_h;
    const int c0 = (m % cols) * tile_w;
    for (int r = 0; r < tile_h; ++r) {
      for (int c = 0; c < tile_w; ++c) {
        cell_color(map.cells(r, c), px(r0 + r, c0 + c));
      }
    }
    const bool flagged =
        std::binary_search(report.flagged.begin(), report.flagged.end(), sample);
    if (flagged) {
      for (int r = 0; r < tile_h; ++r) {
        for (int c = 0; c < tile_w; ++c) {
          const bool frame = r < kBorder || r >= tile_h - kBorder || c < kBorder ||
                             c >= tile_w - kBorder;
          if (!frame) continue;
          std::uint8_t* p = px(r0 + r, c0 + c);
          p[0] = 255;
          p[1] = 0;
          p[2] = 0;
        }
      }
    }
  }

  const std::string header =
      "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> ppm(header.begin(), header.end());
  ppm.insert(ppm.end(), pixels.begin(), pixels.end());
  write_file_bytes(out_path, ppm);
}

}  // namespace decor
